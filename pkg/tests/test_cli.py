import json
import os
import subprocess
import sys

import numpy as np
import pytest

from silrender import io as sio
from silrender.cli import load_targets, main

SMALL = ["--resolution", "32", "32"]


def _files(d):
    return {name: (d / name).read_bytes() for name in sorted(os.listdir(d))}


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["gen-data", "--out", str(out), *SMALL]) == 0
    return out


def test_unknown_flag_is_usage_error(capsys):
    assert main(["render", "--out", "x.pgm", "--unknown-flag"]) == 2
    assert "unrecognized arguments" in capsys.readouterr().err
    assert main([]) == 2
    assert main(["fly"]) == 2


def test_help_exits_zero():
    assert main(["--help"]) == 0
    r = subprocess.run([sys.executable, "-m", "silrender", "gradmap", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "--param" in r.stdout


def test_gen_data_outputs(data):
    meta = json.loads((data / "cameras.json").read_text())
    assert len(meta["cameras"]) == 4 and len(meta["views"]) == 4
    assert meta["render"]["H"] == 32
    for v in meta["views"]:
        assert (data / v["pgm"]).exists() and (data / v["f32"]).exists()
    assert (data / "truth.obj").exists()
    targets, _ = load_targets(str(data))
    assert targets.shape == (32, 32) and targets.images[0].data.max() == 1.0


def test_gen_data_is_reproducible(data, tmp_path):
    assert main(["gen-data", "--out", str(tmp_path), *SMALL, "--threads", "2"]) == 0
    assert _files(tmp_path) == _files(data)


def test_fit_from_truth_starts_at_zero(data, tmp_path, capsys):
    for cmd in ("fit-pose", "fit-rigid"):
        out = tmp_path / cmd
        assert main([cmd, "--data", str(data), "--out", str(out), "--init", "truth", "--iterations", "2",
                     *SMALL]) == 0
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "iteration,E,E_sl,E_p,wall_ms"
        assert float(lines[1].split(",")[2]) < 1e-6
        assert {"final.obj", "params.json", "overlay_00.png"} <= set(os.listdir(out))


def test_fit_pose_reproducible(data, tmp_path):
    args = ["fit-pose", "--data", str(data), "--iterations", "5", "--alpha", "0.01", "--seed", "3",
            "--no-timing", *SMALL]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")
    assert (tmp_path / "a" / "trace.csv").read_text().splitlines()[0] == "iteration,E,E_sl,E_p"
    assert main([*args[:-4], "--seed", "4", "--no-timing", *SMALL, "--out", str(tmp_path / "c")]) == 0
    assert _files(tmp_path / "a")["params.json"] != _files(tmp_path / "c")["params.json"]


def test_fit_rigid_triangle_config(tmp_path):
    cam = {"kind": "orthographic", "rotation": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "translation": [0, 0, 0],
           "focal": 1.0, "principal_point": [0, 0], "image_size": [48, 48]}
    cfg = {"mesh": {"triangle": [[10, 12, 0], [40, 18, 0], [22, 45, 0]]}, "cameras": {"list": [cam]},
           "render": {"H": 48, "W": 48}, "objective": {"lambda": 0.0},
           "optimizer": {"alpha": 0.05, "iterations": 200},
           "init": {"translation": [3.0, 4.0, 0.0], "free": ["tx", "ty"]}}
    (tmp_path / "tri.json").write_text(json.dumps(cfg))
    assert main(["fit-rigid", "--config", str(tmp_path / "tri.json"), "--out", str(tmp_path / "o")]) == 0
    params = json.loads((tmp_path / "o" / "params.json").read_text())
    assert np.hypot(params["tx"], params["ty"]) < 0.1 and params["tz"] == 0.0


def test_render_outputs(tmp_path):
    base = str(tmp_path / "r")
    assert main(["render", "--out", base + ".pgm", "--png", base + ".png", "--float-dump", base + ".f32",
                 "--view", "1", "--F", "2", *SMALL]) == 0
    f = sio.read_float_dump(base + ".f32", (32, 32))
    assert f.max() == 1.0 and f.min() == 0.0
    assert set(np.unique(f * 4)) <= set(range(5))
    np.testing.assert_allclose(sio.read_pgm(base + ".pgm"), f, atol=0.5 / 255 + 1e-7)


def test_gradmap(tmp_path, capsys):
    for p in ("tx", "ty", "rot", "scale"):
        assert main(["gradmap", "--param", p, "--out", str(tmp_path / p), *SMALL]) == 0
    tx = sio.read_float_dump(tmp_path / "tx.f32", (32, 32))
    sc = sio.read_float_dump(tmp_path / "scale.f32", (32, 32))
    assert abs(tx.sum()) < 1e-3 * np.abs(tx).sum()
    assert sc.sum() > 0 and sc.min() > -0.5 * sc.max()
    assert (tmp_path / "rot.png").exists()
    assert main(["gradmap", "--param", "shear", "--out", str(tmp_path / "x")]) == 2


def test_gradcheck_command(capsys):
    assert main(["gradcheck", "--scale", "0.02"]) == 0
    out = capsys.readouterr().out
    assert "max rel. err" in out and "FAIL" not in out


def test_config_errors_exit_2(tmp_path, capsys):
    (tmp_path / "bad.json").write_text(json.dumps({"render": {"F": 0}}))
    assert main(["render", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "x.pgm")]) == 2
    assert "render.F" in capsys.readouterr().err
    assert main(["render", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x.pgm")]) == 2
    assert main(["render", "--view", "9", "--out", str(tmp_path / "x.pgm"), *SMALL]) == 2
    (tmp_path / "tri.json").write_text(json.dumps({"mesh": {"triangle": [[0, 0, 0], [1, 0, 0], [0, 1, 0]]}}))
    assert main(["fit-pose", "--config", str(tmp_path / "tri.json"), "--out", str(tmp_path / "o")]) == 2
    (tmp_path / "free.json").write_text(json.dumps({"init": {"free": ["warp"]}}))
    assert main(["fit-rigid", "--config", str(tmp_path / "free.json"), "--out", str(tmp_path / "o")]) == 2
    assert main(["render", "--F", "0", "--out", str(tmp_path / "x.pgm")]) == 2
    assert not (tmp_path / "x.pgm").exists()


def test_runtime_errors_exit_1(tmp_path, capsys):
    (tmp_path / "close.json").write_text(json.dumps({"cameras": {"turntable": {"radius": 0.05}}}))
    assert main(["render", "--config", str(tmp_path / "close.json"), "--out", str(tmp_path / "x.pgm")]) == 1
    assert "behind the camera" in capsys.readouterr().err
    assert main(["fit-pose", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 1
