import os

import numpy as np
import pytest

from silrender import io as sio
from silrender.optim import FitRecord


def test_pgm_round_trip(tmp_path, rng):
    data = rng.uniform(size=(5, 7))
    sio.write_pgm(tmp_path / "a.pgm", data)
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n7 5\n255\n") and len(raw) == len(b"P5\n7 5\n255\n") + 35
    back = sio.read_pgm(tmp_path / "a.pgm")
    np.testing.assert_allclose(back, data, atol=0.5 / 255 + 1e-12)


def test_pgm_levels_and_comments(tmp_path):
    sio.write_pgm(tmp_path / "a.pgm", [[0.2, 0.6]], lo=0.2, hi=0.6)
    np.testing.assert_array_equal(sio.read_pgm(tmp_path / "a.pgm"), [[0.0, 1.0]])
    (tmp_path / "c.pgm").write_bytes(b"P5\n# note\n2 1\n255\n\x00\xff")
    np.testing.assert_array_equal(sio.read_pgm(tmp_path / "c.pgm"), [[0.0, 1.0]])
    (tmp_path / "d.pgm").write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(ValueError):
        sio.read_pgm(tmp_path / "d.pgm")


def test_float_dump(tmp_path, rng):
    data = rng.normal(size=(3, 4))
    sio.write_float_dump(tmp_path / "x.f32", data)
    raw = (tmp_path / "x.f32").read_bytes()
    assert len(raw) == 48
    assert raw[:4] == np.float32(data[0, 0]).astype("<f4").tobytes()
    np.testing.assert_array_equal(sio.read_float_dump(tmp_path / "x.f32", (3, 4)), data.astype(np.float32))


def test_png_outputs(tmp_path):
    pytest.importorskip("PIL")
    from PIL import Image

    sio.write_png(tmp_path / "g.png", [[0.0, 1.0]])
    assert np.asarray(Image.open(tmp_path / "g.png")).tolist() == [[0, 255]]
    sio.write_gradient_png(tmp_path / "d.png", [[-2.0, 0.0, 1.0]])
    rgb = np.asarray(Image.open(tmp_path / "d.png"))
    assert rgb[0, 0].tolist() == [0, 0, 255]
    assert rgb[0, 1].tolist() == [255, 255, 255]
    assert rgb[0, 2].tolist() == [255, 128, 128]
    sio.write_overlay_png(tmp_path / "o.png", [[1.0, 0.0]], [[1.0, 1.0]])
    rgb = np.asarray(Image.open(tmp_path / "o.png"))
    assert rgb[0, 0].tolist() == [255, 255, 0] and rgb[0, 1].tolist() == [0, 255, 0]


def test_diverging_all_zero():
    np.testing.assert_array_equal(sio.diverging_rgb(np.zeros((2, 2))), 255)


def test_trace_format():
    recs = [FitRecord(0, None, 1234.56789, 1234.56789, 0.123456789, 12.3456789),
            FitRecord(1, None, 1e-9, 0.0, 1.0, 3.0)]
    text = sio.format_trace(recs)
    assert text.splitlines() == ["iteration,E,E_sl,E_p,wall_ms", "0,1234.57,1234.57,0.123457,12.3457",
                                 "1,1e-09,0,1,3"]
    assert sio.format_trace(recs, timing=False).splitlines()[0] == "iteration,E,E_sl,E_p"


def test_atomic_write_leaves_no_temp_files(tmp_path):
    sio.atomic_write_text(tmp_path / "sub" / "f.txt", "hello")
    assert (tmp_path / "sub" / "f.txt").read_text() == "hello"
    assert os.listdir(tmp_path / "sub") == ["f.txt"]


def test_atomic_write_failure_keeps_old_file(tmp_path, monkeypatch):
    target = tmp_path / "f.txt"
    target.write_text("old")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        sio.atomic_write_text(target, "new")
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["f.txt"]
