"""Command-line entry point: ``silrender <command> [options]``.

Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as sio
from .backward import parameter_gradient_image
from .config import ConfigError, SceneConfig
from .experiments import build_cameras, build_mesh, perturb_pose, render_settings
from .forward import SilhouetteImage, rasterize
from .geometry import save_obj
from .loss import MultiViewTargets, Objective, render_views
from .model import RIGID_NAMES, PoseModel, RigidModel, RigidParams
from .optim import FitAborted, Scene, fit
from .projection import Camera, project

GRADMAP_PARAMS = {"tx": 0, "ty": 1, "rot": 5, "scale": 6}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scene JSON (defaults are used for anything missing)")
    common.add_argument("--seed", type=int, help="override config seed")
    common.add_argument("--threads", type=int, help="cap on worker threads (views run in parallel)")
    common.add_argument("--F", type=int, help="supersampling factor per axis")
    common.add_argument("--resolution", type=int, nargs=2, metavar=("H", "W"), help="image size")

    fitopts = argparse.ArgumentParser(add_help=False)
    fitopts.add_argument("--data", help="directory written by gen-data (targets are rendered if omitted)")
    fitopts.add_argument("--out", required=True, help="output directory")
    fitopts.add_argument("--iterations", type=int)
    fitopts.add_argument("--alpha", type=float, help="Adam step size")
    fitopts.add_argument("--lambda", dest="lam", type=float, help="regularizer weight")
    fitopts.add_argument("--init", choices=("config", "truth"), default="config",
                         help="start from the configured initialisation or from the ground truth")
    fitopts.add_argument("--no-timing", action="store_true", help="omit the wall_ms column from trace.csv")

    p = argparse.ArgumentParser(prog="silrender", description="Analytic-gradient silhouette renderer.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", parents=[common], help="render ground-truth multi-view silhouettes")
    g.add_argument("--out", required=True)

    r = sub.add_parser("render", parents=[common], help="one forward pass to PGM/PNG")
    r.add_argument("--out", required=True, help="PGM path")
    r.add_argument("--view", type=int, default=0)
    r.add_argument("--png", help="also write a PNG here")
    r.add_argument("--float-dump", help="also write raw little-endian float32 values here")

    m = sub.add_parser("gradmap", parents=[common], help="per-pixel gradient image for a rigid parameter")
    m.add_argument("--param", required=True, choices=sorted(GRADMAP_PARAMS))
    m.add_argument("--out", required=True, help="output prefix (.f32 and .png are appended)")
    m.add_argument("--view", type=int, default=0)

    c = sub.add_parser("gradcheck", help="analytic vs finite-difference gradient suite")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--scale", type=float, default=1.0, help="fraction of the random cases to run")

    sub.add_parser("fit-rigid", parents=[common, fitopts], help="fit a rigid transform to silhouettes")
    sub.add_parser("fit-pose", parents=[common, fitopts], help="fit joint rotations of the toy body")
    return p


def _load_config(args) -> SceneConfig:
    cfg = SceneConfig.load(args.config) if args.config else SceneConfig.from_dict({})
    if getattr(args, "seed", None) is not None:
        cfg.set("seed", args.seed)
    if getattr(args, "threads", None) is not None:
        cfg.set("threads", args.threads)
    if getattr(args, "F", None) is not None:
        cfg.set("render.F", args.F)
    if getattr(args, "resolution", None):
        cfg.set("render.H", args.resolution[0])
        cfg.set("render.W", args.resolution[1])
    if getattr(args, "iterations", None) is not None:
        cfg.set("optimizer.iterations", args.iterations)
    if getattr(args, "alpha", None) is not None:
        cfg.set("optimizer.alpha", args.alpha)
    if getattr(args, "lam", None) is not None:
        cfg.set("objective.lambda", args.lam)
    cfg.validate()
    return cfg


def _write_image(base: str, img: SilhouetteImage, float_dump: bool = True) -> dict:
    lo, hi = min(img.p0, img.p1), max(img.p0, img.p1)
    files = {"pgm": base + ".pgm"}
    sio.write_pgm(files["pgm"], img.data, lo, hi)
    if sio.png_available():
        files["png"] = base + ".png"
        sio.write_png(files["png"], img.data, lo, hi)
    if float_dump:
        files["f32"] = base + ".f32"
        sio.write_float_dump(files["f32"], img.data)
    return files


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    mesh, _ = build_mesh(cfg)
    cams = build_cameras(cfg)
    settings = render_settings(cfg)
    H, W = cfg["render"]["H"], cfg["render"]["W"]
    os.makedirs(args.out, exist_ok=True)
    views = []
    for k, img in enumerate(render_views(mesh, cams, H, W, settings)):
        files = _write_image(os.path.join(args.out, f"view_{k:02d}"), img)
        views.append({name: os.path.basename(path) for name, path in files.items()})
    meta = {"render": cfg["render"], "cameras": [c.to_dict() for c in cams], "views": views}
    sio.atomic_write_text(os.path.join(args.out, "cameras.json"), json.dumps(meta, indent=2) + "\n")
    save_obj(mesh, os.path.join(args.out, "truth.obj"))
    print(f"wrote {len(cams)} silhouettes of {H}x{W} to {args.out}")
    return 0


def load_targets(directory: str) -> tuple[MultiViewTargets, dict]:
    with open(os.path.join(directory, "cameras.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    r = meta["render"]
    imgs = []
    for view in meta["views"]:
        if "f32" in view:
            data = sio.read_float_dump(os.path.join(directory, view["f32"]), (r["H"], r["W"])).astype(np.float64)
        else:
            lo, hi = min(r["p0"], r["p1"]), max(r["p0"], r["p1"])
            data = lo + (hi - lo) * sio.read_pgm(os.path.join(directory, view["pgm"]))
        imgs.append(SilhouetteImage(data, r["p0"], r["p1"]))
    return MultiViewTargets(imgs, [Camera.from_dict(c) for c in meta["cameras"]]), meta


def cmd_render(args) -> int:
    cfg = _load_config(args)
    mesh, _ = build_mesh(cfg)
    cams = build_cameras(cfg)
    if not 0 <= args.view < len(cams):
        raise UsageError(f"--view: must be in [0, {len(cams)})")
    H, W = cfg["render"]["H"], cfg["render"]["W"]
    screen, _ = project(mesh, cams[args.view])
    img = rasterize(screen, H, W, render_settings(cfg))
    lo, hi = min(img.p0, img.p1), max(img.p0, img.p1)
    sio.write_pgm(args.out, img.data, lo, hi)
    if args.png:
        sio.write_png(args.png, img.data, lo, hi)
    if args.float_dump:
        sio.write_float_dump(args.float_dump, img.data)
    print(f"rendered view {args.view} ({H}x{W}, F={cfg['render']['F']}) -> {args.out}")
    return 0


def cmd_gradmap(args) -> int:
    cfg = _load_config(args)
    mesh, _ = build_mesh(cfg)
    cams = build_cameras(cfg)
    if not 0 <= args.view < len(cams):
        raise UsageError(f"--view: must be in [0, {len(cams)})")
    H, W = cfg["render"]["H"], cfg["render"]["W"]
    # rigid motion about the mesh centroid so "scale" grows the shape in place
    centre = mesh.vertices.mean(0)
    centred = mesh.with_vertices(mesh.vertices - centre)
    posed, jac_rigid = RigidModel(centred)(RigidParams(translation=centre).to_vector())
    screen, jac_proj = project(posed, cams[args.view])
    direction = np.einsum("nij,nj->ni", jac_proj, jac_rigid[:, :, GRADMAP_PARAMS[args.param]])
    grad = parameter_gradient_image(screen, direction, H, W, render_settings(cfg))
    sio.write_float_dump(args.out + ".f32", grad)
    if sio.png_available():
        sio.write_gradient_png(args.out + ".png", grad)
    print(f"d image / d {args.param}: sum {grad.sum():.6g}, min {grad.min():.6g}, max {grad.max():.6g}")
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_all

    results = run_all(args.seed, args.scale)
    for res in results:
        print(res.line())
    worst = max(r.max_error for r in results[:2])
    print(f"max rel. err (edge/vertex partials): {worst:.3e}")
    return 0 if all(r.passed for r in results) else 1


def _fit_targets(args, cfg, mesh_truth):
    if args.data:
        targets, _ = load_targets(args.data)
        return targets
    cams = build_cameras(cfg)
    H, W = cfg["render"]["H"], cfg["render"]["W"]
    return MultiViewTargets(render_views(mesh_truth, cams, H, W, render_settings(cfg)), cams)


def _finish_fit(args, cfg, scene, model, init, param_names) -> int:
    opt = cfg["optimizer"]
    os.makedirs(args.out, exist_ok=True)
    trace = os.path.join(args.out, "trace.csv")
    try:
        result = fit(scene, init, opt["iterations"], opt["alpha"], opt["beta1"], opt["beta2"])
        status = 0
    except FitAborted as exc:
        print(f"fit aborted: {exc}", file=sys.stderr)
        result = exc.result
        status = 1
    sio.write_trace(trace, result.records, timing=not args.no_timing)
    mesh, _ = model(result.params)
    save_obj(mesh, os.path.join(args.out, "final.obj"))
    H, W = scene.targets.shape
    for k, (cam, tgt) in enumerate(zip(scene.targets.cameras, scene.targets.images)):
        img = rasterize(project(mesh, cam)[0], H, W, scene.settings)
        if sio.png_available():
            lo, hi = min(tgt.p0, tgt.p1), max(tgt.p0, tgt.p1)
            sio.write_overlay_png(os.path.join(args.out, f"overlay_{k:02d}.png"), tgt.data, img.data, lo, hi)
    params = {name: float(v) for name, v in zip(param_names, result.params)}
    sio.atomic_write_text(os.path.join(args.out, "params.json"), json.dumps(params, indent=2) + "\n")
    first, last = result.records[0], result.records[-1]
    print(f"E_sl {first.E_sl:.6g} -> {last.E_sl:.6g}, E_p {first.E_p:.6g} -> {last.E_p:.6g} "
          f"after {last.iteration} iterations")
    return status


def _settings_and_objective(cfg):
    return render_settings(cfg), Objective(cfg["objective"]["lambda"])


def _free_mask(cfg, names) -> np.ndarray | None:
    free = cfg["init"]["free"]
    if free is None:
        return None
    unknown = [n for n in free if n not in names]
    if unknown:
        raise ConfigError(f"init.free: unknown parameter {unknown[0]!r}")
    return np.array([n in free for n in names])


def cmd_fit_rigid(args) -> int:
    cfg = _load_config(args)
    mesh, _ = build_mesh(cfg)
    model = RigidModel(mesh)
    settings, objective = _settings_and_objective(cfg)
    targets = _fit_targets(args, cfg, mesh)
    scene = Scene(model, targets, objective, settings, truth_vertices=mesh.vertices,
                  free=_free_mask(cfg, RIGID_NAMES), threads=cfg["threads"])
    if args.init == "truth":
        init = model.identity()
    else:
        ini = cfg["init"]
        init = RigidParams(ini["translation"], ini["rotation"], ini["scale"]).to_vector()
    return _finish_fit(args, cfg, scene, model, init, RIGID_NAMES)


def cmd_fit_pose(args) -> int:
    cfg = _load_config(args)
    mesh, skeleton = build_mesh(cfg)
    if skeleton is None:
        raise ConfigError("mesh: fit-pose needs a toy_body mesh (it carries the skeleton)")
    model = PoseModel(mesh, skeleton)
    settings, objective = _settings_and_objective(cfg)
    truth_mesh, _ = model(model.identity())
    targets = _fit_targets(args, cfg, truth_mesh)
    scene = Scene(model, targets, objective, settings, truth_vertices=truth_mesh.vertices,
                  free=_free_mask(cfg, model.param_names), threads=cfg["threads"])
    if args.init == "truth":
        init = model.identity()
    else:
        ini = cfg["init"]
        rng = np.random.default_rng(cfg["seed"])
        init, chosen = perturb_pose(mesh, skeleton, rng, ini["joints"], ini["max_angle_deg"], ini["swing_only"])
        print("perturbed joints:", ", ".join(skeleton.names[j] if skeleton.names else str(j) for j in chosen))
    return _finish_fit(args, cfg, scene, model, init, model.param_names)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "render": cmd_render,
    "gradmap": cmd_gradmap,
    "gradcheck": cmd_gradcheck,
    "fit-rigid": cmd_fit_rigid,
    "fit-pose": cmd_fit_pose,
}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"silrender {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError, OSError, FloatingPointError, RuntimeError) as exc:
        print(f"silrender {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
