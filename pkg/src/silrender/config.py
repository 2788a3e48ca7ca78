"""JSON scene configuration with defaults for every field.

Layout::

    {
      "mesh":      {"obj": "body.obj"}  or  {"toy_body": {"preset": "humanoid", "segments": 10}}
                   or {"triangle": [[x, y, z], [x, y, z], [x, y, z]]},
      "cameras":   {"turntable": {"n": 4, "radius": 3.0, "elevation": 0.0, "look_at": [0, 0, 0]},
                    "kind": "perspective", "focal": null, "extent": 1.0, "fill": 0.8}
                   or {"list": [<camera dict>, ...]},
      "render":    {"H": 64, "W": 64, "F": 4, "p0": 0.0, "p1": 1.0},
      "objective": {"lambda": 0.001},
      "optimizer": {"alpha": 0.00015, "beta1": 0.9, "beta2": 0.999, "iterations": 500},
      "init":      {"joints": 3, "max_angle_deg": 30.0, "swing_only": true,
                    "translation": [0, 0, 0], "rotation": [0, 0, 0], "scale": 1.0, "free": null},
      "seed": 0,
      "threads": 1
    }
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

DEFAULTS = {
    "mesh": {"toy_body": {"preset": "humanoid", "segments": 10}},
    "cameras": {
        "turntable": {"n": 4, "radius": 3.0, "elevation": 0.0, "look_at": [0.0, 0.0, 0.0]},
        "kind": "perspective",
        "focal": None,
        "extent": 1.0,
        "fill": 0.8,
    },
    "render": {"H": 64, "W": 64, "F": 4, "p0": 0.0, "p1": 1.0},
    "objective": {"lambda": 0.001},
    "optimizer": {"alpha": 1.5e-4, "beta1": 0.9, "beta2": 0.999, "iterations": 500},
    "init": {
        "joints": 3,
        "max_angle_deg": 30.0,
        "swing_only": True,
        "translation": [0.0, 0.0, 0.0],
        "rotation": [0.0, 0.0, 0.0],
        "scale": 1.0,
        "free": None,
    },
    "seed": 0,
    "threads": 1,
}


class ConfigError(ValueError):
    """Bad configuration; the message starts with the offending field."""


def _merge(base: dict, over: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        name = prefix + key
        if name in ("mesh", "cameras.list"):
            out[key] = copy.deepcopy(val)
        elif key not in base:
            raise ConfigError(f"{name}: unknown field")
        elif isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{name}: must be an object")
            out[key] = _merge(base[key], val, name + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass
class SceneConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "SceneConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a JSON object")
        cfg = cls(_merge(DEFAULTS, d), base_dir)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "SceneConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON in {path}: {exc}") from None
        return cls.from_dict(raw, os.path.dirname(os.path.abspath(path)))

    def __getitem__(self, key):
        return self.data[key]

    def set(self, dotted: str, value) -> None:
        *path, last = dotted.split(".")
        node = self.data
        for p in path:
            node = node[p]
        node[last] = value

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def validate(self) -> None:
        d = self.data
        mesh = d["mesh"]
        kinds = [k for k in ("obj", "toy_body", "triangle") if k in mesh]
        if len(kinds) != 1:
            raise ConfigError("mesh: give exactly one of 'obj', 'toy_body', 'triangle'")
        if "obj" in mesh and not os.path.isfile(self.resolve(mesh["obj"])):
            raise ConfigError(f"mesh.obj: file not found: {mesh['obj']}")
        r = d["render"]
        for key in ("H", "W", "F"):
            if not isinstance(r[key], int) or isinstance(r[key], bool) or r[key] < 1:
                raise ConfigError(f"render.{key}: must be an integer >= 1, got {r[key]!r}")
        if r["p0"] == r["p1"]:
            raise ConfigError("render.p1: must differ from render.p0")
        if not d["objective"]["lambda"] >= 0:
            raise ConfigError("objective.lambda: must be >= 0")
        o = d["optimizer"]
        if not o["alpha"] > 0:
            raise ConfigError("optimizer.alpha: must be > 0")
        for key in ("beta1", "beta2"):
            if not 0 <= o[key] < 1:
                raise ConfigError(f"optimizer.{key}: must be in [0, 1)")
        if not isinstance(o["iterations"], int) or o["iterations"] < 1:
            raise ConfigError("optimizer.iterations: must be an integer >= 1")
        cams = d["cameras"]
        if "list" not in cams:
            tt = cams["turntable"]
            if not isinstance(tt.get("n"), int) or tt["n"] < 1:
                raise ConfigError("cameras.turntable.n: must be an integer >= 1")
            if not tt.get("radius", 0) > 0:
                raise ConfigError("cameras.turntable.radius: must be > 0")
            if cams["kind"] not in ("perspective", "orthographic"):
                raise ConfigError(f"cameras.kind: unknown camera kind {cams['kind']!r}")
        if not isinstance(d["seed"], int):
            raise ConfigError("seed: must be an integer")
        if not isinstance(d["threads"], int) or d["threads"] < 1:
            raise ConfigError("threads: must be an integer >= 1")
