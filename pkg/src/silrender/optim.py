"""Adam and the silhouette fitting loop."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .backward import EdgeAdjacency
from .forward import RenderSettings
from .loss import MultiViewTargets, Objective, evaluate_objective, per_vertex_error


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    alpha: float = 1.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def create(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **hyper)


def adam_step(state: AdamState, params, grads) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new params and a new state."""
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if p.shape != g.shape or p.shape != state.m.shape:
        raise ValueError(f"shape mismatch: params {p.shape}, grads {g.shape}, state {state.m.shape}")
    bad = np.flatnonzero(~np.isfinite(g))
    if bad.size:
        raise FloatingPointError(f"non-finite gradient at coordinate {int(bad[0])}")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_p = p - state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_p, AdamState(m, v, t, state.alpha, state.beta1, state.beta2, state.eps)


@dataclass
class Scene:
    """What a fit needs: a parametric model, targets, objective and settings.

    ``model(params)`` returns ``(TriangleMesh, d vertices / d params)``.
    ``free`` masks which parameters the optimizer may move.
    """

    model: Callable
    targets: MultiViewTargets
    objective: Objective = field(default_factory=Objective)
    settings: RenderSettings = field(default_factory=RenderSettings)
    truth_vertices: np.ndarray | None = None
    free: np.ndarray | None = None
    threads: int = 1


@dataclass
class FitRecord:
    iteration: int
    params: np.ndarray
    E: float
    E_sl: float
    E_p: float
    wall_ms: float


@dataclass
class FitResult:
    records: list
    params: np.ndarray
    state: AdamState

    @property
    def final(self) -> FitRecord:
        return self.records[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


class FitAborted(RuntimeError):
    def __init__(self, message: str, result: FitResult):
        super().__init__(message)
        self.result = result


def evaluate_params(scene: Scene, params, adjacency=None):
    mesh, jac = scene.model(params)
    val = evaluate_objective(mesh, scene.targets, scene.objective, scene.settings, adjacency, scene.threads)
    g = np.einsum("nap,na->p", jac, val.grad)
    if scene.free is not None:
        g = np.where(scene.free, g, 0.0)
    return mesh, val, g


def fit(scene: Scene, init, iterations: int, alpha: float = 1.5e-4, beta1: float = 0.9, beta2: float = 0.999,
        eps: float = 1e-8, callback: Callable[[FitRecord], None] | None = None) -> FitResult:
    """Minimise the scene objective with Adam for a fixed number of steps.

    Records hold the state *before* each step, plus one final record after
    the last step, so ``records[0]`` is the initialisation.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    params = np.array(init, dtype=np.float64)
    state = AdamState.create(len(params), alpha=alpha, beta1=beta1, beta2=beta2, eps=eps)
    mesh0, _ = scene.model(params)
    adjacency = EdgeAdjacency.from_faces(mesh0.faces[:, [0, 2, 1]])
    records: list[FitRecord] = []
    result = FitResult(records, params, state)
    for it in range(iterations + 1):
        tic = time.perf_counter()
        mesh, val, g = evaluate_params(scene, params, adjacency)
        e_p = per_vertex_error(mesh.vertices, scene.truth_vertices) if scene.truth_vertices is not None else float("nan")
        rec = FitRecord(it, params.copy(), val.E, val.E_sl, e_p, 1e3 * (time.perf_counter() - tic))
        records.append(rec)
        if callback is not None:
            callback(rec)
        if not np.isfinite(val.E):
            raise FitAborted(f"non-finite objective at iteration {it}", result)
        if it == iterations:
            break
        try:
            params, state = adam_step(state, params, g)
        except FloatingPointError as exc:
            raise FitAborted(f"iteration {it}: {exc}", result) from exc
        result.params, result.state = params, state
    return result
