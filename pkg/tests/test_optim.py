import numpy as np
import pytest

from silrender.experiments import pose_experiment, rigid_triangle_experiment
from silrender.io import format_trace
from silrender.loss import Objective
from silrender.optim import AdamState, FitAborted, Scene, adam_step, evaluate_params, fit


def test_adam_defaults():
    s = AdamState.create(3)
    assert (s.alpha, s.beta1, s.beta2, s.eps, s.t) == (1.5e-4, 0.9, 0.999, 1e-8, 0)


def test_adam_zero_gradient():
    p = np.array([1.0, -2.0, 3.0])
    new, s = adam_step(AdamState.create(3), p, np.zeros(3))
    np.testing.assert_array_equal(new, p)
    assert s.t == 1


def test_adam_first_step():
    new, s = adam_step(AdamState.create(4, alpha=0.1), np.zeros(4), np.ones(4))
    np.testing.assert_allclose(new, -0.1 / (1 + 1e-8), rtol=0, atol=1e-16)
    np.testing.assert_allclose(s.m, 0.1)
    np.testing.assert_allclose(s.v, 0.001)


def test_adam_matches_reference_loop(rng):
    g_seq = rng.normal(size=(20, 5))
    p = rng.normal(size=5)
    state = AdamState.create(5, alpha=0.01)
    m = np.zeros(5)
    v = np.zeros(5)
    ref = p.copy()
    for t, g in enumerate(g_seq, start=1):
        p, state = adam_step(state, p, g)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(p, ref, rtol=1e-14)


def test_adam_errors():
    s = AdamState.create(3)
    with pytest.raises(FloatingPointError, match="coordinate 1"):
        adam_step(s, np.zeros(3), [0.0, np.nan, 0.0])
    with pytest.raises(FloatingPointError, match="coordinate 2"):
        adam_step(s, np.zeros(3), [0.0, 0.0, np.inf])
    with pytest.raises(ValueError):
        adam_step(s, np.zeros(3), np.zeros(2))


def test_adam_deterministic(rng):
    g = rng.normal(size=(30, 4))

    def run():
        p, s = np.zeros(4), AdamState.create(4)
        for x in g:
            p, s = adam_step(s, p, x)
        return p

    assert run().tobytes() == run().tobytes()


@pytest.fixture(scope="module")
def arm():
    return pose_experiment("arm", resolution=32, F=4, seed=0, joints=1, views=4)


def test_fit_at_truth_stays_put(arm):
    res = fit(arm.scene, arm.truth, 100, alpha=1.5e-4)
    assert res.records[0].E_sl < 1e-6
    assert np.max(np.abs(res.params - arm.truth)) < 1e-3
    assert len(res.records) == 101 and res.records[0].iteration == 0


def test_frozen_parameters_are_constant(arm):
    frozen = Scene(arm.scene.model, arm.scene.targets, Objective(0.0), arm.scene.settings,
                   free=np.zeros(arm.model.num_params, bool))
    res = fit(frozen, arm.init, 20, alpha=0.1)
    assert all(r.params.tobytes() == arm.init.tobytes() for r in res.records)
    assert np.isnan(res.final.E_p)


def test_fit_trace_is_deterministic(arm):
    a = fit(arm.scene, arm.init, 15, alpha=0.01)
    b = fit(arm.scene, arm.init, 15, alpha=0.01)
    assert format_trace(a.records, timing=False) == format_trace(b.records, timing=False)
    assert a.params.tobytes() == b.params.tobytes()
    assert a.final.E_p < a.records[0].E_p


def test_fit_with_threads_matches_serial(arm):
    threaded = Scene(arm.scene.model, arm.scene.targets, arm.scene.objective, arm.scene.settings,
                     arm.scene.truth_vertices, threads=4)
    a = fit(arm.scene, arm.init, 5, alpha=0.01)
    b = fit(threaded, arm.init, 5, alpha=0.01)
    assert a.params.tobytes() == b.params.tobytes()


def test_translation_fit_block_minima_do_not_increase():
    scene, init, truth = rigid_triangle_experiment()
    res = fit(scene, init, 300, alpha=0.05)
    e = res.column("E_sl")
    blocks = [e[k:k + 50].min() for k in range(0, 300, 50)]
    assert all(b <= a for a, b in zip(blocks, blocks[1:]))
    assert np.min(e) < 1e-3 * e[0]


def test_non_finite_objective_aborts_with_trace(arm):
    bad = Scene(arm.scene.model, arm.scene.targets,
                Objective(1.0, lambda v: (float("nan"), np.zeros_like(v))), arm.scene.settings)
    with pytest.raises(FitAborted) as info:
        fit(bad, arm.init, 5)
    assert len(info.value.result.records) == 1


def test_fit_rejects_zero_iterations(arm):
    with pytest.raises(ValueError):
        fit(arm.scene, arm.init, 0)


def test_parameter_gradient_is_model_transpose(arm):
    mesh, val, g = evaluate_params(arm.scene, arm.init)
    _, jac = arm.model(arm.init)
    np.testing.assert_allclose(g, jac.reshape(-1, jac.shape[-1]).T @ val.grad.reshape(-1), atol=1e-12)
