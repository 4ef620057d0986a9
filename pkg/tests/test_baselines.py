"""Persistence and MLP baselines: hand-checkable outputs and gradients."""

import numpy as np
import pytest

from stgnn.baselines import MlpBaseline, PersistenceBaseline, persistence_predict
from stgnn.data import WindowSample, make_windows
from stgnn.errors import DimensionError
from stgnn.model import loss as mse_loss
from stgnn.numeric import grad_check
from stgnn.rng import RngStream


def ramp_series(n_steps=12, n_nodes=3, slope=0.5):
    t = np.arange(n_steps, dtype=np.float64) * slope
    return np.repeat(t[:, None, None], n_nodes, axis=1)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_persistence_repeats_the_last_observation():
    sample = make_windows(ramp_series(), k=4, h=3, stride=1)[0]
    pred = persistence_predict(sample)
    assert pred.shape == (3, 3, 1)
    assert np.all(pred == sample.inputs[-1, 0, 0])


def test_persistence_error_grows_linearly_on_a_ramp():
    # on a ramp with slope s the step-j error is (j+1)*s, so the horizon MAE
    # is s*(h+1)/2
    slope, h = 0.5, 4
    samples = make_windows(ramp_series(20, slope=slope), k=3, h=h, stride=1)
    errs = [np.abs(persistence_predict(s) - s.targets).mean() for s in samples]
    assert np.allclose(errs, slope * (h + 1) / 2, rtol=0, atol=1e-12)
    per_step = np.abs(persistence_predict(samples[0]) - samples[0].targets)
    assert np.allclose(per_step[:, 0, 0],
                       slope * np.arange(1, h + 1), atol=1e-12)


def test_persistence_is_exact_on_constant_series():
    sample = make_windows(np.full((10, 2, 1), 3.3), k=4, h=2, stride=1)[0]
    assert np.array_equal(persistence_predict(sample), sample.targets)


def test_persistence_selects_target_features():
    values = np.arange(8.0 * 2 * 3).reshape(8, 2, 3)
    sample = make_windows(values, k=3, h=2, stride=1,
                          target_features=(0, 2))[0]
    pred = persistence_predict(sample, target_features=(0, 2))
    assert pred.shape == (2, 2, 2)
    assert np.array_equal(pred[0], sample.inputs[-1][:, [0, 2]])


def test_persistence_wrapper_matches_the_function():
    sample = make_windows(ramp_series(), k=4, h=3, stride=1)[0]
    wrapper = PersistenceBaseline(horizon=3)
    assert np.array_equal(wrapper.predict_window(None, sample.inputs),
                          persistence_predict(sample))


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------

def small_mlp(seed=4, hidden=8):
    return MlpBaseline(window=3, n_features=2, horizon=2, d_out=1,
                       hidden=hidden, seed=seed)


def rand_inputs(seed, k=3, n=4, d=2):
    rng = RngStream(seed)
    return np.array(
        [[[rng.uniform_range(-1.0, 1.0) for _ in range(d)] for _ in range(n)]
         for _ in range(k)]
    )


def test_mlp_zero_weights_predict_zero():
    mlp = small_mlp()
    for p in mlp.parameters():
        p.value[:] = 0.0
    pred = mlp.predict_window(None, rand_inputs(1))
    assert np.array_equal(pred, np.zeros((2, 4, 1)))


def test_mlp_is_deterministic_per_seed():
    a = small_mlp(seed=7).predict_window(None, rand_inputs(2))
    b = small_mlp(seed=7).predict_window(None, rand_inputs(2))
    c = small_mlp(seed=8).predict_window(None, rand_inputs(2))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_mlp_flatten_uses_time_major_node_rows():
    # identity weights read the flat window straight through: node rows are
    # (t0 features..., t1 features...)
    mlp = MlpBaseline(window=2, n_features=2, horizon=2, d_out=2, hidden=4,
                      seed=0)
    mlp.w1.value[:] = np.eye(4)
    mlp.b1.value[:] = 0.0
    mlp.w2.value[:] = np.eye(4)
    mlp.b2.value[:] = 0.0
    inputs = np.array([[[1.0, 2.0]], [[3.0, 4.0]]])  # one node, two steps
    pred = mlp.predict_window(None, inputs)
    assert np.array_equal(pred, np.array([[[1.0, 2.0]], [[3.0, 4.0]]]))


def test_mlp_rows_are_node_independent():
    mlp = small_mlp(seed=5)
    inputs = rand_inputs(3, n=4)
    full = mlp.predict_window(None, inputs)
    solo = mlp.predict_window(None, inputs[:, 2:3, :])
    assert np.array_equal(full[:, 2:3, :], solo)


def test_mlp_is_permutation_equivariant():
    mlp = small_mlp(seed=6)
    inputs = rand_inputs(4, n=5)
    perm = [3, 0, 4, 2, 1]
    direct = mlp.predict_window(None, inputs)[:, perm, :]
    permuted = mlp.predict_window(None, inputs[:, perm, :])
    assert np.array_equal(direct, permuted)


def test_mlp_backward_passes_grad_check():
    mlp = small_mlp(seed=9, hidden=6)
    mlp.b1.value += 0.3  # keep relu pre-activations away from the kink
    inputs = rand_inputs(10)
    rng = RngStream(11)
    targets = np.array(
        [[[rng.uniform_range(-1.0, 1.0)] for _ in range(4)] for _ in range(2)]
    )
    sample = WindowSample(inputs=inputs, targets=targets, t_origin=0)

    def objective() -> float:
        pred, _ = mlp.forward_sample(None, sample)
        return float(mse_loss(pred, targets))

    pred, cache = mlp.forward_sample(None, sample)
    mlp.zero_grads()
    mlp.backward_sample(cache, pred, targets)
    assert grad_check(objective, mlp.parameters()) < 1e-4


def test_mlp_rejects_wrong_window_shape():
    with pytest.raises(DimensionError):
        small_mlp().predict_window(None, rand_inputs(1, k=2))
    with pytest.raises(DimensionError):
        small_mlp().predict_window(None, rand_inputs(1, d=3))
