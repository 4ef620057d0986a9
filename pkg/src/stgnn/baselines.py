"""Reference predictors: persistence (naive last value) and a per-node MLP.

Persistence repeats the last observed value of each target feature at every
horizon step. The MLP flattens one node's window (k*d inputs), applies one
hidden relu layer shared across all nodes, and decodes every horizon step
at once; it ignores the graph entirely, which is exactly what makes it a
useful comparison point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import WindowSample
from .errors import DimensionError
from .numeric import Parameter
from .rng import RngStream
from .layers import init_uniform

MLP_HIDDEN_DEFAULT = 64


def persistence_predict(sample: WindowSample, target_features=(0,)) -> np.ndarray:
    """Every horizon step equals the last input step's target features."""
    last = sample.inputs[-1][:, list(target_features)]
    return np.repeat(last[None, :, :], sample.horizon, axis=0)


class PersistenceBaseline:
    """Parameter-free wrapper so persistence fits the evaluate() surface."""

    def __init__(self, horizon: int, target_features=(0,)):
        self.horizon = horizon
        self.target_features = tuple(target_features)

    def predict_window(self, adj, inputs: np.ndarray) -> np.ndarray:
        last = inputs[-1][:, list(self.target_features)]
        return np.repeat(last[None, :, :], self.horizon, axis=0)


@dataclass
class MlpCache:
    flat_in: np.ndarray
    pre1: np.ndarray
    act1: np.ndarray


class MlpBaseline:
    """Graph-free MLP: k*d -> hidden relu -> horizon*d_out, weights shared
    across nodes."""

    def __init__(self, window: int, n_features: int, horizon: int, d_out: int,
                 hidden: int = MLP_HIDDEN_DEFAULT, seed: int = 0):
        self.window = window
        self.n_features = n_features
        self.horizon = horizon
        self.d_out = d_out
        self.hidden = hidden
        self.init_seed = seed
        rng = RngStream(seed)
        d_in = window * n_features
        d_flat_out = horizon * d_out
        self.w1 = init_uniform(rng, "mlp.w1", d_in, hidden)
        self.b1 = init_uniform(rng, "mlp.b1", 1, hidden)
        self.w2 = init_uniform(rng, "mlp.w2", hidden, d_flat_out)
        self.b2 = init_uniform(rng, "mlp.b2", 1, d_flat_out)

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]

    def zero_grads(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def _flatten(self, inputs: np.ndarray) -> np.ndarray:
        k, n, d = inputs.shape
        if k != self.window or d != self.n_features:
            raise DimensionError(
                f"mlp expects window ({self.window}, N, {self.n_features}), "
                f"got {inputs.shape}"
            )
        # column order (t, feature): node rows carry their whole window
        return inputs.transpose(1, 0, 2).reshape(n, k * d)

    def _run(self, inputs: np.ndarray) -> tuple[np.ndarray, MlpCache]:
        flat_in = self._flatten(inputs)
        pre1 = flat_in @ self.w1.value + self.b1.value
        act1 = np.maximum(pre1, 0.0)
        out = act1 @ self.w2.value + self.b2.value
        n = flat_in.shape[0]
        pred = out.reshape(n, self.horizon, self.d_out).transpose(1, 0, 2)
        return pred, MlpCache(flat_in=flat_in, pre1=pre1, act1=act1)

    def forward_sample(self, adj, sample: WindowSample):
        return self._run(sample.inputs)

    def backward_sample(self, cache: MlpCache, pred: np.ndarray,
                        targets: np.ndarray, scale: float = 1.0) -> None:
        if pred.shape != targets.shape:
            raise DimensionError(
                f"pred shape {pred.shape} does not match targets {targets.shape}"
            )
        h, n, d_out = pred.shape
        dpred = (2.0 * scale / pred.size) * (pred - targets)
        dflat = dpred.transpose(1, 0, 2).reshape(n, h * d_out)
        self.w2.grad += cache.act1.T @ dflat
        self.b2.grad += dflat.sum(axis=0, keepdims=True)
        dact1 = dflat @ self.w2.value.T
        dpre1 = dact1 * (cache.pre1 > 0)
        self.w1.grad += cache.flat_in.T @ dpre1
        self.b1.grad += dpre1.sum(axis=0, keepdims=True)

    def predict_window(self, adj, inputs: np.ndarray) -> np.ndarray:
        pred, _ = self._run(np.asarray(inputs, dtype=np.float64))
        return pred
