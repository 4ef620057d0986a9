"""Full forecasting model: GCN stack -> shared GRU over the window -> decoder.

Per window step t the input features pass through the graph convolution
stack; the resulting node embeddings feed one shared-weight recurrent cell
(rows = nodes, initial hidden state zero). The final hidden state is the
fused spatiotemporal representation, decoded in one affine map to every
horizon step. Training minimizes mean squared error over all
N * horizon * d_out predicted entries; backpropagation through time is
exact (windows are short).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import WindowSample
from .errors import DimensionError, ValidationError
from .graph import NormalizedAdjacency
from .layers import (Decoder, GcnLayer, GruCell, decode, decode_backward,
                     gcn_backward, gcn_forward, gru_backward, gru_step)
from .numeric import Parameter
from .rng import RngStream

MAX_GCN_LAYERS = 6


@dataclass
class ModelConfig:
    n_features: int = 3
    d_hidden_gcn: int = 16
    n_gcn_layers: int = 2
    d_hidden_gru: int = 32
    horizon: int = 1
    d_out: int = 1
    window: int = 12
    gcn_activation: str = "relu"
    fuse_concat_last_gcn: bool = False

    def validate(self) -> None:
        counts = {
            "n_features": self.n_features,
            "d_hidden_gcn": self.d_hidden_gcn,
            "n_gcn_layers": self.n_gcn_layers,
            "d_hidden_gru": self.d_hidden_gru,
            "horizon": self.horizon,
            "d_out": self.d_out,
            "window": self.window,
        }
        for name, v in counts.items():
            if v < 1:
                raise ValidationError(f"{name} must be >= 1, got {v}")
        if self.n_gcn_layers > MAX_GCN_LAYERS:
            raise ValidationError(
                f"n_gcn_layers must be <= {MAX_GCN_LAYERS}, got {self.n_gcn_layers}"
            )
        if self.gcn_activation not in ("relu", "tanh"):
            raise ValidationError(
                f"gcn_activation must be 'relu' or 'tanh', got {self.gcn_activation!r}"
            )

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "d_hidden_gcn": self.d_hidden_gcn,
            "n_gcn_layers": self.n_gcn_layers,
            "d_hidden_gru": self.d_hidden_gru,
            "horizon": self.horizon,
            "d_out": self.d_out,
            "window": self.window,
            "gcn_activation": self.gcn_activation,
            "fuse_concat_last_gcn": self.fuse_concat_last_gcn,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        known = set(cls().to_dict())
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown model config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg


@dataclass
class StgnnModel:
    config: ModelConfig
    gcn_stack: list[GcnLayer]
    gru: GruCell
    decoder: Decoder
    init_seed: int = 0

    @classmethod
    def build(cls, config: ModelConfig, seed: int) -> "StgnnModel":
        """Initialize all parameters from one seeded stream, in a fixed order
        (GCN layers first, then the recurrent cell, then the decoder)."""
        config.validate()
        rng = RngStream(seed)
        stack = []
        d_in = config.n_features
        for i in range(config.n_gcn_layers):
            stack.append(GcnLayer.build(rng, d_in, config.d_hidden_gcn,
                                        config.gcn_activation, name=f"gcn{i}"))
            d_in = config.d_hidden_gcn
        gru = GruCell.build(rng, config.d_hidden_gcn, config.d_hidden_gru)
        d_dec_in = config.d_hidden_gru
        if config.fuse_concat_last_gcn:
            d_dec_in += config.d_hidden_gcn
        decoder = Decoder.build(rng, d_dec_in, config.horizon, config.d_out)
        return cls(config=config, gcn_stack=stack, gru=gru, decoder=decoder,
                   init_seed=seed)

    def parameters(self) -> list[Parameter]:
        params = []
        for layer in self.gcn_stack:
            params.extend(layer.parameters())
        params.extend(self.gru.parameters())
        params.extend(self.decoder.parameters())
        return params

    def zero_grads(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    # uniform trainable-model surface shared with the baselines
    def forward_sample(self, adj, sample):
        return forward(self, adj, sample)

    def backward_sample(self, cache, pred, targets, scale: float = 1.0):
        backward(self, cache, pred, targets, scale)

    def predict_window(self, adj, inputs):
        return predict(self, adj, inputs)


@dataclass
class ModelCache:
    gcn_caches: list[list]  # per step, per layer
    gru_caches: list
    dec_cache: object
    z_last: np.ndarray


def _check_inputs(model: StgnnModel, adj: NormalizedAdjacency,
                  inputs: np.ndarray) -> None:
    cfg = model.config
    if inputs.ndim != 3:
        raise DimensionError(f"window inputs must be (k, N, d), got {inputs.shape}")
    k, n, d = inputs.shape
    if k != cfg.window:
        raise DimensionError(f"model expects window k={cfg.window}, got {k}")
    if n != adj.n_nodes:
        raise DimensionError(
            f"adjacency has {adj.n_nodes} nodes but inputs have {n}"
        )
    if d != cfg.n_features:
        raise DimensionError(f"model expects {cfg.n_features} features, got {d}")


def _run(model: StgnnModel, adj: NormalizedAdjacency,
         inputs: np.ndarray) -> tuple[np.ndarray, ModelCache]:
    cfg = model.config
    n = adj.n_nodes
    h_state = np.zeros((n, cfg.d_hidden_gru), dtype=np.float64)
    gcn_caches = []
    gru_caches = []
    z = None
    for t in range(cfg.window):
        z = inputs[t]
        step_caches = []
        for layer in model.gcn_stack:
            z, c = gcn_forward(adj, z, layer)
            step_caches.append(c)
        gcn_caches.append(step_caches)
        h_state, gc = gru_step(z, h_state, model.gru)
        gru_caches.append(gc)
    dec_in = np.concatenate([h_state, z], axis=1) if cfg.fuse_concat_last_gcn else h_state
    flat, dec_cache = decode(dec_in, model.decoder)
    pred = flat.reshape(n, cfg.horizon, cfg.d_out).transpose(1, 0, 2)
    cache = ModelCache(gcn_caches=gcn_caches, gru_caches=gru_caches,
                       dec_cache=dec_cache, z_last=z)
    return pred, cache


def forward(model: StgnnModel, adj: NormalizedAdjacency,
            sample: WindowSample) -> tuple[np.ndarray, ModelCache]:
    """Predictions (horizon, N, d_out) plus the cache backward() needs."""
    _check_inputs(model, adj, sample.inputs)
    return _run(model, adj, sample.inputs)


def predict(model: StgnnModel, adj: NormalizedAdjacency,
            recent_window: np.ndarray) -> np.ndarray:
    """Inference entry point; same values as forward(), no cache kept."""
    recent_window = np.asarray(recent_window, dtype=np.float64)
    _check_inputs(model, adj, recent_window)
    pred, _ = _run(model, adj, recent_window)
    return pred


def loss(pred: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error over all N * horizon * d_out entries."""
    if pred.shape != targets.shape:
        raise DimensionError(
            f"pred shape {pred.shape} does not match targets {targets.shape}"
        )
    diff = pred - targets
    return float(np.mean(diff * diff))


def backward(model: StgnnModel, cache: ModelCache, pred: np.ndarray,
             targets: np.ndarray, scale: float = 1.0) -> None:
    """Accumulate d(scale * loss)/d(theta) into every Parameter."""
    if pred.shape != targets.shape:
        raise DimensionError(
            f"pred shape {pred.shape} does not match targets {targets.shape}"
        )
    cfg = model.config
    h_steps, n, d_out = pred.shape
    dpred = (2.0 * scale / pred.size) * (pred - targets)
    dflat = dpred.transpose(1, 0, 2).reshape(n, h_steps * d_out)
    ddec_in = decode_backward(cache.dec_cache, dflat)
    if cfg.fuse_concat_last_gcn:
        dh = ddec_in[:, :cfg.d_hidden_gru]
        dz_extra = ddec_in[:, cfg.d_hidden_gru:]
    else:
        dh = ddec_in
        dz_extra = None
    for t in range(cfg.window - 1, -1, -1):
        dz, dh = gru_backward(cache.gru_caches[t], dh)
        if dz_extra is not None and t == cfg.window - 1:
            dz = dz + dz_extra
        for layer_cache in reversed(cache.gcn_caches[t]):
            dz = gcn_backward(layer_cache, dz)
