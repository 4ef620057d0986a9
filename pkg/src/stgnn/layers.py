"""Model building blocks: graph convolution, gated recurrent cell, decoder.

Each block owns its Parameters and comes as a forward function returning a
cache plus a backward function that consumes the cache, accumulates weight
gradients in place, and returns input gradients. Backward passes are
hand-derived (the composition is fixed, so explicit chain-rule formulas are
simpler to verify by finite differences than a general tape).

Conventions: node features are stored row-per-node, so a product written
as W x on column vectors becomes x @ W here. The recurrent update keeps
the gate convention in which z multiplies the retained previous state:

    z = logistic(x Wz + h Uz)
    r = logistic(x Wr + h Ur)
    h' = z * h + (1 - z) * tanh(x Wh + (r * h) Uh)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .graph import NormalizedAdjacency
from .numeric import Matrix, Parameter, activate, activation_grad
from .rng import RngStream

GCN_ACTIVATIONS = ("relu", "tanh")


def init_uniform(rng: RngStream, name: str, rows: int, cols: int) -> Parameter:
    """uniform(-s, s) init with s = sqrt(6 / (fan_in + fan_out)); row-major draws."""
    s = math.sqrt(6.0 / (rows + cols))
    values = np.empty((rows, cols), dtype=np.float64)
    for i in range(rows):
        for j in range(cols):
            values[i, j] = rng.uniform_range(-s, s)
    return Parameter.from_value(name, values)


# ---------------------------------------------------------------------------
# Graph convolution
# ---------------------------------------------------------------------------

@dataclass
class GcnLayer:
    w: Parameter  # d_in x d_out
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in GCN_ACTIVATIONS:
            raise ValidationError(
                f"gcn activation must be one of {GCN_ACTIVATIONS}, got {self.activation!r}"
            )

    @classmethod
    def build(cls, rng: RngStream, d_in: int, d_out: int,
              activation: str = "relu", name: str = "gcn") -> "GcnLayer":
        return cls(w=init_uniform(rng, f"{name}.w", d_in, d_out), activation=activation)

    def parameters(self) -> list[Parameter]:
        return [self.w]


@dataclass
class GcnCache:
    layer: GcnLayer
    adj: NormalizedAdjacency
    agg: Matrix  # adj @ h_in
    pre: Matrix  # agg @ W


def gcn_forward(adj: NormalizedAdjacency, h_in: Matrix,
                layer: GcnLayer) -> tuple[Matrix, GcnCache]:
    """h_out = activation(adj @ h_in @ W)."""
    d_in = layer.w.shape[0]
    if h_in.ndim != 2 or adj.n_nodes != h_in.shape[0]:
        raise DimensionError(
            f"adjacency has {adj.n_nodes} nodes but features have shape {h_in.shape}"
        )
    if h_in.shape[1] != d_in:
        raise DimensionError(
            f"gcn layer expects d_in={d_in}, got features with {h_in.shape[1]} columns"
        )
    agg = adj.matrix @ h_in
    pre = agg @ layer.w.value
    h_out = activate(layer.activation, pre)
    return h_out, GcnCache(layer=layer, adj=adj, agg=agg, pre=pre)


def gcn_backward(cache: GcnCache, grad_out: Matrix) -> Matrix:
    """Accumulate dL/dW into the layer; return dL/dh_in."""
    if grad_out.shape != cache.pre.shape:
        raise DimensionError(
            f"grad_out shape {grad_out.shape} does not match forward output {cache.pre.shape}"
        )
    d_pre = grad_out * activation_grad(cache.layer.activation, cache.pre)
    cache.layer.w.grad += cache.agg.T @ d_pre
    return cache.adj.matrix.T @ (d_pre @ cache.layer.w.value.T)


# ---------------------------------------------------------------------------
# Gated recurrent cell
# ---------------------------------------------------------------------------

@dataclass
class GruCell:
    w_z: Parameter
    w_r: Parameter
    w_h: Parameter
    u_z: Parameter
    u_r: Parameter
    u_h: Parameter

    @classmethod
    def build(cls, rng: RngStream, d_in: int, d_h: int, name: str = "gru") -> "GruCell":
        return cls(
            w_z=init_uniform(rng, f"{name}.w_z", d_in, d_h),
            w_r=init_uniform(rng, f"{name}.w_r", d_in, d_h),
            w_h=init_uniform(rng, f"{name}.w_h", d_in, d_h),
            u_z=init_uniform(rng, f"{name}.u_z", d_h, d_h),
            u_r=init_uniform(rng, f"{name}.u_r", d_h, d_h),
            u_h=init_uniform(rng, f"{name}.u_h", d_h, d_h),
        )

    @property
    def d_in(self) -> int:
        return self.w_z.shape[0]

    @property
    def d_h(self) -> int:
        return self.w_z.shape[1]

    def parameters(self) -> list[Parameter]:
        return [self.w_z, self.w_r, self.w_h, self.u_z, self.u_r, self.u_h]


@dataclass
class GruCache:
    cell: GruCell
    x: Matrix
    h_prev: Matrix
    z: Matrix
    r: Matrix
    rh: Matrix  # r * h_prev
    cand: Matrix  # tanh candidate


def gru_step(x_t: Matrix, h_prev: Matrix, cell: GruCell) -> tuple[Matrix, GruCache]:
    """One recurrent update; rows are independent sequences sharing weights."""
    if x_t.shape[0] != h_prev.shape[0]:
        raise DimensionError(
            f"x_t has {x_t.shape[0]} rows but h_prev has {h_prev.shape[0]}"
        )
    if x_t.shape[1] != cell.d_in or h_prev.shape[1] != cell.d_h:
        raise DimensionError(
            f"cell expects (d_in={cell.d_in}, d_h={cell.d_h}), got "
            f"x {x_t.shape} and h_prev {h_prev.shape}"
        )
    z = activate("logistic", x_t @ cell.w_z.value + h_prev @ cell.u_z.value)
    r = activate("logistic", x_t @ cell.w_r.value + h_prev @ cell.u_r.value)
    rh = r * h_prev
    cand = activate("tanh", x_t @ cell.w_h.value + rh @ cell.u_h.value)
    h_t = z * h_prev + (1.0 - z) * cand
    return h_t, GruCache(cell=cell, x=x_t, h_prev=h_prev, z=z, r=r, rh=rh, cand=cand)


def gru_backward(cache: GruCache, grad_h: Matrix) -> tuple[Matrix, Matrix]:
    """Accumulate gradients for all six weight matrices; return (dx, dh_prev)."""
    cell = cache.cell
    z, r, cand, h_prev, x = cache.z, cache.r, cache.cand, cache.h_prev, cache.x
    if grad_h.shape != z.shape:
        raise DimensionError(
            f"grad_h shape {grad_h.shape} does not match hidden shape {z.shape}"
        )

    dz = grad_h * (h_prev - cand)
    dcand = grad_h * (1.0 - z)
    dh_prev = grad_h * z

    da_h = dcand * (1.0 - cand * cand)
    cell.w_h.grad += x.T @ da_h
    cell.u_h.grad += cache.rh.T @ da_h
    d_rh = da_h @ cell.u_h.value.T
    dr = d_rh * h_prev
    dh_prev = dh_prev + d_rh * r

    da_r = dr * r * (1.0 - r)
    cell.w_r.grad += x.T @ da_r
    cell.u_r.grad += h_prev.T @ da_r
    dh_prev = dh_prev + da_r @ cell.u_r.value.T

    da_z = dz * z * (1.0 - z)
    cell.w_z.grad += x.T @ da_z
    cell.u_z.grad += h_prev.T @ da_z
    dh_prev = dh_prev + da_z @ cell.u_z.value.T

    dx = da_h @ cell.w_h.value.T + da_r @ cell.w_r.value.T + da_z @ cell.w_z.value.T
    return dx, dh_prev


# ---------------------------------------------------------------------------
# Decoder
# ---------------------------------------------------------------------------

@dataclass
class Decoder:
    """Affine map from the fused representation to all horizon steps at once."""

    w_dec: Parameter  # d_h x (horizon * d_out)
    b_dec: Parameter  # 1 x (horizon * d_out)
    horizon: int
    d_out: int

    @classmethod
    def build(cls, rng: RngStream, d_h: int, horizon: int, d_out: int,
              name: str = "dec") -> "Decoder":
        if horizon < 1 or d_out < 1:
            raise ValidationError(
                f"decoder needs horizon >= 1 and d_out >= 1, got ({horizon}, {d_out})"
            )
        return cls(
            w_dec=init_uniform(rng, f"{name}.w", d_h, horizon * d_out),
            b_dec=init_uniform(rng, f"{name}.b", 1, horizon * d_out),
            horizon=horizon,
            d_out=d_out,
        )

    def parameters(self) -> list[Parameter]:
        return [self.w_dec, self.b_dec]


@dataclass
class DecoderCache:
    dec: Decoder
    h_fused: Matrix


def decode(h_fused: Matrix, dec: Decoder) -> tuple[Matrix, DecoderCache]:
    """h_fused @ W + b, bias broadcast over rows; shape N x (horizon*d_out)."""
    if h_fused.ndim != 2 or h_fused.shape[1] != dec.w_dec.shape[0]:
        raise DimensionError(
            f"decoder expects {dec.w_dec.shape[0]} input columns, got {h_fused.shape}"
        )
    out = h_fused @ dec.w_dec.value + dec.b_dec.value
    return out, DecoderCache(dec=dec, h_fused=h_fused)


def decode_backward(cache: DecoderCache, grad_out: Matrix) -> Matrix:
    """Accumulate decoder gradients; return dL/dh_fused."""
    dec = cache.dec
    expected = (cache.h_fused.shape[0], dec.w_dec.shape[1])
    if grad_out.shape != expected:
        raise DimensionError(
            f"grad_out shape {grad_out.shape} does not match decode output {expected}"
        )
    dec.w_dec.grad += cache.h_fused.T @ grad_out
    dec.b_dec.grad += grad_out.sum(axis=0, keepdims=True)
    return grad_out @ dec.w_dec.value.T
