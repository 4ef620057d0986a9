"""Dense float64 matrix primitives underpinning all layers.

A Matrix is a 2-D, C-contiguous numpy array of float64. Public operations
validate operand shapes and guarantee finite outputs; callers treat
returned matrices as immutable values. Everything stays dense and 64-bit:
problem sizes are desk scale, and the gradient checker needs the extra
precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, NumericError, ValidationError

Matrix = np.ndarray

ACTIVATIONS = ("logistic", "tanh", "relu")
ELEMENTWISE_OPS = ("add", "sub", "hadamard")


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> Matrix:
    """Coerce nested sequences or arrays into a float64 matrix."""
    m = np.array(values, dtype=np.float64, order="C")
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if rows is not None and cols is not None and m.shape != (rows, cols):
        raise DimensionError(f"expected shape {(rows, cols)}, got {m.shape}")
    return m


def zeros(rows: int, cols: int) -> Matrix:
    return np.zeros((rows, cols), dtype=np.float64)


def _check_2d(m: Matrix, name: str) -> None:
    if not isinstance(m, np.ndarray) or m.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix")


def ensure_finite(m: Matrix, context: str) -> Matrix:
    if not np.isfinite(m).all():
        raise NumericError(f"non-finite values produced by {context}")
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product with shape validation."""
    _check_2d(a, "a")
    _check_2d(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    with np.errstate(invalid="ignore", over="ignore"):
        out = a @ b
    return ensure_finite(out, "matmul")


def elementwise(op: str, a: Matrix, b: Matrix) -> Matrix:
    """Entrywise add / sub / hadamard on same-shape matrices."""
    _check_2d(a, "a")
    _check_2d(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"elementwise shape mismatch: {a.shape} vs {b.shape}")
    if op == "add":
        out = a + b
    elif op == "sub":
        out = a - b
    elif op == "hadamard":
        out = a * b
    else:
        raise ValidationError(f"unknown elementwise op {op!r}, expected one of {ELEMENTWISE_OPS}")
    return ensure_finite(out, f"elementwise {op}")


def _logistic(x: np.ndarray) -> np.ndarray:
    # branch on sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activate(kind: str, a: Matrix) -> Matrix:
    """Entrywise nonlinearity: logistic(x) = 1/(1+e^-x), tanh, or relu."""
    _check_2d(a, "a")
    if kind == "logistic":
        out = _logistic(a)
    elif kind == "tanh":
        out = np.tanh(a)
    elif kind == "relu":
        out = np.maximum(a, 0.0)
    else:
        raise ValidationError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")
    return ensure_finite(out, f"activate {kind}")


def activation_grad(kind: str, pre: Matrix) -> Matrix:
    """Derivative of the activation evaluated at the pre-activation values."""
    if kind == "logistic":
        s = _logistic(pre)
        return s * (1.0 - s)
    if kind == "tanh":
        t = np.tanh(pre)
        return 1.0 - t * t
    if kind == "relu":
        return (pre > 0).astype(np.float64)
    raise ValidationError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


@dataclass
class Parameter:
    """A learnable matrix with its gradient and Adam moment buffers."""

    name: str
    value: Matrix
    grad: Matrix
    adam_m: Matrix
    adam_v: Matrix

    @classmethod
    def from_value(cls, name: str, value) -> "Parameter":
        v = as_matrix(value)
        return cls(
            name=name,
            value=v,
            grad=np.zeros_like(v),
            adam_m=np.zeros_like(v),
            adam_v=np.zeros_like(v),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[:] = 0.0


def grad_check(
    f: Callable[[], float],
    params: Iterable[Parameter],
    eps: float = 1e-5,
) -> float:
    """Compare analytic gradients against central differences.

    ``f`` re-evaluates the scalar objective from the current parameter
    values; each ``Parameter.grad`` must already hold the analytic gradient
    of ``f``. Returns the worst relative error over all entries:
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    if eps <= 0:
        raise ValidationError(f"grad_check eps must be positive, got {eps}")
    worst = 0.0
    for p in params:
        value = p.value
        analytic = p.grad
        for idx in np.ndindex(*value.shape):
            orig = value[idx]
            value[idx] = orig + eps
            f_plus = f()
            value[idx] = orig - eps
            f_minus = f()
            value[idx] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NumericError(
                    f"objective is non-finite while perturbing {p.name}{list(idx)}"
                )
            numeric = (f_plus - f_minus) / (2.0 * eps)
            rel = abs(analytic[idx] - numeric) / max(1e-8, abs(analytic[idx]) + abs(numeric))
            worst = max(worst, rel)
    return worst


def global_grad_norm(params: Sequence[Parameter]) -> float:
    total = 0.0
    for p in params:
        total += float(np.sum(p.grad * p.grad))
    return float(np.sqrt(total))


def clip_grad_norm(params: Sequence[Parameter], max_norm: float) -> float:
    """Scale all gradients so the global L2 norm is at most ``max_norm``."""
    norm = global_grad_norm(params)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params:
            p.grad *= scale
    return norm
