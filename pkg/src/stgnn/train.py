"""Mini-batch training with Adam, gradient clipping, and early stopping.

The loop is deterministic for a fixed (seed, data, config): sample order is
shuffled by the package's own seeded stream, gradients accumulate in sample
order within a batch, and the batch loss is averaged before backward. Wall
times in the log are measured, not derived from the seed, and are the one
field excluded from the determinism contract.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Scaler, WindowSample
from .errors import CheckpointError, NumericError, ValidationError
from .metrics import MetricReport, compute_horizon_metrics
from .model import ModelConfig, StgnnModel
from .model import loss as mse_loss
from .numeric import Parameter, clip_grad_norm
from .rng import RngStream

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    seed: int = 42
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    early_stop_patience: int = 10
    grad_clip_norm: float = 5.0

    def validate(self) -> None:
        if self.lr < 0:
            raise ValidationError(f"lr must be >= 0, got {self.lr}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError(
                f"epochs and batch_size must be >= 1, got ({self.epochs}, {self.batch_size})"
            )
        if self.early_stop_patience < 1:
            raise ValidationError(
                f"early_stop_patience must be >= 1, got {self.early_stop_patience}"
            )
        if self.grad_clip_norm <= 0:
            raise ValidationError(
                f"grad_clip_norm must be positive, got {self.grad_clip_norm}"
            )

    def to_dict(self) -> dict:
        return {
            "lr": self.lr, "epochs": self.epochs, "batch_size": self.batch_size,
            "seed": self.seed, "beta1": self.beta1, "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "early_stop_patience": self.early_stop_patience,
            "grad_clip_norm": self.grad_clip_norm,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = set(cls().to_dict())
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown train config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg


@dataclass
class TrainLog:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    wall_ms: list[float] = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_loss,wall_ms"]
        for i, (tr, va, ms) in enumerate(zip(self.train_loss, self.val_loss,
                                             self.wall_ms), start=1):
            lines.append(f"{i},{tr!r},{va!r},{ms!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "epochs_run": len(self.train_loss),
            "best_epoch": self.best_epoch,
            "best_val_loss": self.val_loss[self.best_epoch - 1] if self.best_epoch else None,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "wall_ms": self.wall_ms,
        }, indent=2) + "\n"


class AdamOptimizer:
    """Adam with bias correction; denominator sqrt(v_hat) + eps."""

    def __init__(self, params: list[Parameter], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p in self.params:
            p.adam_m *= self.beta1
            p.adam_m += (1.0 - self.beta1) * p.grad
            p.adam_v *= self.beta2
            p.adam_v += (1.0 - self.beta2) * (p.grad * p.grad)
            m_hat = p.adam_m / bc1
            v_hat = p.adam_v / bc2
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _mean_val_loss(model, adj, samples) -> float:
    total = 0.0
    for s in samples:
        pred, _ = model.forward_sample(adj, s)
        total += mse_loss(pred, s.targets)
    return total / len(samples)


def train(model, adj, train_samples: list[WindowSample],
          val_samples: list[WindowSample], cfg: TrainConfig):
    """Train in place; returns (model restored to its best epoch, TrainLog)."""
    cfg.validate()
    if not train_samples or not val_samples:
        raise ValidationError(
            f"need non-empty train and val splits, got {len(train_samples)} / {len(val_samples)}"
        )
    params = model.parameters()
    opt = AdamOptimizer(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
    shuffle_rng = RngStream(cfg.seed)
    order = list(range(len(train_samples)))
    log = TrainLog()
    best_val = float("inf")
    best_values = None
    epochs_since_best = 0

    for epoch in range(1, cfg.epochs + 1):
        t_start = time.perf_counter()
        shuffle_rng.shuffle(order)
        epoch_loss = 0.0
        for b_start in range(0, len(order), cfg.batch_size):
            batch = order[b_start:b_start + cfg.batch_size]
            model.zero_grads()
            scale = 1.0 / len(batch)
            for idx in batch:
                sample = train_samples[idx]
                pred, cache = model.forward_sample(adj, sample)
                sample_loss = mse_loss(pred, sample.targets)
                if not np.isfinite(sample_loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch}, "
                        f"batch {b_start // cfg.batch_size + 1}"
                    )
                epoch_loss += sample_loss
                model.backward_sample(cache, pred, sample.targets, scale=scale)
            clip_grad_norm(params, cfg.grad_clip_norm)
            opt.step()
        train_loss = epoch_loss / len(order)
        val_loss = _mean_val_loss(model, adj, val_samples)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        wall = (time.perf_counter() - t_start) * 1000.0
        log.train_loss.append(train_loss)
        log.val_loss.append(val_loss)
        log.wall_ms.append(wall)

        if val_loss < best_val:
            best_val = val_loss
            best_values = [p.value.copy() for p in params]
            log.best_epoch = epoch
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.early_stop_patience:
                break

    if best_values is not None:
        for p, v in zip(params, best_values):
            p.value[:] = v
    return model, log


def evaluate(model, adj, samples: list[WindowSample], scaler: Scaler,
             target_features=(0,)) -> MetricReport:
    """Metrics in raw target space: predictions and targets are un-scaled
    before comparison; includes a per-horizon-step breakdown."""
    if not samples:
        raise ValidationError("evaluate needs at least one sample")
    preds = []
    truths = []
    for s in samples:
        pred = model.predict_window(adj, s.inputs)
        preds.append(scaler.invert(pred, target_features))
        truths.append(scaler.invert(s.targets, target_features))
    return compute_horizon_metrics(np.stack(preds), np.stack(truths))


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------

def _params_doc(model) -> dict:
    return {
        p.name: {"shape": list(p.shape), "values": p.value.ravel().tolist()}
        for p in model.parameters()
    }


def _params_digest(params_doc: dict) -> str:
    canonical = json.dumps(params_doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _model_kind_and_config(model) -> tuple[str, dict]:
    if isinstance(model, StgnnModel):
        return "stgnn", model.config.to_dict()
    from .baselines import MlpBaseline
    if isinstance(model, MlpBaseline):
        return "mlp", {
            "window": model.window, "n_features": model.n_features,
            "horizon": model.horizon, "d_out": model.d_out,
            "hidden": model.hidden,
        }
    raise CheckpointError(f"cannot checkpoint model of type {type(model).__name__}")


def save_checkpoint(model, scaler: Scaler, path: str) -> None:
    kind, config = _model_kind_and_config(model)
    params_doc = _params_doc(model)
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "model_kind": kind,
        "config": config,
        "params": params_doc,
        "params_sha256": _params_digest(params_doc),
        "scaler": scaler.to_dict(),
        "rng_seed": model.init_seed,
    }
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def load_checkpoint(path: str):
    """Restore (model, scaler); rejects version, shape, and integrity faults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    version = doc.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {version!r}, "
            f"expected {CHECKPOINT_VERSION}"
        )
    for key in ("config", "params", "params_sha256", "scaler", "rng_seed"):
        if key not in doc:
            raise CheckpointError(f"checkpoint {path} is missing {key!r}")
    if _params_digest(doc["params"]) != doc["params_sha256"]:
        raise CheckpointError(f"checkpoint {path} failed its integrity check")
    kind = doc.get("model_kind", "stgnn")
    seed = int(doc["rng_seed"])
    try:
        if kind == "stgnn":
            config = ModelConfig.from_dict(doc["config"])
            model = StgnnModel.build(config, seed=seed)
        elif kind == "mlp":
            from .baselines import MlpBaseline
            model = MlpBaseline(seed=seed, **doc["config"])
        else:
            raise CheckpointError(f"unknown model_kind {kind!r} in {path}")
    except (ValidationError, TypeError) as exc:
        raise CheckpointError(f"checkpoint {path} has an invalid config: {exc}") from exc
    stored = doc["params"]
    for p in model.parameters():
        if p.name not in stored:
            raise CheckpointError(f"checkpoint {path} lacks parameter {p.name!r}")
        entry = stored[p.name]
        shape = tuple(entry["shape"])
        values = np.array(entry["values"], dtype=np.float64)
        if shape != p.shape or values.size != p.value.size:
            raise CheckpointError(
                f"parameter {p.name!r} has shape {shape} with {values.size} values, "
                f"model expects {p.shape}"
            )
        p.value[:] = values.reshape(shape)
    extra = set(stored) - {p.name for p in model.parameters()}
    if extra:
        raise CheckpointError(f"checkpoint {path} has unknown parameters {sorted(extra)}")
    scaler = Scaler.from_dict(doc["scaler"])
    return model, scaler
