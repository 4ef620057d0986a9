"""Trace ingestion, graph construction, scaling, windowing, and synthesis.

Ingestion turns resource-usage CSVs into aligned per-node time series:
samples are averaged per fixed-width bin, gaps are forward-filled (backend
metrics are step-persistent; interpolation would leak future data), and the
fill positions are recorded in a mask. Node order is canonical (earliest
timestamp, then id) so shuffled input rows produce identical output.

The synthetic generator produces series with known cross-node propagation:

    x[t+1] = alpha * (A_norm @ x[t]) + beta * sin(2*pi*t/period + phase)
             + burst + gaussian noise

with phase[i] = 2*pi*i/N and x[0] = 0. One scalar process per node drives
all three features through fixed multipliers (1.0, 0.7, 0.4). Draw order
per step: one burst uniform per node, then one noise normal per node.
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, ValidationError
from .graph import TopologyGraph, build_graph, normalize
from .rng import RngStream

FEATURE_MULTIPLIERS = (1.0, 0.7, 0.4)
DEFAULT_FEATURES = ("cpu", "mem", "disk_io")
GRAPH_SPECS = ("ring", "star", "erdos")

_SERIES_MAGIC = b"STGN"
_SERIES_VERSION = 1

TIME_UNITS = {"us": 1_000_000, "ms": 1_000, "s": 1}


@dataclass
class NodeSeries:
    """Aligned per-node feature time series with a missing-data mask."""

    node_ids: tuple[str, ...]
    bin_width: float  # seconds
    values: np.ndarray  # (T, N, d) float64
    missing_mask: np.ndarray  # (T, N) bool, True where a bin was filled
    feature_names: tuple[str, ...] = DEFAULT_FEATURES

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]

    @property
    def n_features(self) -> int:
        return self.values.shape[2]


@dataclass
class WindowSample:
    """One training pair: k history steps and h target steps."""

    inputs: np.ndarray  # (k, N, d)
    targets: np.ndarray  # (h, N, d_out)
    t_origin: int

    @property
    def window(self) -> int:
        return self.inputs.shape[0]

    @property
    def horizon(self) -> int:
        return self.targets.shape[0]


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

DEFAULT_COLUMNS = {
    "time_col": "start_time",
    "id_col": "machine_id",
    "feature_cols": list(DEFAULT_FEATURES),
    "time_unit": "us",
}


def ingest_usage_csv(path: str, bin_width: float, node_filter=None,
                     columns: dict | None = None) -> NodeSeries:
    """Bin a usage table into a NodeSeries.

    ``bin_width`` is in seconds; timestamps are integers in the unit named
    by ``columns["time_unit"]`` (us, ms, or s). Every bin holds the mean of
    its samples; empty bins inherit the previous bin's value (0.0 at the
    series start) and are flagged in the mask.
    """
    cols = dict(DEFAULT_COLUMNS)
    if columns:
        unknown = set(columns) - set(DEFAULT_COLUMNS)
        if unknown:
            raise ValidationError(f"unknown column-config keys: {sorted(unknown)}")
        cols.update(columns)
    unit = cols["time_unit"]
    if unit not in TIME_UNITS:
        raise ValidationError(f"time_unit must be one of {sorted(TIME_UNITS)}, got {unit!r}")
    if bin_width <= 0:
        raise ValidationError(f"bin_width must be positive, got {bin_width}")
    bin_width_raw = int(round(bin_width * TIME_UNITS[unit]))
    if bin_width_raw < 1:
        raise ValidationError(f"bin_width {bin_width}s is below one {unit} tick")

    feature_cols = list(cols["feature_cols"])
    keep = set(str(x) for x in node_filter) if node_filter is not None else None

    # rows[(machine)] -> list of (time, feature tuple); sorted later so the
    # accumulation order (and therefore the float sums) ignores file order
    rows: dict[str, list[tuple]] = {}
    first_seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = [cols["time_col"], cols["id_col"]] + feature_cols
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"usage CSV {path} lacks columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            machine = row[cols["id_col"]]
            if keep is not None and machine not in keep:
                continue
            t = int(float(row[cols["time_col"]]))
            feats = []
            for c in feature_cols:
                v = float(row[c])
                if not np.isfinite(v) or v < 0:
                    raise ValidationError(
                        f"line {lineno}: feature {c}={v} must be finite and >= 0"
                    )
                feats.append(v)
            rows.setdefault(machine, []).append((t, tuple(feats)))
            if machine not in first_seen or t < first_seen[machine]:
                first_seen[machine] = t
    if not rows:
        raise ValidationError(f"usage CSV {path} contains no data rows")

    node_ids = tuple(sorted(rows, key=lambda m: (first_seen[m], m)))
    t0 = min(first_seen.values())
    t_max = max(t for samples in rows.values() for t, _ in samples)
    n_bins = (t_max - t0) // bin_width_raw + 1
    n_nodes = len(node_ids)
    d = len(feature_cols)

    values = np.zeros((n_bins, n_nodes, d), dtype=np.float64)
    mask = np.ones((n_bins, n_nodes), dtype=bool)
    for n_idx, machine in enumerate(node_ids):
        by_bin: dict[int, list[tuple]] = {}
        for t, feats in rows[machine]:
            by_bin.setdefault((t - t0) // bin_width_raw, []).append((t, feats))
        for b, samples in by_bin.items():
            samples.sort()
            acc = np.zeros(d, dtype=np.float64)
            for _, feats in samples:
                acc += feats
            values[b, n_idx] = acc / len(samples)
            mask[b, n_idx] = False
        # forward-fill: zeros at the series start are already in place
        for b in range(1, n_bins):
            if mask[b, n_idx]:
                values[b, n_idx] = values[b - 1, n_idx]

    return NodeSeries(node_ids=node_ids, bin_width=float(bin_width),
                      values=values, missing_mask=mask,
                      feature_names=tuple(feature_cols))


# ---------------------------------------------------------------------------
# Correlation graph
# ---------------------------------------------------------------------------

def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 0.0 when either series has zero variance."""
    a = a - a.mean()
    b = b - b.mean()
    va = float(a @ a)
    vb = float(b @ b)
    if va <= 0.0 or vb <= 0.0:
        return 0.0
    return float(a @ b) / math.sqrt(va * vb)


def build_correlation_graph(series: NodeSeries, tau: float,
                            max_degree: int) -> TopologyGraph:
    """Connect node pairs whose cpu series correlate at least ``tau``.

    Candidate edges are admitted strongest-first (ties by lower (i, j)),
    and an edge is kept only while both endpoints are below ``max_degree``.
    """
    if series.n_steps < 8:
        raise ValidationError(
            f"correlation graph needs at least 8 steps, got {series.n_steps}"
        )
    if not 0.0 < tau <= 1.0:
        raise ValidationError(f"tau must be in (0, 1], got {tau}")
    if max_degree < 1:
        raise ValidationError(f"max_degree must be >= 1, got {max_degree}")
    n = series.n_nodes
    cpu = series.values[:, :, 0]
    candidates = []
    for i in range(n):
        for j in range(i + 1, n):
            c = pearson(cpu[:, i], cpu[:, j])
            if c >= tau:
                candidates.append((i, j, c))
    candidates.sort(key=lambda e: (-e[2], e[0], e[1]))
    degree = [0] * n
    kept = []
    for i, j, c in candidates:
        if degree[i] < max_degree and degree[j] < max_degree:
            kept.append((i, j, c))
            degree[i] += 1
            degree[j] += 1
    return build_graph(n, kept, series.node_ids)


# ---------------------------------------------------------------------------
# Scaling
# ---------------------------------------------------------------------------

@dataclass
class Scaler:
    """Per (node, feature) min-max scaler fitted on the training range only."""

    minimum: np.ndarray  # (N, d)
    maximum: np.ndarray  # (N, d)
    epsilon: float = 1e-8

    def apply(self, values: np.ndarray) -> np.ndarray:
        span = self.maximum - self.minimum + self.epsilon
        return (values - self.minimum) / span

    def invert(self, values: np.ndarray, features=None) -> np.ndarray:
        """Undo scaling; ``features`` selects the fitted columns values carry."""
        if features is None:
            lo, hi = self.minimum, self.maximum
        else:
            idx = list(features)
            lo, hi = self.minimum[:, idx], self.maximum[:, idx]
        return values * (hi - lo + self.epsilon) + lo

    def to_dict(self) -> dict:
        return {
            "minimum": self.minimum.tolist(),
            "maximum": self.maximum.tolist(),
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Scaler":
        return cls(
            minimum=np.array(doc["minimum"], dtype=np.float64),
            maximum=np.array(doc["maximum"], dtype=np.float64),
            epsilon=float(doc["epsilon"]),
        )


def fit_scaler(series: NodeSeries, split_end: int) -> Scaler:
    """Fit min/max on steps [0, split_end) only, to avoid test leakage."""
    if not 1 <= split_end <= series.n_steps:
        raise ValidationError(
            f"split_end must be in [1, {series.n_steps}], got {split_end}"
        )
    window = series.values[:split_end]
    return Scaler(minimum=window.min(axis=0), maximum=window.max(axis=0))


# ---------------------------------------------------------------------------
# Windowing and splits
# ---------------------------------------------------------------------------

def window_count(n_steps: int, k: int, h: int, stride: int) -> int:
    if n_steps < k + h:
        return 0
    return (n_steps - k - h) // stride + 1


def make_windows(series, k: int, h: int, stride: int = 1,
                 target_features=(0,)) -> list[WindowSample]:
    """Cut sliding windows: inputs [t, t+k), targets [t+k, t+k+h)."""
    values = series.values if isinstance(series, NodeSeries) else np.asarray(series)
    if k < 1 or h < 1 or stride < 1:
        raise ValidationError(f"k, h, stride must be >= 1, got ({k}, {h}, {stride})")
    n_steps = values.shape[0]
    if n_steps < k + h:
        raise ValidationError(
            f"series has {n_steps} steps, need at least k+h={k + h} for one window"
        )
    if not np.isfinite(values).all():
        raise ValidationError("series contains non-finite values")
    idx = list(target_features)
    samples = []
    for s in range(window_count(n_steps, k, h, stride)):
        t = s * stride
        samples.append(WindowSample(
            inputs=values[t:t + k].copy(),
            targets=values[t + k:t + k + h][:, :, idx].copy(),
            t_origin=t,
        ))
    return samples


def chronological_split(samples: list[WindowSample],
                        ratios=(0.7, 0.15, 0.15)) -> tuple[list, list, list]:
    """Split by time origin, then drop train samples whose targets leak
    into any validation/test input range."""
    if len(samples) < 3:
        raise ValidationError(f"need at least 3 samples to split, got {len(samples)}")
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ValidationError(f"ratios must be non-negative and sum to 1, got {ratios}")
    ordered = sorted(samples, key=lambda s: s.t_origin)
    n = len(ordered)
    n_train = int(n * ratios[0])
    n_val = int(n * ratios[1])
    train = ordered[:n_train]
    val = ordered[n_train:n_train + n_val]
    test = ordered[n_train + n_val:]
    others = val + test
    if others:
        # a train target [t+k, t+k+h) overlaps an input [t', t'+k) iff
        # t' < t+k+h, so only the earliest non-train origin matters
        cutoff = min(s.t_origin for s in others)
        train = [s for s in train
                 if s.t_origin + s.window + s.horizon <= cutoff]
    return train, val, test


def prepare_dataset(series: NodeSeries, k: int, h: int, stride: int = 1,
                    ratios=(0.7, 0.15, 0.15), target_features=(0,),
                    scaler: Scaler | None = None):
    """Full pipeline: split boundaries, leak-free scaler fit, scaled windows.

    Returns (train, val, test, scaler). The scaler is fitted on exactly the
    steps touched by surviving train samples, then applied to the whole
    series before windows are cut. Passing a pre-fitted ``scaler`` (e.g.
    one restored from a checkpoint) skips the fit and reuses it, so
    evaluation sees the same scaled space the model was trained in.
    """
    n = window_count(series.n_steps, k, h, stride)
    if n < 3:
        raise ValidationError(
            f"dataset yields only {n} windows; need at least 3 to split"
        )
    origins = [s * stride for s in range(n)]
    n_train = int(n * ratios[0])
    if n_train == 0:
        raise ValidationError("training split is empty; add data or adjust ratios")
    train_origins = origins[:n_train]
    cutoff = origins[n_train] if n_train < n else None
    if cutoff is not None:
        train_origins = [t for t in train_origins if t + k + h <= cutoff]
    if not train_origins:
        raise ValidationError("training split is empty after boundary drop")
    split_end = max(t + k + h for t in train_origins)

    if scaler is None:
        scaler = fit_scaler(series, split_end)
    scaled = scaler.apply(series.values)
    samples = make_windows(scaled, k, h, stride, target_features)
    train, val, test = chronological_split(samples, ratios)
    return train, val, test, scaler


# ---------------------------------------------------------------------------
# Synthetic traces
# ---------------------------------------------------------------------------

@dataclass
class SynthConfig:
    """Desk-scale trace generator with known cross-node propagation."""

    n_nodes: int = 20
    n_steps: int = 2000
    seed: int = 42
    alpha: float = 0.8  # propagation gain, must stay < 1 for stability
    beta: float = 0.5  # seasonal amplitude
    period: int = 48
    burst_rate: float = 0.0  # probability per node-step
    burst_scale: float = 1.0
    noise_sigma: float = 0.05
    graph_spec: str = "ring"
    erdos_p: float = 0.2

    def validate(self) -> None:
        if self.n_nodes < 1 or self.n_steps < 1:
            raise ValidationError(
                f"n_nodes and n_steps must be >= 1, got ({self.n_nodes}, {self.n_steps})"
            )
        if not 0.0 <= self.alpha < 1.0:
            raise ValidationError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.period < 1:
            raise ValidationError(f"period must be >= 1, got {self.period}")
        if not 0.0 <= self.burst_rate <= 1.0:
            raise ValidationError(f"burst_rate must be in [0, 1], got {self.burst_rate}")
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.graph_spec not in GRAPH_SPECS:
            raise ValidationError(
                f"graph_spec must be one of {GRAPH_SPECS}, got {self.graph_spec!r}"
            )
        if self.graph_spec == "erdos" and not 0.0 <= self.erdos_p <= 1.0:
            raise ValidationError(f"erdos_p must be in [0, 1], got {self.erdos_p}")

    def to_dict(self) -> dict:
        return {
            "n_nodes": self.n_nodes, "n_steps": self.n_steps, "seed": self.seed,
            "alpha": self.alpha, "beta": self.beta, "period": self.period,
            "burst_rate": self.burst_rate, "burst_scale": self.burst_scale,
            "noise_sigma": self.noise_sigma, "graph_spec": self.graph_spec,
            "erdos_p": self.erdos_p,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        known = set(cls().to_dict())
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**doc)


def _synth_graph(cfg: SynthConfig, rng: RngStream) -> TopologyGraph:
    n = cfg.n_nodes
    node_ids = tuple(f"n{i:03d}" for i in range(n))
    pairs: dict[tuple[int, int], float] = {}
    if cfg.graph_spec == "ring":
        for i in range(n):
            j = (i + 1) % n
            if i != j:
                pairs[(min(i, j), max(i, j))] = 1.0
    elif cfg.graph_spec == "star":
        for i in range(1, n):
            pairs[(0, i)] = 1.0
    else:  # erdos: one uniform per (i, j) pair in lexicographic order
        for i in range(n):
            for j in range(i + 1, n):
                if rng.uniform() < cfg.erdos_p:
                    pairs[(i, j)] = 1.0
    edges = [(i, j, w) for (i, j), w in sorted(pairs.items())]
    return build_graph(n, edges, node_ids)


def synth_generate(cfg: SynthConfig) -> tuple[TopologyGraph, NodeSeries]:
    """Generate (graph, series) deterministically from the config seed."""
    cfg.validate()
    rng = RngStream(cfg.seed)
    graph = _synth_graph(cfg, rng)
    n, t_total = cfg.n_nodes, cfg.n_steps
    adj = normalize(graph, "symmetric").matrix
    phase = 2.0 * math.pi * np.arange(n) / n

    base = np.zeros((t_total, n), dtype=np.float64)
    x = np.zeros(n, dtype=np.float64)
    for t in range(t_total - 1):
        seasonal = cfg.beta * np.sin(2.0 * math.pi * t / cfg.period + phase)
        bursts = np.zeros(n)
        for i in range(n):
            if rng.uniform() < cfg.burst_rate:
                bursts[i] = cfg.burst_scale
        noise = np.array([rng.normal(0.0, cfg.noise_sigma) for _ in range(n)])
        x = cfg.alpha * (adj @ x) + seasonal + bursts + noise
        base[t + 1] = x

    mult = np.array(FEATURE_MULTIPLIERS)
    values = base[:, :, None] * mult[None, None, :]
    series = NodeSeries(
        node_ids=graph.node_ids,
        bin_width=1.0,
        values=values,
        missing_mask=np.zeros((t_total, n), dtype=bool),
    )
    return graph, series


# ---------------------------------------------------------------------------
# Series cache file
# ---------------------------------------------------------------------------

def save_series(series: NodeSeries, path: str) -> None:
    """Binary cache: magic 'STGN', u16 version, u32 N/T/d, f64 bin width,
    then (t, node, feature) row-major little-endian float64. Node ids, the
    missing mask, and feature names live in a JSON sidecar at path + '.json'.
    """
    t_total, n, d = series.values.shape
    header = _SERIES_MAGIC + struct.pack("<HIIId", _SERIES_VERSION, n, t_total, d,
                                         series.bin_width)
    payload = series.values.astype("<f8").tobytes()
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)
    sidecar = {
        "node_ids": list(series.node_ids),
        "feature_names": list(series.feature_names),
        "missing_mask": series.missing_mask.astype(int).tolist(),
    }
    tmp = path + ".json.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(sidecar, indent=None, separators=(",", ":")) + "\n")
    os.replace(tmp, path + ".json")


def load_series(path: str) -> NodeSeries:
    with open(path, "rb") as fh:
        blob = fh.read()
    head_len = 4 + struct.calcsize("<HIIId")
    if len(blob) < head_len or blob[:4] != _SERIES_MAGIC:
        raise SchemaError(f"{path} is not a series cache file")
    version, n, t_total, d, bin_width = struct.unpack("<HIIId", blob[4:head_len])
    if version != _SERIES_VERSION:
        raise SchemaError(f"unsupported series cache version {version}")
    expected = head_len + t_total * n * d * 8
    if len(blob) != expected:
        raise SchemaError(
            f"{path} is truncated or padded: {len(blob)} bytes, expected {expected}"
        )
    values = np.frombuffer(blob[head_len:], dtype="<f8").reshape(t_total, n, d)
    sidecar_path = path + ".json"
    if not os.path.exists(sidecar_path):
        raise SchemaError(f"missing series sidecar {sidecar_path}")
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    mask = np.array(sidecar["missing_mask"], dtype=bool)
    if mask.shape != (t_total, n):
        raise SchemaError(
            f"sidecar mask shape {mask.shape} does not match series ({t_total}, {n})"
        )
    return NodeSeries(
        node_ids=tuple(sidecar["node_ids"]),
        bin_width=float(bin_width),
        values=values.astype(np.float64),
        missing_mask=mask,
        feature_names=tuple(sidecar.get("feature_names", DEFAULT_FEATURES)),
    )
