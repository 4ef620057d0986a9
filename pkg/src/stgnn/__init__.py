"""Spatiotemporal graph neural network for workload forecasting in
distributed backend systems: graph convolution over the machine topology,
gated recurrent temporal modeling, joint decoding, and a deterministic
training/evaluation harness that runs at desk scale."""

from .errors import (CheckpointError, DimensionError, NumericError,
                     SchemaError, StgnnError, ValidationError)
from .rng import RngStream
from .numeric import (Matrix, Parameter, activate, as_matrix, elementwise,
                      grad_check, matmul)
from .graph import (NormalizedAdjacency, TopologyGraph, build_graph,
                    load_graph, normalize, save_graph)
from .layers import Decoder, GcnLayer, GruCell, decode, gcn_forward, gru_step
from .data import (NodeSeries, Scaler, SynthConfig, WindowSample,
                   build_correlation_graph, chronological_split, fit_scaler,
                   ingest_usage_csv, load_series, make_windows,
                   prepare_dataset, save_series, synth_generate)
from .model import ModelConfig, StgnnModel, backward, forward, loss, predict
from .metrics import MetricReport, compute_horizon_metrics, compute_metrics
from .train import (TrainConfig, TrainLog, evaluate, load_checkpoint,
                    save_checkpoint, train)
from .baselines import MlpBaseline, PersistenceBaseline, persistence_predict

__version__ = "0.1.0"

__all__ = [
    "StgnnError", "DimensionError", "ValidationError", "SchemaError",
    "NumericError", "CheckpointError",
    "RngStream", "Matrix", "Parameter", "matmul", "elementwise", "activate",
    "as_matrix", "grad_check",
    "TopologyGraph", "NormalizedAdjacency", "build_graph", "normalize",
    "save_graph", "load_graph",
    "GcnLayer", "GruCell", "Decoder", "gcn_forward", "gru_step", "decode",
    "NodeSeries", "WindowSample", "Scaler", "SynthConfig",
    "ingest_usage_csv", "build_correlation_graph", "fit_scaler",
    "make_windows", "chronological_split", "prepare_dataset",
    "synth_generate", "save_series", "load_series",
    "ModelConfig", "StgnnModel", "forward", "backward", "loss", "predict",
    "MetricReport", "compute_metrics", "compute_horizon_metrics",
    "TrainConfig", "TrainLog", "train", "evaluate", "save_checkpoint",
    "load_checkpoint",
    "MlpBaseline", "PersistenceBaseline", "persistence_predict",
    "__version__",
]
