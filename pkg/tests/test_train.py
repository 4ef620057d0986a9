"""Optimizer math, training loop behavior, and checkpoint integrity."""

import copy
import json
import math

import numpy as np
import pytest

from stgnn.data import SynthConfig, WindowSample, prepare_dataset, synth_generate
from stgnn.errors import CheckpointError, NumericError, ValidationError
from stgnn.graph import build_graph, normalize
from stgnn.model import ModelConfig, StgnnModel
from stgnn.numeric import Parameter
from stgnn.rng import RngStream
from stgnn.train import (
    AdamOptimizer,
    TrainConfig,
    TrainLog,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)

TINY = dict(n_features=1, d_hidden_gcn=3, n_gcn_layers=1, d_hidden_gru=3,
            horizon=1, d_out=1, window=2)


def tiny_model(seed=3, **overrides) -> StgnnModel:
    return StgnnModel.build(ModelConfig(**{**TINY, **overrides}), seed=seed)


def pair_adj():
    return normalize(build_graph(2, [(0, 1, 1.0)]))


def fixed_samples(targets_value: float, n_samples: int = 6):
    rng = RngStream(17)
    out = []
    for i in range(n_samples):
        inputs = np.array(
            [[[rng.uniform_range(-0.5, 0.5)] for _ in range(2)] for _ in range(2)]
        )
        targets = np.full((1, 2, 1), targets_value)
        out.append(WindowSample(inputs=inputs, targets=targets, t_origin=i))
    return out


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

def test_adam_first_step_hand_computed():
    p = Parameter.from_value("w", np.array([[1.0]]))
    p.grad[:] = 0.5
    AdamOptimizer([p], lr=0.1).step()
    # after bias correction the first step is lr * g / (|g| + eps)
    expected = 1.0 - 0.1 * 0.5 / (math.sqrt(0.25) + 1e-8)
    assert p.value[0, 0] == pytest.approx(expected, rel=1e-12)


def test_adam_matches_reference_implementation_over_steps():
    rng = RngStream(2)
    p = Parameter.from_value("w", np.array([[0.3, -0.8], [1.2, 0.05]]))
    opt = AdamOptimizer([p], lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8)
    ref_w = p.value.copy()
    m = np.zeros_like(ref_w)
    v = np.zeros_like(ref_w)
    for t in range(1, 6):
        g = np.array([[rng.normal() for _ in range(2)] for _ in range(2)])
        p.grad[:] = g
        opt.step()
        m = m * 0.9 + 0.1 * g
        v = v * 0.999 + 0.001 * (g * g)
        m_hat = m / (1.0 - 0.9 ** t)
        v_hat = v / (1.0 - 0.999 ** t)
        ref_w = ref_w - 0.01 * m_hat / (np.sqrt(v_hat) + 1e-8)
        assert np.allclose(p.value, ref_w, rtol=0.0, atol=1e-15)
    assert opt.t == 5


def test_adam_updates_every_parameter():
    a = Parameter.from_value("a", np.ones((1, 2)))
    b = Parameter.from_value("b", np.ones((2, 1)))
    a.grad[:] = 1.0
    b.grad[:] = -1.0
    AdamOptimizer([a, b], lr=0.1).step()
    assert np.all(a.value < 1.0)
    assert np.all(b.value > 1.0)


# ---------------------------------------------------------------------------
# config and log
# ---------------------------------------------------------------------------

def test_train_config_validation():
    TrainConfig(lr=0.0).validate()  # zero learning rate is a valid no-op run
    with pytest.raises(ValidationError):
        TrainConfig(lr=-0.1).validate()
    with pytest.raises(ValidationError):
        TrainConfig(epochs=0).validate()
    with pytest.raises(ValidationError):
        TrainConfig(batch_size=0).validate()
    with pytest.raises(ValidationError):
        TrainConfig(early_stop_patience=0).validate()
    with pytest.raises(ValidationError):
        TrainConfig(grad_clip_norm=0.0).validate()
    with pytest.raises(ValidationError):
        TrainConfig.from_dict({"learning_rate": 0.1})
    cfg = TrainConfig(lr=0.02, epochs=7, seed=5)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_train_log_csv_and_json():
    log = TrainLog(train_loss=[0.5, 0.25], val_loss=[0.6, 0.3],
                   wall_ms=[12.0, 11.5], best_epoch=2)
    csv_text = log.to_csv()
    lines = csv_text.splitlines()
    assert lines[0] == "epoch,train_loss,val_loss,wall_ms"
    assert lines[1] == "1,0.5,0.6,12.0"
    assert len(lines) == 3 and csv_text.endswith("\n")
    assert "np.float64" not in csv_text  # reprs must be plain floats
    doc = json.loads(log.to_json())
    assert doc["epochs_run"] == 2
    assert doc["best_epoch"] == 2
    assert doc["best_val_loss"] == 0.3


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def train_setup(seed=3, n_steps=60):
    _, series = synth_generate(SynthConfig(n_nodes=4, n_steps=n_steps, seed=1))
    graph, _ = synth_generate(SynthConfig(n_nodes=4, n_steps=4, seed=1))
    adj = normalize(graph)
    tr, va, te, scaler = prepare_dataset(series, k=4, h=1)
    model = StgnnModel.build(ModelConfig(n_features=3, window=4, horizon=1),
                             seed=seed)
    return model, adj, tr, va, te, scaler


def test_training_reduces_loss():
    model, adj, tr, va, _, _ = train_setup()
    cfg = TrainConfig(lr=0.01, epochs=8, batch_size=8, seed=0,
                      early_stop_patience=20)
    model, log = train(model, adj, tr, va, cfg)
    assert len(log.train_loss) == len(log.val_loss) == len(log.wall_ms)
    assert log.train_loss[-1] < log.train_loss[0]
    assert 1 <= log.best_epoch <= len(log.val_loss)
    assert log.val_loss[log.best_epoch - 1] == min(log.val_loss)


def test_training_is_deterministic_given_seed():
    runs = []
    for _ in range(2):
        model, adj, tr, va, _, _ = train_setup(seed=9)
        cfg = TrainConfig(lr=0.02, epochs=4, batch_size=4, seed=9)
        model, log = train(model, adj, tr, va, cfg)
        runs.append((log, [p.value.copy() for p in model.parameters()]))
    log_a, params_a = runs[0]
    log_b, params_b = runs[1]
    assert log_a.train_loss == log_b.train_loss  # exact float equality
    assert log_a.val_loss == log_b.val_loss
    assert all(np.array_equal(a, b) for a, b in zip(params_a, params_b))


def test_early_stop_restores_the_best_epoch():
    # train pulls predictions toward +0.5 while validation wants -0.5, so the
    # validation loss only degrades and the run must stop at patience and
    # rewind to its best epoch
    adj = pair_adj()
    cfg = TrainConfig(lr=0.05, epochs=30, batch_size=8, seed=1,
                      early_stop_patience=3)
    model, log = train(tiny_model(seed=3), adj,
                       fixed_samples(0.5), fixed_samples(-0.5, 3), cfg)
    assert len(log.train_loss) < cfg.epochs
    assert len(log.train_loss) <= log.best_epoch + cfg.early_stop_patience
    assert log.val_loss[log.best_epoch - 1] == min(log.val_loss)

    # rerunning for exactly best_epoch epochs lands on identical parameters
    replay, _ = train(tiny_model(seed=3), adj,
                      fixed_samples(0.5), fixed_samples(-0.5, 3),
                      TrainConfig(lr=0.05, epochs=log.best_epoch, batch_size=8,
                                  seed=1, early_stop_patience=3))
    for p, q in zip(model.parameters(), replay.parameters()):
        assert np.array_equal(p.value, q.value), p.name


def test_zero_lr_leaves_parameters_untouched():
    model, adj, tr, va, _, _ = train_setup(seed=5)
    before = [p.value.copy() for p in model.parameters()]
    model, log = train(model, adj, tr, va,
                       TrainConfig(lr=0.0, epochs=2, batch_size=8, seed=0))
    assert all(np.array_equal(b, p.value)
               for b, p in zip(before, model.parameters()))
    assert log.train_loss[0] == pytest.approx(log.train_loss[1], rel=1e-12)


def test_non_finite_training_loss_raises():
    adj = pair_adj()
    bad = fixed_samples(0.5)
    bad[0].targets[0, 0, 0] = np.inf
    with pytest.raises(NumericError):
        train(tiny_model(), adj, bad, fixed_samples(0.0, 2),
              TrainConfig(epochs=2, seed=0))


def test_non_finite_validation_loss_raises():
    adj = pair_adj()
    bad_val = fixed_samples(0.0, 2)
    bad_val[1].targets[0, 1, 0] = np.nan
    with pytest.raises(NumericError):
        train(tiny_model(), adj, fixed_samples(0.5), bad_val,
              TrainConfig(epochs=2, seed=0))


def test_train_requires_samples():
    with pytest.raises(ValidationError):
        train(tiny_model(), pair_adj(), [], fixed_samples(0.0, 2),
              TrainConfig(epochs=1))
    with pytest.raises(ValidationError):
        train(tiny_model(), pair_adj(), fixed_samples(0.0, 2), [],
              TrainConfig(epochs=1))


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def test_evaluate_reports_in_raw_target_space():
    model, adj, _, _, te, scaler = train_setup(seed=2)
    report = evaluate(model, adj, te, scaler, target_features=(0,))
    preds = np.stack([scaler.invert(model.predict_window(adj, s.inputs), (0,))
                      for s in te])
    truths = np.stack([scaler.invert(s.targets, (0,)) for s in te])
    assert report.mae == pytest.approx(np.mean(np.abs(preds - truths)), rel=1e-12)
    assert report.n_points == preds.size
    assert len(report.per_horizon) == 1
    with pytest.raises(ValidationError):
        evaluate(model, adj, [], scaler)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def trained_tiny(tmp_path):
    adj = pair_adj()
    model, _ = train(tiny_model(seed=3), adj, fixed_samples(0.5),
                     fixed_samples(0.4, 3),
                     TrainConfig(lr=0.05, epochs=3, batch_size=4, seed=1))
    scaler = None
    from stgnn.data import Scaler
    scaler = Scaler(minimum=np.zeros((2, 1)), maximum=np.ones((2, 1)))
    path = str(tmp_path / "ckpt.json")
    save_checkpoint(model, scaler, path)
    return model, scaler, adj, path


def test_checkpoint_round_trip_predictions_are_bitwise(tmp_path):
    model, scaler, adj, path = trained_tiny(tmp_path)
    loaded, loaded_scaler = load_checkpoint(path)
    inputs = np.array([[[0.3], [-0.2]], [[0.1], [0.4]]])
    assert np.array_equal(loaded.predict_window(adj, inputs),
                          model.predict_window(adj, inputs))
    assert np.array_equal(loaded_scaler.minimum, scaler.minimum)
    assert np.array_equal(loaded_scaler.maximum, scaler.maximum)


def test_checkpoint_bytes_are_stable(tmp_path):
    model, scaler, _, path = trained_tiny(tmp_path)
    first = open(path, "rb").read()
    save_checkpoint(model, scaler, path)
    assert open(path, "rb").read() == first
    assert not (tmp_path / "ckpt.json.tmp").exists()


def rewrite(path, doc, fix_digest=True):
    from stgnn.train import _params_digest
    if fix_digest:
        doc["params_sha256"] = _params_digest(doc["params"])
    with open(path, "w") as fh:
        json.dump(doc, fh)


def test_checkpoint_rejects_tampering(tmp_path):
    _, _, _, path = trained_tiny(tmp_path)
    pristine = json.load(open(path))

    doc = copy.deepcopy(pristine)
    name = sorted(doc["params"])[0]
    doc["params"][name]["values"][0] += 1.0
    rewrite(path, doc, fix_digest=False)  # stale digest
    with pytest.raises(CheckpointError, match="integrity"):
        load_checkpoint(path)

    doc = copy.deepcopy(pristine)
    doc["format_version"] = 99
    rewrite(path, doc)
    with pytest.raises(CheckpointError, match="format_version"):
        load_checkpoint(path)

    doc = copy.deepcopy(pristine)
    del doc["scaler"]
    rewrite(path, doc)
    with pytest.raises(CheckpointError, match="scaler"):
        load_checkpoint(path)

    doc = copy.deepcopy(pristine)
    name = sorted(doc["params"])[0]
    del doc["params"][name]
    rewrite(path, doc)
    with pytest.raises(CheckpointError, match="lacks parameter"):
        load_checkpoint(path)

    doc = copy.deepcopy(pristine)
    doc["params"]["mystery"] = {"shape": [1, 1], "values": [0.0]}
    rewrite(path, doc)
    with pytest.raises(CheckpointError, match="unknown parameters"):
        load_checkpoint(path)

    doc = copy.deepcopy(pristine)
    name = max(doc["params"], key=lambda k: len(doc["params"][k]["values"]))
    doc["params"][name]["shape"] = [1, 1]
    doc["params"][name]["values"] = [0.0]
    rewrite(path, doc)
    with pytest.raises(CheckpointError, match="shape"):
        load_checkpoint(path)

    doc = copy.deepcopy(pristine)
    doc["model_kind"] = "rnn"
    rewrite(path, doc)
    with pytest.raises(CheckpointError, match="model_kind"):
        load_checkpoint(path)

    doc = copy.deepcopy(pristine)
    doc["config"]["window"] = 0
    rewrite(path, doc)
    with pytest.raises(CheckpointError, match="invalid config"):
        load_checkpoint(path)

    with open(path, "w") as fh:
        fh.write("{not json")
    with pytest.raises(CheckpointError, match="cannot read"):
        load_checkpoint(path)


def test_mlp_checkpoint_round_trip(tmp_path):
    from stgnn.baselines import MlpBaseline
    from stgnn.data import Scaler
    mlp = MlpBaseline(window=3, n_features=2, horizon=2, d_out=1, hidden=8,
                      seed=4)
    mlp.w1.value[0, 0] = 1.25  # make sure restored values, not init, are used
    scaler = Scaler(minimum=np.zeros((3, 2)), maximum=np.ones((3, 2)))
    path = str(tmp_path / "mlp.json")
    save_checkpoint(mlp, scaler, path)
    assert json.load(open(path))["model_kind"] == "mlp"
    loaded, _ = load_checkpoint(path)
    inputs = np.arange(3 * 3 * 2, dtype=np.float64).reshape(3, 3, 2) / 10.0
    assert np.array_equal(loaded.predict_window(None, inputs),
                          mlp.predict_window(None, inputs))
