import math
import statistics

import numpy as np
import pytest

from squentropy_lab import mlp
from squentropy_lab.data import Dataset
from squentropy_lab.losses import LossSpec
from squentropy_lab.mlp import Architecture, Gradients, MlpParameters
from squentropy_lab.trainer import (
    DivergenceError,
    SeedResult,
    TrainConfig,
    TrainHistory,
    canonical_order,
    evaluate,
    sgd_step,
    summarize,
    sweep,
    train,
)


def blobs(n=60, seed=0, C=2):
    r = np.random.default_rng(seed)
    y = np.arange(n) % C
    centers = np.array([[2.0 * np.cos(2 * np.pi * c / C), 2.0 * np.sin(2 * np.pi * c / C)] for c in range(C)])
    return Dataset(centers[y] + r.normal(0, 0.4, size=(n, 2)), y, C)


def small_config(**kw):
    base = dict(loss="squentropy", learning_rate=0.05, weight_decay=0.0, epochs=30, batch_size=8, hidden=(8,), seed=1)
    base.update(kw)
    return TrainConfig(**base)


def test_sgd_step_worked_example():
    arch = Architecture(1, (), 2)
    p = MlpParameters(arch, [np.array([[1.0], [2.0]])], [np.array([1.0, 1.0])])
    g = Gradients([np.array([[0.5], [0.5]])], [np.array([1.0, 0.0])])
    sgd_step(p, g, 0.1, 0.01)
    assert np.allclose(p.weights[0].ravel(), [1 - 0.1 * (0.5 + 0.01), 2 - 0.1 * (0.5 + 0.02)], rtol=1e-15)
    assert p.biases[0].tolist() == [0.9, 1.0]


def test_sgd_step_zero_gradient_no_decay_is_noop():
    arch = Architecture(2, (3,), 2)
    p = mlp.init_params(arch, __import__("squentropy_lab.numerics", fromlist=["Rng"]).Rng(0))
    before = p.copy()
    zero = Gradients([np.zeros_like(w) for w in p.weights], [np.zeros_like(b) for b in p.biases])
    sgd_step(p, zero, 0.1, 0.0)
    assert all(np.array_equal(a, b) for a, b in zip(p.weights, before.weights))
    with pytest.raises(ValueError):
        sgd_step(p, Gradients(zero.weights[:1], zero.biases[:1]), 0.1, 0.0)


@pytest.mark.parametrize("loss", ["squentropy", "cross-entropy", "square"])
def test_learns_separable_blobs(loss):
    params, history = train(blobs(), small_config(loss=loss))
    assert len(history) == 30
    assert history.accuracy[-1] == 1.0
    assert history.loss[-1] < history.loss[0]
    assert all(v >= 0 for v in history.weight_norm)


def test_training_is_deterministic():
    a, ha = train(blobs(), small_config())
    b, hb = train(blobs(), small_config())
    assert ha.to_dict() == hb.to_dict()
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    _, hc = train(blobs(), small_config(seed=2))
    assert hc.loss != ha.loss


def test_full_batch_ignores_row_order():
    ds = blobs()
    perm = np.random.default_rng(9).permutation(ds.n)
    cfg = small_config(batch_size="full", epochs=10)
    _, h1 = train(ds, cfg)
    _, h2 = train(ds.subset(perm), cfg)
    assert h1.loss == h2.loss


def test_canonical_order_sorts_rows():
    ds = Dataset(np.array([[1.0, 0.0], [0.0, 5.0], [0.0, 1.0]]), np.array([0, 1, 0]), 2)
    assert canonical_order(ds).tolist() == [2, 1, 0]


def test_divergence_is_reported():
    with pytest.raises(DivergenceError) as info:
        train(blobs(), small_config(loss="square:t=1,M=1000", learning_rate=50.0, epochs=50))
    assert info.value.epoch >= 1


def test_config_validation_and_batch_resolution():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    cfg = TrainConfig()
    assert cfg.resolved_batch(100) == 100
    assert cfg.resolved_batch(6000) == 128
    with pytest.raises(ValueError):
        TrainConfig(batch_size=50).resolved_batch(10)
    assert TrainConfig(loss="square:t=1,M=5").loss == LossSpec("square", 1.0, 5.0)


def test_evaluate_on_known_network():
    arch = Architecture(2, (), 2)
    p = MlpParameters(arch, [np.array([[1.0, 0.0], [0.0, 1.0]])], [np.zeros(2)])
    ds = Dataset(np.array([[2.0, 0.0], [0.0, 2.0], [2.0, 0.0]]), np.array([0, 1, 1]), 2)
    acc, report = evaluate(p, ds, K=10)
    assert acc == pytest.approx(2 / 3)
    conf = math.exp(2) / (math.exp(2) + 1)
    assert report.ece == pytest.approx(abs(2 / 3 - conf))


def test_summarize_uses_sample_std():
    runs = [SeedResult(s, a, e) for s, a, e in [(1, 0.9, 0.1), (2, 0.8, 0.2), (3, 0.7, 0.3)]]
    s = summarize(runs)
    assert s.mean_accuracy == pytest.approx(0.8)
    assert s.std_accuracy == pytest.approx(0.1)
    assert s.std_ece == pytest.approx(statistics.stdev([0.1, 0.2, 0.3]))
    assert s.to_dict()["std_estimator"] == "sample (n-1)"


def test_sweep_shape_and_validation():
    ds = blobs(40)
    seen = []
    s = sweep(ds, blobs(20, seed=5), small_config(epochs=5), [3, 1, 2], K=5,
              on_run=lambda seed, *rest: seen.append(seed))
    assert [r.seed for r in s.runs] == [3, 1, 2] == seen
    with pytest.raises(ValueError):
        sweep(ds, ds, small_config(epochs=1), [1])
    with pytest.raises(ValueError):
        sweep(ds, ds, small_config(epochs=1), [1, 1])


def test_history_round_trip():
    h = TrainHistory([1.0, 0.5], [0.5, 1.0], [2.0, 3.0])
    assert TrainHistory.from_dict(h.to_dict()) == h
    with pytest.raises(ValueError):
        TrainHistory.from_dict({"loss": [1.0], "accuracy": [], "weight_norm": []})


def test_callback_sees_every_epoch():
    epochs = []
    train(blobs(), small_config(epochs=4), callback=lambda e, p: epochs.append(e))
    assert epochs == [1, 2, 3, 4]
