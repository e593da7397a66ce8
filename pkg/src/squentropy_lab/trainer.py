"""Minibatch SGD with decoupled-from-bias weight decay, evaluation and seed sweeps."""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass, field

import numpy as np

from . import mlp
from .calibration import DEFAULT_BINS, compute_ece, predictions_from_logits
from .losses import LossSpec, batch_loss
from .numerics import Rng

FULL_BATCH_LIMIT = 5000
DEFAULT_MINIBATCH = 128


class DivergenceError(RuntimeError):
    def __init__(self, epoch, value):
        super().__init__(f"training diverged at epoch {epoch}: loss = {value}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    loss: LossSpec = field(default_factory=lambda: LossSpec("squentropy"))
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 400
    batch_size: int | str | None = None  # None -> "full" when n <= 5000, else 128
    seed: int = 0
    hidden: tuple = (64, 128, 64)
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        if isinstance(self.loss, str):
            self.loss = LossSpec.parse(self.loss)
        self.hidden = tuple(int(h) for h in self.hidden)
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {self.weight_decay}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if isinstance(self.batch_size, str):
            if self.batch_size != "full":
                self.batch_size = int(self.batch_size)
        if isinstance(self.batch_size, int) and self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")

    def architecture(self, dataset):
        return mlp.Architecture(dataset.d, self.hidden, dataset.class_count)

    def resolved_batch(self, n):
        if self.batch_size is None:
            return n if n <= FULL_BATCH_LIMIT else DEFAULT_MINIBATCH
        if self.batch_size == "full":
            return n
        if self.batch_size > n:
            raise ValueError(f"batch size {self.batch_size} exceeds {n} training samples")
        return self.batch_size

    def to_dict(self):
        d = asdict(self)
        d["loss"] = {"name": self.loss.name, "t": self.loss.t, "M": self.loss.M}
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)
    weight_norm: list = field(default_factory=list)

    def __len__(self):
        return len(self.loss)

    def to_dict(self):
        return {"loss": self.loss, "accuracy": self.accuracy, "weight_norm": self.weight_norm}

    @classmethod
    def from_dict(cls, d):
        h = cls(list(d["loss"]), list(d["accuracy"]), list(d["weight_norm"]))
        if not len(h.loss) == len(h.accuracy) == len(h.weight_norm):
            raise ValueError("history series have different lengths")
        return h


def sgd_step(params, grads, lr, weight_decay):
    """In place: W -= lr * (g + wd * W); b -= lr * g (no decay on biases)."""
    if len(grads.weights) != len(params.weights):
        raise ValueError("gradient layer count does not match parameters")
    for i, (w, b, gw, gb) in enumerate(zip(params.weights, params.biases, grads.weights, grads.biases)):
        if gw.shape != w.shape or gb.shape != b.shape:
            raise ValueError(f"layer {i}: gradient shapes {gw.shape}/{gb.shape} vs {w.shape}/{b.shape}")
        w -= lr * (gw + weight_decay * w)
        b -= lr * gb
    return params


def canonical_order(dataset):
    """Sample order that depends only on the sample values (features, then label)."""
    keys = [dataset.labels] + [dataset.features[:, j] for j in range(dataset.d - 1, -1, -1)]
    return np.lexsort(keys)


def _epoch_stats(params, spec, dataset):
    logits = mlp.predict_logits(params, dataset.features)
    if not np.all(np.isfinite(logits)):
        return float("nan"), 0.0
    value, _ = batch_loss(spec, logits, dataset.labels)
    acc = float(np.mean(np.argmax(logits, axis=1) == dataset.labels))
    return value, acc


def train(train_set, config, callback=None):
    """Train a fresh network; returns ``(params, history)``.

    Weights come from the ``init`` substream of ``config.seed`` and epoch
    shuffles from the ``shuffle`` substream. Full-batch runs visit samples in
    ``canonical_order`` and never shuffle, so they do not depend on the input
    row order. ``callback(epoch, params)`` runs after every epoch if given.
    History entries are measured on the whole training set after each epoch.
    """
    arch = config.architecture(train_set)
    root = Rng(config.seed)
    params = mlp.init_params(arch, root.substream("init"))
    shuffle_rng = root.substream("shuffle")
    n = train_set.n
    batch = config.resolved_batch(n)
    full = batch >= n
    # epoch statistics always use the canonical order so they are order-free too
    stats_set = train_set.subset(canonical_order(train_set))
    X, Y = (stats_set.features, stats_set.labels) if full else (train_set.features, train_set.labels)

    history = TrainHistory()
    for epoch in range(1, config.epochs + 1):
        if not full and config.shuffle_each_epoch:
            perm = shuffle_rng.permutation(n)
        else:
            perm = np.arange(n)
        for start in range(0, n, batch):
            idx = perm[start:start + batch]
            with np.errstate(over="ignore", invalid="ignore"):
                logits, cache = mlp.forward(params, X[idx])
            if not np.isfinite(logits).all():
                raise DivergenceError(epoch, float("nan"))
            value, grad = batch_loss(config.loss, logits, Y[idx])
            if not math.isfinite(value):
                raise DivergenceError(epoch, value)
            sgd_step(params, mlp.backward(params, cache, grad), config.learning_rate, config.weight_decay)

        with np.errstate(over="ignore", invalid="ignore"):
            loss_value, acc = _epoch_stats(params, config.loss, stats_set)
        if not math.isfinite(loss_value):
            raise DivergenceError(epoch, loss_value)
        history.loss.append(loss_value)
        history.accuracy.append(acc)
        history.weight_norm.append(mlp.last_layer_weight_norm(params))
        if callback is not None:
            callback(epoch, params)
    return params, history


def evaluate(params, test_set, K=DEFAULT_BINS):
    """Accuracy and calibration report; probabilities are softmax of the logits for every loss."""
    if test_set.n == 0:
        raise ValueError("empty test set")
    logits = mlp.predict_logits(params, test_set.features)
    report = compute_ece(predictions_from_logits(logits, test_set.labels), K)
    return report.overall_accuracy, report


@dataclass
class SeedResult:
    seed: int
    test_accuracy: float
    test_ece: float


@dataclass
class RunSummary:
    runs: list
    mean_accuracy: float
    std_accuracy: float
    mean_ece: float
    std_ece: float

    def to_dict(self):
        return {
            "runs": [asdict(r) for r in self.runs],
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "mean_ece": self.mean_ece,
            "std_ece": self.std_ece,
            "std_estimator": "sample (n-1)",
        }


def summarize(runs):
    accs = [r.test_accuracy for r in runs]
    eces = [r.test_ece for r in runs]
    return RunSummary(
        list(runs),
        statistics.fmean(accs),
        statistics.stdev(accs),
        statistics.fmean(eces),
        statistics.stdev(eces),
    )


def sweep(train_set, test_set, config, seeds, K=DEFAULT_BINS, allow_duplicates=False, on_run=None):
    """Train and evaluate once per seed; mean and sample std across seeds.

    ``on_run(seed, params, history, accuracy, report)`` sees each finished run.
    """
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise ValueError("a sweep needs at least 2 seeds")
    if not allow_duplicates and len(set(seeds)) != len(seeds):
        raise ValueError(f"duplicate seeds in {seeds}")
    runs = []
    for s in seeds:
        cfg = TrainConfig(**{**vars(config), "seed": s})
        params, history = train(train_set, cfg)
        acc, report = evaluate(params, test_set, K)
        runs.append(SeedResult(s, acc, report.ece))
        if on_run is not None:
            on_run(s, params, history, acc, report)
    return summarize(runs)
