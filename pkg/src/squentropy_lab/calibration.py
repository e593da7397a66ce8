"""Expected calibration error over K equal-width confidence bins.

Bin k (1-based) covers ((k-1)/K, k/K], with the float values of k/K as the
edges; a confidence of exactly 0 goes to bin 1. All sums use ``math.fsum`` so
that reports do not depend on the order of the predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import softmax

DEFAULT_BINS = 15


@dataclass(frozen=True)
class Prediction:
    true_label: int
    predicted_label: int
    confidence: float

    @property
    def correct(self):
        return self.predicted_label == self.true_label


@dataclass(frozen=True)
class BinStats:
    index: int
    count: int
    accuracy: float | None
    confidence: float | None

    @property
    def gap(self):
        if self.count == 0:
            return None
        return self.confidence - self.accuracy


@dataclass(frozen=True)
class CalibrationReport:
    k: int
    bins: tuple
    ece: float
    n: int
    overall_accuracy: float

    def to_dict(self):
        return {
            "k": self.k,
            "bins": [
                {
                    "index": b.index,
                    "count": b.count,
                    "accuracy": b.accuracy,
                    "confidence": b.confidence,
                    "gap": b.gap,
                }
                for b in self.bins
            ],
            "ece": self.ece,
            "n": self.n,
            "overall_accuracy": self.overall_accuracy,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            bins = tuple(
                BinStats(int(b["index"]), int(b["count"]), b["accuracy"], b["confidence"])
                for b in d["bins"]
            )
            report = cls(int(d["k"]), bins, float(d["ece"]), int(d["n"]), float(d["overall_accuracy"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed calibration report: {exc!r}") from None
        if len(bins) != report.k or sum(b.count for b in bins) != report.n:
            raise ValueError("calibration report bins are inconsistent with k / n")
        return report


def predict(probs, true_label):
    """Argmax prediction; ties go to the lowest class index."""
    p = np.asarray(probs, dtype=np.float64)
    if not 0 <= true_label < p.shape[0]:
        raise ValueError(f"label {true_label} out of range for {p.shape[0]} classes")
    j = int(np.argmax(p))  # argmax returns the first maximal index
    return Prediction(int(true_label), j, float(p[j]))


def predictions_from_logits(logits, labels):
    probs = softmax(np.atleast_2d(logits))
    return [predict(p, int(y)) for p, y in zip(probs, labels)]


def bin_of(confidence, K):
    if K < 1:
        raise ValueError(f"bin count must be >= 1, got {K}")
    if not 0.0 <= confidence <= 1.0:
        raise ValueError(f"confidence {confidence} outside [0, 1]")
    if confidence == 0.0:
        return 1
    k = min(max(math.ceil(confidence * K), 1), K)
    # the product can round across an edge; settle against the float edges
    while k > 1 and confidence <= (k - 1) / K:
        k -= 1
    while k < K and confidence > k / K:
        k += 1
    return k


def compute_ece(predictions, K=DEFAULT_BINS):
    predictions = list(predictions)
    n = len(predictions)
    if n == 0:
        raise ValueError("cannot compute ECE of an empty prediction set")
    if K < 1:
        raise ValueError(f"bin count must be >= 1, got {K}")
    confs = [[] for _ in range(K)]
    hits = [0] * K
    for p in predictions:
        k = bin_of(p.confidence, K) - 1
        confs[k].append(p.confidence)
        hits[k] += p.correct

    bins, terms = [], []
    for k in range(K):
        count = len(confs[k])
        if count == 0:
            bins.append(BinStats(k + 1, 0, None, None))
            continue
        acc = hits[k] / count
        conf = math.fsum(confs[k]) / count
        bins.append(BinStats(k + 1, count, acc, conf))
        terms.append(count / n * abs(acc - conf))
    overall = sum(hits) / n
    return CalibrationReport(K, tuple(bins), math.fsum(terms), n, overall)


def histogram_data(report):
    """Fraction of samples falling in each bin."""
    return [b.count / report.n for b in report.bins]
