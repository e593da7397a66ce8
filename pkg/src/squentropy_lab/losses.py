"""Squentropy, cross-entropy and rescaled square loss on raw logits.

Every function accepts either one logit vector of length C with an integer
label, or an (n, C) batch with n labels. Per-sample values and gradients with
respect to the logits are returned; ``batch_loss`` averages them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

LOSS_NAMES = ("squentropy", "cross-entropy", "square")


@dataclass(frozen=True)
class LossOutput:
    value: float | np.ndarray
    grad: np.ndarray


@dataclass(frozen=True)
class RescaleParams:
    t: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        if not (self.t > 0 and self.M > 0):
            raise ValueError(f"rescale parameters must be positive, got t={self.t}, M={self.M}")


def _prepare(logits, y):
    f = np.asarray(logits, dtype=np.float64)
    single = f.ndim == 1
    f2 = f[None, :] if single else f
    if f2.ndim != 2:
        raise ValueError(f"logits must be 1-D or 2-D, got shape {f.shape}")
    if not np.all(np.isfinite(f2)):
        raise ValueError("logits contain non-finite values")
    labels = np.atleast_1d(np.asarray(y))
    if labels.shape != (f2.shape[0],) or not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"expected {f2.shape[0]} integer labels, got {np.asarray(y)!r}")
    C = f2.shape[1]
    if labels.min() < 0 or labels.max() >= C:
        raise ValueError(f"label out of range for C={C}: {labels.min()}..{labels.max()}")
    return f2, labels.astype(np.int64), single


def _finish(values, grad, single):
    if single:
        return LossOutput(float(values[0]), grad[0])
    return LossOutput(values, grad)


def softmax(logits):
    f = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(f)):
        raise ValueError("softmax input contains non-finite values")
    z = f - f.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _cross_entropy_rows(f, labels):
    rows = np.arange(f.shape[0])
    m = f.max(axis=1, keepdims=True)
    shifted = f - m
    e = np.exp(shifted)
    total = e.sum(axis=1)
    p = e / total[:, None]
    # log-sum-exp(f) - f_y, written as log1p of the off-label mass when y is the max
    others = total - e[rows, labels]
    f_y = shifted[rows, labels]
    at_max = f_y == 0.0
    values = np.where(at_max, np.log1p(others), np.log(total) - f_y)
    grad = p.copy()
    grad[rows, labels] -= 1.0
    return values, grad


def cross_entropy(logits, y):
    f, labels, single = _prepare(logits, y)
    values, grad = _cross_entropy_rows(f, labels)
    return _finish(values, grad, single)


def squentropy(logits, y):
    """Cross-entropy plus the mean squared logit over the C-1 wrong classes."""
    f, labels, single = _prepare(logits, y)
    C = f.shape[1]
    if C < 2:
        raise ValueError("squentropy needs at least 2 classes")
    values, grad = _cross_entropy_rows(f, labels)
    wrong = f.copy()
    wrong[np.arange(f.shape[0]), labels] = 0.0
    values = values + np.sum(wrong * wrong, axis=1) / (C - 1)
    grad = grad + (2.0 / (C - 1)) * wrong
    return _finish(values, grad, single)


def rescaled_square(logits, y, params=RescaleParams()):
    """(1/C) * [t (f_y - M)^2 + sum_{j != y} f_j^2]; t = M = 1 is plain square loss."""
    f, labels, single = _prepare(logits, y)
    C = f.shape[1]
    rows = np.arange(f.shape[0])
    target = np.zeros_like(f)
    target[rows, labels] = params.M
    weight = np.ones_like(f)
    weight[rows, labels] = params.t
    diff = f - target
    values = np.sum(weight * diff * diff, axis=1) / C
    grad = (2.0 / C) * weight * diff
    return _finish(values, grad, single)


@dataclass(frozen=True)
class LossSpec:
    """Parsed loss selection: ``squentropy``, ``cross-entropy`` or ``square`` with t, M."""

    name: str
    t: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        if self.name not in LOSS_NAMES:
            raise ValueError(f"unknown loss {self.name!r}; choose one of {', '.join(LOSS_NAMES)}")
        RescaleParams(self.t, self.M)

    @classmethod
    def parse(cls, text, t=None, M=None):
        """Accepts ``square``, ``square:t=1,M=5`` or ``square(t=15, M=30)``.

        ``t`` and ``M`` fill in values the text leaves unspecified; values
        written in the text take precedence.
        """
        m = re.fullmatch(r"\s*([a-z\-_]+)\s*(?:[:(]\s*(.*?)\s*\)?)?\s*", text)
        if not m:
            raise ValueError(f"cannot parse loss {text!r}")
        name = m.group(1).replace("_", "-")
        if name in ("ce", "crossentropy"):
            name = "cross-entropy"
        kw = {}
        if m.group(2):
            for part in m.group(2).split(","):
                key, _, val = part.partition("=")
                key = key.strip()
                if key not in ("t", "M"):
                    raise ValueError(f"unknown loss parameter {key!r}")
                kw[key] = float(val)
        if t is not None:
            kw.setdefault("t", float(t))
        if M is not None:
            kw.setdefault("M", float(M))
        return cls(name, **kw)

    def __str__(self):
        if self.name == "square":
            return f"square:t={self.t:g},M={self.M:g}"
        return self.name

    def per_sample(self, logits, y):
        if self.name == "squentropy":
            return squentropy(logits, y)
        if self.name == "cross-entropy":
            return cross_entropy(logits, y)
        return rescaled_square(logits, y, RescaleParams(self.t, self.M))


def batch_loss(spec, logits, y):
    """Mean loss over the batch and its gradient w.r.t. each row of logits."""
    out = spec.per_sample(np.atleast_2d(logits), np.atleast_1d(y))
    n = out.grad.shape[0]
    return float(np.sum(out.value) / n), out.grad / n
