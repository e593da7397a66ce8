"""Fully-connected ReLU network: init, forward, backward, checkpoints."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np



@dataclass(frozen=True)
class Architecture:
    input_dim: int
    hidden_widths: tuple
    class_count: int

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.class_count < 2:
            raise ValueError(f"class_count must be >= 2, got {self.class_count}")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"hidden widths must be >= 1, got {self.hidden_widths}")

    @property
    def layer_sizes(self):
        return (self.input_dim, *self.hidden_widths, self.class_count)


@dataclass
class MlpParameters:
    """Per-layer ``(W, b)`` with ``W`` shaped (out, in)."""

    architecture: Architecture
    weights: list
    biases: list
    # optional per-feature standardization carried alongside the weights
    feature_mean: np.ndarray | None = field(default=None)
    feature_std: np.ndarray | None = field(default=None)
    class_names: tuple | None = field(default=None)

    def __post_init__(self):
        sizes = self.architecture.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("layer count does not match architecture")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ValueError(
                    f"layer {i}: expected W{(sizes[i + 1], sizes[i])} b{(sizes[i + 1],)}, "
                    f"got W{w.shape} b{b.shape}"
                )

    def copy(self):
        return MlpParameters(
            self.architecture,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            None if self.feature_mean is None else self.feature_mean.copy(),
            None if self.feature_std is None else self.feature_std.copy(),
            self.class_names,
        )


@dataclass
class Gradients:
    weights: list
    biases: list


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: list
    activations: list  # activations[i] is the input fed to layer i
    vector_input: bool


def init_params(arch, rng):
    """He-style uniform weights in (-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.

    Draws are consumed layer by layer, row-major within each matrix.
    """
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform_array((fan_out, fan_in), -bound, bound))
        biases.append(np.zeros(fan_out))
    return MlpParameters(arch, weights, biases)


def forward(params, x):
    """Logits for one sample (1-D ``x``) or a batch (rows of ``x``).

    No activation follows the last layer. Returns ``(logits, cache)``.
    """
    x = np.asarray(x, dtype=np.float64)
    vector_input = x.ndim == 1
    batch = x[None, :] if vector_input else x
    d = params.architecture.input_dim
    if batch.ndim != 2 or batch.shape[1] != d:
        raise ValueError(f"input has shape {x.shape}, network expects feature dimension {d}")

    h = batch
    activations, pre = [], []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        activations.append(h)
        z = h @ w.T + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    logits = h[0] if vector_input else h
    return logits, ForwardCache(batch, pre, activations, vector_input)


def predict_logits(params, x):
    """Logits for raw inputs, applying the attached standardization if any."""
    x = np.asarray(x, dtype=np.float64)
    if params.feature_mean is not None:
        std = params.feature_std
        z = (x - params.feature_mean) / np.where(std < 1e-12, 1.0, std)
        x = np.where(std < 1e-12, 0.0, z)
    return forward(params, x)[0]


def backward(params, cache, grad_logits):
    """Gradients of ``sum(grad_logits * logits)`` w.r.t. every weight and bias.

    For a batch the per-sample contributions are summed. ReLU'(0) is taken as 0.
    """
    g = np.asarray(grad_logits, dtype=np.float64)
    if cache.vector_input:
        g = g[None, :]
    if len(cache.pre_activations) != len(params.weights):
        raise ValueError("cache was produced by a network with a different depth")
    if g.shape != cache.pre_activations[-1].shape:
        raise ValueError(
            f"grad_logits shape {g.shape} does not match logits {cache.pre_activations[-1].shape}"
        )

    n_layers = len(params.weights)
    dws = [None] * n_layers
    dbs = [None] * n_layers
    delta = g
    for i in range(n_layers - 1, -1, -1):
        a_in = cache.activations[i]
        if a_in.shape[1] != params.weights[i].shape[1]:
            raise ValueError(f"cache/params mismatch at layer {i}")
        dws[i] = delta.T @ a_in
        dbs[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (cache.pre_activations[i - 1] > 0.0)
    return Gradients(dws, dbs)


def last_layer_weight_norm(params):
    """Frobenius norm of the output layer's weight matrix (bias excluded)."""
    return float(np.sqrt(np.sum(params.weights[-1] ** 2)))


# Checkpoint layout (all integers little-endian, floats IEEE-754 float64 LE):
#   magic   b"SQLB"            4 bytes
#   version uint32 (= 1)
#   input_dim uint32, n_hidden uint32, hidden widths uint32 * n_hidden, class_count uint32
#   per layer, in order: W row-major (out*in float64) then b (out float64)
#   has_norm uint8; if 1: feature_mean (input_dim float64), feature_std (input_dim float64)
#   n_names uint32 (0 or class_count); per name: byte length uint32, UTF-8 bytes
_MAGIC = b"SQLB"
_VERSION = 1


def save_checkpoint(params, path):
    arch = params.architecture
    buf = bytearray(_MAGIC)
    buf += struct.pack("<II", _VERSION, arch.input_dim)
    buf += struct.pack("<I", len(arch.hidden_widths))
    buf += struct.pack(f"<{len(arch.hidden_widths)}I", *arch.hidden_widths)
    buf += struct.pack("<I", arch.class_count)
    for w, b in zip(params.weights, params.biases):
        buf += np.ascontiguousarray(w, dtype="<f8").tobytes()
        buf += np.ascontiguousarray(b, dtype="<f8").tobytes()
    if params.feature_mean is not None:
        buf += b"\x01"
        buf += np.ascontiguousarray(params.feature_mean, dtype="<f8").tobytes()
        buf += np.ascontiguousarray(params.feature_std, dtype="<f8").tobytes()
    else:
        buf += b"\x00"
    names = params.class_names or ()
    buf += struct.pack("<I", len(names))
    for name in names:
        raw = str(name).encode("utf-8")
        buf += struct.pack("<I", len(raw)) + raw
    Path(path).write_bytes(bytes(buf))


def load_checkpoint(path):
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise ValueError(f"{path}: truncated checkpoint at byte {pos}")
        out = struct.unpack_from(fmt, data, pos)
        pos += size
        return out

    def take_floats(count):
        nonlocal pos
        end = pos + 8 * count
        if end > len(data):
            raise ValueError(f"{path}: truncated checkpoint at byte {pos}")
        arr = np.frombuffer(data[pos:end], dtype="<f8").astype(np.float64)
        pos = end
        return arr

    version, input_dim = take("<II")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    (n_hidden,) = take("<I")
    hidden = take(f"<{n_hidden}I")
    (class_count,) = take("<I")
    arch = Architecture(input_dim, hidden, class_count)
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(take_floats(fan_out * fan_in).reshape(fan_out, fan_in))
        biases.append(take_floats(fan_out))
    (has_norm,) = take("<B")
    mean = std = None
    if has_norm:
        mean = take_floats(input_dim)
        std = take_floats(input_dim)
    (n_names,) = take("<I")
    names = []
    for _ in range(n_names):
        (length,) = take("<I")
        if pos + length > len(data):
            raise ValueError(f"{path}: truncated checkpoint at byte {pos}")
        names.append(data[pos:pos + length].decode("utf-8"))
        pos += length
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes after checkpoint")
    return MlpParameters(arch, weights, biases, mean, std, tuple(names) or None)
