"""From-scratch convolutional scene classifier.

Architecture: multi-width valid 1-D convolution down the feature-matrix rows
(full-width kernels), rectifier, max-over-rows pooling to one scalar per
filter, dropout, a dense rectified layer, and a softmax output. Forward and
backward passes are hand-written numpy plus the backend conv kernels; no
autograd framework is involved, which keeps the finite-difference check
meaningful.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Mapping

import numpy as np

from ..backend import conv_pool_backward, conv_pool_forward
from ..errors import LabelOutOfRange, ShapeMismatch
from ..util import atomic_write_bytes

CHECKPOINT_MAGIC = b"SKM1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ClassifierConfig:
    """Network and training knobs."""

    classes: int = 15
    widths: tuple[int, ...] = (2, 3, 4, 5)
    filters: int = 1024
    dense_units: int = 256
    learning_rate: float = 1e-4
    epochs: int = 60
    batch_size: int = 32
    dropout_keep: float = 0.5
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if not self.widths or any(w < 1 for w in self.widths):
            raise ValueError("filter widths must be positive")
        if len(set(self.widths)) != len(self.widths):
            raise ValueError("filter widths must be distinct")
        if self.filters % len(self.widths) != 0:
            raise ValueError("filter count must divide evenly across widths")
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be > 0")
        if not 0 < self.dropout_keep <= 1:
            raise ValueError("dropout keep-probability must be in (0, 1]")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be >= 1")

    @property
    def filters_per_width(self) -> int:
        return self.filters // len(self.widths)

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["widths"] = list(self.widths)
        return d


@dataclass
class ClassifierModel:
    """Parameters plus the config and input geometry they were built for."""

    config: ClassifierConfig
    input_rows: int
    input_width: int
    kernels: dict[int, np.ndarray]  # width -> (filters_per_width, width, W)
    conv_bias: dict[int, np.ndarray]
    dense_w: np.ndarray  # (filters, dense_units)
    dense_b: np.ndarray
    out_w: np.ndarray  # (dense_units, classes)
    out_b: np.ndarray
    feature_hash: str = ""

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        """Named tensors in checkpoint order."""
        items = []
        for w in self.config.widths:
            items.append((f"kernels[{w}]", self.kernels[w]))
            items.append((f"conv_bias[{w}]", self.conv_bias[w]))
        items.extend(
            [
                ("dense_w", self.dense_w),
                ("dense_b", self.dense_b),
                ("out_w", self.out_w),
                ("out_b", self.out_b),
            ]
        )
        return items

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for _, t in self.param_items())


def init_model(
    config: ClassifierConfig,
    input_rows: int,
    input_width: int,
    rng: np.random.Generator | None = None,
    feature_hash: str = "",
) -> ClassifierModel:
    """Zero-mean uniform init scaled by 1/sqrt(fan-in); zero biases."""
    if input_rows < max(config.widths):
        raise ShapeMismatch(
            f"{input_rows} rows cannot fit a width-{max(config.widths)} kernel"
        )
    if rng is None:
        rng = np.random.default_rng(config.seed)
    fpw = config.filters_per_width
    kernels = {}
    conv_bias = {}
    for w in config.widths:
        bound = 1.0 / np.sqrt(w * input_width)
        kernels[w] = rng.uniform(-bound, bound, (fpw, w, input_width))
        conv_bias[w] = np.zeros(fpw)
    bound = 1.0 / np.sqrt(config.filters)
    dense_w = rng.uniform(-bound, bound, (config.filters, config.dense_units))
    bound = 1.0 / np.sqrt(config.dense_units)
    out_w = rng.uniform(-bound, bound, (config.dense_units, config.classes))
    return ClassifierModel(
        config=config,
        input_rows=input_rows,
        input_width=input_width,
        kernels=kernels,
        conv_bias=conv_bias,
        dense_w=dense_w,
        dense_b=np.zeros(config.dense_units),
        out_w=out_w,
        out_b=np.zeros(config.classes),
        feature_hash=feature_hash,
    )


def _check_input(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != model.input_rows or X.shape[2] != model.input_width:
        raise ShapeMismatch(
            f"expected (*, {model.input_rows}, {model.input_width}), got {X.shape}"
        )
    return X


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class _ForwardCache:
    X: np.ndarray
    pooled: np.ndarray  # concatenated over widths, (N, filters)
    argmax: dict[int, np.ndarray]
    drop_mask: np.ndarray | None
    dropped: np.ndarray
    h_pre: np.ndarray
    h: np.ndarray
    probs: np.ndarray


def _forward(
    model: ClassifierModel,
    X: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> _ForwardCache:
    cfg = model.config
    pooled_parts = []
    argmax = {}
    for w in cfg.widths:
        p, a = conv_pool_forward(X, model.kernels[w], model.conv_bias[w])
        pooled_parts.append(p)
        argmax[w] = a
    pooled = np.concatenate(pooled_parts, axis=1)

    drop_mask = None
    dropped = pooled
    if training and cfg.dropout_keep < 1.0:
        if rng is None:
            raise ValueError("training-mode forward needs an rng for dropout")
        drop_mask = rng.random(pooled.shape) < cfg.dropout_keep
        dropped = pooled * drop_mask / cfg.dropout_keep

    h_pre = dropped @ model.dense_w + model.dense_b
    h = np.maximum(h_pre, 0.0)
    logits = h @ model.out_w + model.out_b
    probs = _softmax(logits)
    return _ForwardCache(
        X=X,
        pooled=pooled,
        argmax=argmax,
        drop_mask=drop_mask,
        dropped=dropped,
        h_pre=h_pre,
        h=h,
        probs=probs,
    )


def forward(
    model: ClassifierModel,
    X: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Class probabilities, shape (N, classes); rows sum to 1."""
    X = _check_input(model, X)
    return _forward(model, X, training=training, rng=rng).probs


def pooled_features(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    """Concatenated max-pooled conv features (no dropout), for inspection."""
    X = _check_input(model, X)
    return _forward(model, X).pooled


def _check_labels(model: ClassifierModel, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64).ravel()
    if y.size and (y.min() < 0 or y.max() >= model.config.classes):
        raise LabelOutOfRange(
            f"labels must lie in [0, {model.config.classes}), got range "
            f"[{y.min()}, {y.max()}]"
        )
    return y


def loss(
    model: ClassifierModel,
    X: np.ndarray,
    y: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> float:
    """Mean cross-entropy of the true labels."""
    X = _check_input(model, X)
    y = _check_labels(model, y)
    if X.shape[0] != y.size:
        raise ShapeMismatch(f"{X.shape[0]} samples but {y.size} labels")
    cache = _forward(model, X, training=training, rng=rng)
    return _nll(cache.probs, y)


def _nll(probs: np.ndarray, y: np.ndarray) -> float:
    p = probs[np.arange(len(y)), y]
    return float(-np.log(np.maximum(p, 1e-300)).mean())


def gradients(
    model: ClassifierModel,
    X: np.ndarray,
    y: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[dict[str, np.ndarray], float, np.ndarray]:
    """Backpropagation; returns (grads by tensor name, loss, probabilities).

    Gradient tensors share names and shapes with model.param_items().
    """
    X = _check_input(model, X)
    y = _check_labels(model, y)
    if X.shape[0] == 0:
        raise ShapeMismatch("empty batch")
    if X.shape[0] != y.size:
        raise ShapeMismatch(f"{X.shape[0]} samples but {y.size} labels")
    cfg = model.config
    cache = _forward(model, X, training=training, rng=rng)
    n = X.shape[0]

    dlogits = cache.probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n

    grads: dict[str, np.ndarray] = {}
    grads["out_w"] = cache.h.T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    dh = dlogits @ model.out_w.T
    dh_pre = dh * (cache.h_pre > 0)
    grads["dense_w"] = cache.dropped.T @ dh_pre
    grads["dense_b"] = dh_pre.sum(axis=0)
    ddropped = dh_pre @ model.dense_w.T
    if cache.drop_mask is not None:
        dpooled = ddropped * cache.drop_mask / cfg.dropout_keep
    else:
        dpooled = ddropped
    dpooled = dpooled * (cache.pooled > 0)  # rectifier on the pooled maxima

    offset = 0
    fpw = cfg.filters_per_width
    for w in cfg.widths:
        dk = np.zeros_like(model.kernels[w])
        db = np.zeros_like(model.conv_bias[w])
        conv_pool_backward(
            X, np.ascontiguousarray(dpooled[:, offset : offset + fpw]),
            cache.argmax[w], w, dk, db,
        )
        grads[f"kernels[{w}]"] = dk
        grads[f"conv_bias[{w}]"] = db
        offset += fpw

    return grads, _nll(cache.probs, y), cache.probs


# ---------------------------------------------------------------------------
# Checkpoints


def save_model(path: str | Path, model: ClassifierModel) -> None:
    """SKM1 container: magic, version, length-prefixed config JSON, tensors."""
    meta = {
        "config": model.config.to_json_dict(),
        "input_rows": model.input_rows,
        "input_width": model.input_width,
        "feature_hash": model.feature_hash,
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION)]
    chunks.append(struct.pack("<I", len(blob)))
    chunks.append(blob)
    for _, tensor in model.param_items():
        chunks.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    atomic_write_bytes(path, b"".join(chunks))


def load_model(path: str | Path) -> ClassifierModel:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint")
    version, blob_len = struct.unpack("<II", raw[4:12])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    meta = json.loads(raw[12 : 12 + blob_len].decode("utf-8"))
    cfg_doc = dict(meta["config"])
    cfg_doc["widths"] = tuple(cfg_doc["widths"])
    config = ClassifierConfig(**cfg_doc)
    model = init_model(
        config,
        meta["input_rows"],
        meta["input_width"],
        rng=np.random.default_rng(0),
        feature_hash=meta.get("feature_hash", ""),
    )
    cursor = 12 + blob_len
    for name, tensor in model.param_items():
        count = tensor.size
        values = np.frombuffer(raw[cursor : cursor + count * 8], dtype="<f8")
        if values.size != count:
            raise ValueError(f"{path}: truncated tensor {name}")
        tensor[...] = values.reshape(tensor.shape)
        cursor += count * 8
    if cursor != len(raw):
        raise ValueError(f"{path}: {len(raw) - cursor} trailing bytes")
    return model
