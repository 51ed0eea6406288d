"""Training loop, evaluation, and the confusion matrix report."""

from __future__ import annotations

import copy
import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import DivergedLoss, EmptyClass, ShapeMismatch
from ..util import fmt
from .model import ClassifierConfig, ClassifierModel, _forward, _check_input, _check_labels, gradients, init_model

# A batch cross-entropy this deep (true-class probability below e**-200) is
# unrecoverable; the stable softmax never actually overflows to non-finite,
# so this is the working definition of a diverged run.
DIVERGED_NATS = 200.0


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


def history_to_csv(history: list[EpochStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
    for row in history:
        writer.writerow(
            [row.epoch, fmt(row.train_loss), fmt(row.train_acc), fmt(row.val_loss), fmt(row.val_acc)]
        )
    return buf.getvalue()


class _Sgd:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class _Adam:
    """Standard first/second-moment adaptive steps, bias-corrected."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1t = 1 - self.beta1**self.t
        b2t = 1 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def _make_optimizer(config: ClassifierConfig):
    if config.optimizer == "sgd":
        return _Sgd(config.learning_rate)
    return _Adam(config.learning_rate)


def train(
    config: ClassifierConfig,
    train_X: np.ndarray,
    train_y: np.ndarray,
    val_X: np.ndarray,
    val_y: np.ndarray,
    feature_hash: str = "",
) -> tuple[ClassifierModel, list[EpochStats]]:
    """Train from scratch; returns the best-validation-accuracy model.

    Fully deterministic for a fixed config seed: initialization, epoch
    shuffles, and dropout masks all come from one generator consumed in a
    fixed order. Raises EmptyClass when some class has no training sample and
    DivergedLoss as soon as the loss stops being recoverable (non-finite, or
    deeper than DIVERGED_NATS) or any parameter goes non-finite.
    """
    train_y = np.asarray(train_y, dtype=np.int64)
    val_y = np.asarray(val_y, dtype=np.int64)
    present = np.unique(train_y)
    missing = sorted(set(range(config.classes)) - set(present.tolist()))
    if missing:
        raise EmptyClass(f"no training samples for classes {missing}")

    rng = np.random.default_rng(config.seed)
    model = init_model(
        config, train_X.shape[1], train_X.shape[2], rng=rng, feature_hash=feature_hash
    )
    optimizer = _make_optimizer(config)
    param_names = [name for name, _ in model.param_items()]
    params = [tensor for _, tensor in model.param_items()]

    history: list[EpochStats] = []
    best_model = copy.deepcopy(model)
    best_acc = -1.0
    n = train_X.shape[0]

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        batch_losses = []
        batch_hits = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            grads, batch_loss, probs = gradients(
                model, train_X[idx], train_y[idx], training=True, rng=rng
            )
            if not np.isfinite(batch_loss) or batch_loss > DIVERGED_NATS:
                raise DivergedLoss(f"epoch {epoch}: batch loss {batch_loss:.3g}")
            optimizer.step(params, [grads[name] for name in param_names])
            if not model.all_finite():
                raise DivergedLoss(f"epoch {epoch}: parameters became non-finite")
            batch_losses.append((batch_loss, len(idx)))
            batch_hits += int((probs.argmax(axis=1) == train_y[idx]).sum())

        train_loss = float(
            sum(l * k for l, k in batch_losses) / sum(k for _, k in batch_losses)
        )
        train_acc = batch_hits / n
        val_loss, val_acc = _evaluate_loss_acc(model, val_X, val_y)
        history.append(EpochStats(epoch, train_loss, train_acc, val_loss, val_acc))
        if val_acc > best_acc:
            best_acc = val_acc
            best_model = copy.deepcopy(model)

    return best_model, history


def _evaluate_loss_acc(
    model: ClassifierModel, X: np.ndarray, y: np.ndarray, batch_size: int = 64
) -> tuple[float, float]:
    X = _check_input(model, X)
    y = _check_labels(model, y)
    losses = []
    hits = 0
    for start in range(0, len(y), batch_size):
        cache = _forward(model, X[start : start + batch_size])
        p = cache.probs
        yy = y[start : start + batch_size]
        losses.append((-np.log(np.maximum(p[np.arange(len(yy)), yy], 1e-300))).sum())
        hits += int((p.argmax(axis=1) == yy).sum())
    return float(np.sum(losses) / len(y)), hits / len(y)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with true classes on rows and predictions on columns."""

    counts: np.ndarray  # (classes, classes) int64
    labels: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    def precision(self) -> np.ndarray:
        col = self.counts.sum(axis=0)
        return np.divide(
            np.diag(self.counts), col, out=np.zeros(len(self.labels)), where=col > 0
        )

    def recall(self) -> np.ndarray:
        row = self.counts.sum(axis=1)
        return np.divide(
            np.diag(self.counts), row, out=np.zeros(len(self.labels)), where=row > 0
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["true\\pred", *self.labels])
        for i, label in enumerate(self.labels):
            writer.writerow([label, *self.counts[i].tolist()])
        writer.writerow([])
        writer.writerow(["accuracy", fmt(self.accuracy)])
        return buf.getvalue()

    def to_pgm(self, scale: int = 16) -> str:
        """Plain (P2) PGM heatmap, rows normalized to their sample counts."""
        c = self.counts.astype(np.float64)
        row_tot = c.sum(axis=1, keepdims=True)
        shade = np.divide(c, row_tot, out=np.zeros_like(c), where=row_tot > 0)
        img = np.rint(shade * 255).astype(int)
        img = np.kron(img, np.ones((scale, scale), dtype=int))
        lines = [f"P2", f"{img.shape[1]} {img.shape[0]}", "255"]
        lines.extend(" ".join(str(v) for v in row) for row in img)
        return "\n".join(lines) + "\n"


def evaluate(
    model: ClassifierModel, X: np.ndarray, y: np.ndarray, labels: tuple[str, ...]
) -> ConfusionMatrix:
    """Argmax predictions tallied against true labels."""
    X = _check_input(model, X)
    y = _check_labels(model, y)
    if len(y) == 0:
        raise ShapeMismatch("empty evaluation set")
    if len(labels) != model.config.classes:
        raise ShapeMismatch(
            f"{len(labels)} label names for {model.config.classes} classes"
        )
    counts = np.zeros((model.config.classes, model.config.classes), dtype=np.int64)
    for start in range(0, len(y), 64):
        probs = _forward(model, X[start : start + 64]).probs
        preds = probs.argmax(axis=1)
        for t, p in zip(y[start : start + 64], preds):
            counts[t, p] += 1
    return ConfusionMatrix(counts=counts, labels=tuple(labels))
