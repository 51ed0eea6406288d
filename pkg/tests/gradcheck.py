"""Finite-difference gradient checking against an independent dense oracle.

The network is piecewise smooth: max-pooling and rectifiers have kinks where
central differences are invalid no matter how small the step. A check is only
meaningful at a parameter point whose margins (gap between the best and
second-best window value, magnitude of every pre-rectifier activation) exceed
anything a single +-eps perturbation can move them by, so instances are
redrawn until those margins hold. The margins are computed with a dense
einsum convolution written here, independent of the backend kernels.
"""

from __future__ import annotations

import numpy as np

from skelscene.cnn.model import ClassifierConfig, _check_input, _forward, gradients, init_model, loss

MARGIN = 1e-2


def dense_conv_oracle(model, X):
    """All window values per width, computed without the backend kernels."""
    out = {}
    for w, kernels in model.kernels.items():
        t_count = X.shape[1] - w + 1
        windows = np.stack([X[:, t : t + w, :] for t in range(t_count)], axis=1)
        out[w] = np.einsum("ntiw,fiw->ntf", windows, kernels) + model.conv_bias[w]
    return out


def _margins_ok(model, X) -> bool:
    for z in dense_conv_oracle(model, X).values():
        n_samples, _, n_filters = z.shape
        for n in range(n_samples):
            for f in range(n_filters):
                vals = np.unique(z[n, :, f])[::-1]
                if abs(vals[0]) < MARGIN:
                    return False
                if len(vals) > 1 and vals[0] - vals[1] < MARGIN:
                    return False
    cache = _forward(model, _check_input(model, X))
    return float(np.abs(cache.h_pre).min()) >= MARGIN


def build_smooth_instance(seed: int, classes: int = 4, widths=(2, 3), filters: int = 10,
                          rows: int = 20, width: int = 12, batch: int = 5):
    """Deterministic (model, X, y) with healthy margins around every kink."""
    for bump in range(200):
        rng = np.random.default_rng([seed, bump])
        cfg = ClassifierConfig(
            classes=classes, widths=widths, filters=filters, dense_units=8,
            dropout_keep=1.0, seed=seed,
        )
        model = init_model(cfg, rows, width, rng=rng)
        for _, tensor in model.param_items():
            tensor += rng.uniform(-0.05, 0.05, tensor.shape)
        X = np.zeros((batch, rows, width))
        for n in range(batch):
            occupied = rng.choice(rows, size=rng.integers(2, 7), replace=False)
            X[n, occupied] = rng.standard_normal((len(occupied), width))
        y = rng.integers(0, classes, batch)
        if _margins_ok(model, X):
            return model, X, y
    raise RuntimeError(f"no smooth instance found for seed {seed}")


def max_relative_error(model, X, y, rng: np.random.Generator,
                       eps: float = 1e-4, per_tensor: int = 200) -> dict[str, float]:
    """Worst central-difference relative error per parameter tensor."""
    grads, _, _ = gradients(model, X, y)
    worst: dict[str, float] = {}
    for name, tensor in model.param_items():
        analytic = grads[name].reshape(-1)
        flat = tensor.reshape(-1)
        count = min(per_tensor, flat.size)
        idxs = rng.choice(flat.size, size=count, replace=False)
        w = 0.0
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            lp = loss(model, X, y)
            flat[i] = orig - eps
            lm = loss(model, X, y)
            flat[i] = orig
            numeric = (lp - lm) / (2 * eps)
            w = max(w, abs(numeric - analytic[i]) / max(abs(numeric), abs(analytic[i]), 1e-6))
        worst[name] = w
    return worst
