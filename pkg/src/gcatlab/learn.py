"""Downstream classifiers for transformed node features.

* :func:`train_logreg` -- multinomial logistic regression with an L2 penalty,
  fitted by full-batch gradient descent with Armijo backtracking.
* :func:`train_linear_svm` -- one-vs-rest hinge-loss SVM fitted by Pegasos-style
  SGD.
* :func:`train_gcn` -- two-layer GCN ``softmax(A relu(A X W0) W1)`` trained with
  Adam, written directly in numpy with hand-derived gradients.

Linear models standardize every column with statistics from the training
rows only; columns that are constant on the training rows are dropped
(their weights stay zero).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import as_labels
from .errors import NumericError, ParseError, ValidationError
from .graph import NormalizedAdjacency, TransformedFeatures, as_features

MODEL_MAGIC = b"GCLM"
MODEL_VERSION = 1
_KIND_CODES = {"logreg": 1, "svm": 2, "gcn": 3}


@dataclass(frozen=True)
class LinearModel:
    """``scores = ((Z - mean) / scale) @ weights.T + bias``."""

    weights: np.ndarray
    bias: np.ndarray
    kind: str
    mean: np.ndarray
    scale: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    @property
    def num_features(self):
        return self.weights.shape[1]

    @property
    def num_classes(self):
        return self.weights.shape[0]

    def scores(self, z):
        z = as_features(z)
        if z.shape[1] != self.num_features:
            raise ValidationError(f"model expects {self.num_features} features, got {z.shape[1]}")
        return ((z - self.mean) / self.scale) @ self.weights.T + self.bias


@dataclass(frozen=True)
class GcnConfig:
    hidden: int = 16
    dropout: float = 0.5
    epochs: int = 200
    lr: float = 0.01
    weight_decay: float = 5e-4
    seed: int = 0


@dataclass(frozen=True)
class GcnModel:
    w0: np.ndarray
    w1: np.ndarray
    config: GcnConfig
    losses: tuple = ()

    def predict(self, a, x):
        x = as_features(x)
        _, cache = _gcn_forward(a.matrix, x, self.w0, self.w1)
        return np.argmax(cache["logits"], axis=1)


def _check_train(z, y, train_idx):
    z = as_features(z)
    y, c = as_labels(y)
    if z.shape[0] != y.shape[0]:
        raise ValidationError(f"{z.shape[0]} feature rows vs {y.shape[0]} labels")
    train_idx = np.asarray(train_idx, dtype=np.int64)
    if train_idx.size == 0:
        raise ValidationError("empty training set")
    missing = np.setdiff1d(np.arange(c), y[train_idx])
    if missing.size:
        raise ValidationError(f"classes {missing.tolist()} have no training rows")
    return z, y, c, train_idx


def standardizer(z_train):
    """Column means and scales from training rows; constant columns get scale 0."""
    mean = z_train.mean(axis=0)
    std = z_train.std(axis=0)
    active = std > 1e-12 * np.maximum(1.0, np.abs(mean))
    return mean, np.where(active, std, 1.0), active


def softmax(s):
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def logreg_loss_grad(w, b, z, y, l2):
    """Mean cross-entropy plus ``l2/2 * ||w||_F^2`` and its gradient.

    ``w`` is C x K, ``b`` has length C, ``y`` holds integer labels.
    """
    n = z.shape[0]
    s = z @ w.T + b
    s = s - s.max(axis=1, keepdims=True)
    logz = np.log(np.exp(s).sum(axis=1))
    loss = np.mean(logz - s[np.arange(n), y]) + 0.5 * l2 * np.sum(w * w)
    p = np.exp(s - logz[:, None])
    p[np.arange(n), y] -= 1.0
    p /= n
    return loss, p.T @ z + l2 * w, p.sum(axis=0)


def train_logreg(z, y, train_idx, l2=None, max_iter=2000, tol=1e-6, seed=0):
    """Fit multinomial L2 logistic regression on ``train_idx`` rows.

    ``l2`` defaults to ``1 / N``.  Optimization stops when the gradient's
    infinity norm falls below ``tol`` or after ``max_iter`` iterations.
    ``seed`` is accepted for interface symmetry; the fit is deterministic.
    """
    z, y, c, train_idx = _check_train(z, y, train_idx)
    l2 = 1.0 / z.shape[0] if l2 is None else float(l2)
    mean, scale, active = standardizer(z[train_idx])
    zs = ((z[train_idx] - mean) / scale)[:, active]
    yt = y[train_idx]

    w = np.zeros((c, zs.shape[1]))
    b = np.zeros(c)
    loss, gw, gb = logreg_loss_grad(w, b, zs, yt, l2)
    step = 1.0
    history = [loss]
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        gnorm = max(np.abs(gw).max(initial=0.0), np.abs(gb).max())
        if gnorm < tol:
            converged = True
            break
        sq = np.sum(gw * gw) + np.sum(gb * gb)
        step *= 2.0
        while True:
            w_new, b_new = w - step * gw, b - step * gb
            new_loss, new_gw, new_gb = logreg_loss_grad(w_new, b_new, zs, yt, l2)
            if new_loss <= loss - 0.5 * step * sq or step < 1e-12:
                break
            step *= 0.5
        if not np.isfinite(new_loss):
            raise NumericError(f"logistic regression loss became non-finite at iteration {it}")
        if new_loss > loss:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, new_gw, new_gb
        history.append(loss)

    full = np.zeros((c, z.shape[1]))
    full[:, active] = w
    info = {"iterations": it, "converged": converged, "loss": float(loss), "l2": l2,
            "loss_history": history}
    return LinearModel(full, b, "logreg", mean, scale, info)


def svm_objective_grad(w, z, y_pm, l2):
    """One-vs-rest hinge objective and subgradient.

    ``w`` is C x K (the last feature column of ``z`` acts as the bias input),
    ``y_pm`` is the N x C matrix of +1/-1 targets.
    """
    margins = y_pm * (z @ w.T)
    viol = margins < 1.0
    loss = np.mean(np.sum(np.where(viol, 1.0 - margins, 0.0), axis=1)) + 0.5 * l2 * np.sum(w * w)
    grad = -((viol * y_pm).T @ z) / z.shape[0] + l2 * w
    return loss, grad


def train_linear_svm(z, y, train_idx, l2=1e-4, epochs=50, seed=0):
    """One-vs-rest linear SVM trained with step size ``1 / (l2 * t)``.

    The intercept is a weight on a constant input and is regularized with
    the rest; iterates are projected onto the ball of radius ``1/sqrt(l2)``.
    """
    z, y, c, train_idx = _check_train(z, y, train_idx)
    if l2 <= 0:
        raise ValidationError("l2 must be positive")
    mean, scale, active = standardizer(z[train_idx])
    zs = ((z[train_idx] - mean) / scale)[:, active]
    zs = np.hstack([zs, np.ones((zs.shape[0], 1))])
    y_pm = np.where(y[train_idx][:, None] == np.arange(c)[None, :], 1.0, -1.0)

    rng = np.random.default_rng(seed)
    n = zs.shape[0]
    w = np.zeros((c, zs.shape[1]))
    radius = 1.0 / np.sqrt(l2)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (l2 * t)
            xi = zs[i]
            viol = y_pm[i] * (w @ xi) < 1.0
            w *= 1.0 - eta * l2
            w[viol] += eta * y_pm[i, viol][:, None] * xi
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
    if not np.all(np.isfinite(w)):
        raise NumericError("SVM weights became non-finite")

    full = np.zeros((c, z.shape[1]))
    full[:, active] = w[:, :-1]
    loss, _ = svm_objective_grad(w, zs, y_pm, l2)
    return LinearModel(full, w[:, -1].copy(), "svm", mean, scale,
                       {"steps": t, "objective": float(loss), "l2": l2})


def predict(model, z):
    """Arg-max class per row; ties go to the lowest class index."""
    return np.argmax(model.scores(z), axis=1)


def evaluate(predictions, truth, test_idx):
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValidationError("prediction and truth vectors differ in length")
    test_idx = np.asarray(test_idx, dtype=np.int64)
    if test_idx.size == 0:
        raise ValidationError("empty test set")
    return float(np.mean(predictions[test_idx] == truth[test_idx]))


def sgc_transform(a, x, k=2):
    """``A_hat^k X`` by repeated sparse products."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    out = as_features(x, a.num_nodes)
    for _ in range(k):
        out = a.matrix @ out
    return TransformedFeatures(np.asarray(out), "sgc")


def _glorot(rng, fan_in, fan_out):
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_in, fan_out))


def _gcn_forward(a, x, w0, w1, mask0=None, mask1=None):
    xin = x if mask0 is None else x * mask0
    xw = xin @ w0
    pre = np.asarray(a @ xw)
    h = np.maximum(pre, 0.0)
    hin = h if mask1 is None else h * mask1
    hw = hin @ w1
    logits = np.asarray(a @ hw)
    return logits, {"xin": xin, "pre": pre, "hin": hin, "logits": logits}


def gcn_loss_grad(a, x, y, train_idx, w0, w1, weight_decay, mask0=None, mask1=None):
    """Training loss and gradients for the two-layer GCN.

    The loss is mean cross-entropy over ``train_idx`` plus
    ``weight_decay/2 * ||w0||^2`` (first layer only).  ``a`` must be
    symmetric; dropout masks are pre-scaled keep masks or ``None``.
    """
    logits, cache = _gcn_forward(a, x, w0, w1, mask0, mask1)
    n_train = train_idx.size
    s = logits[train_idx]
    s = s - s.max(axis=1, keepdims=True)
    logz = np.log(np.exp(s).sum(axis=1))
    yt = y[train_idx]
    loss = np.mean(logz - s[np.arange(n_train), yt]) + 0.5 * weight_decay * np.sum(w0 * w0)

    dlogits = np.zeros_like(logits)
    p = np.exp(s - logz[:, None])
    p[np.arange(n_train), yt] -= 1.0
    dlogits[train_idx] = p / n_train
    dhw = np.asarray(a.T @ dlogits)
    g1 = cache["hin"].T @ dhw
    dh = dhw @ w1.T
    if mask1 is not None:
        dh = dh * mask1
    dpre = dh * (cache["pre"] > 0)
    dxw = np.asarray(a.T @ dpre)
    g0 = cache["xin"].T @ dxw + weight_decay * w0
    return loss, g0, g1


def train_gcn(a, x, y, train_idx, cfg=None):
    """Full-batch GCN training with Adam; returns the final parameters."""
    cfg = cfg or GcnConfig()
    if not isinstance(a, NormalizedAdjacency):
        raise ValidationError("train_gcn needs a NormalizedAdjacency")
    x, y, c, train_idx = _check_train(x, y, train_idx)
    if x.shape[0] != a.num_nodes:
        raise ValidationError("feature rows do not match the adjacency")
    rng = np.random.default_rng(cfg.seed)
    w0 = _glorot(rng, x.shape[1], cfg.hidden)
    w1 = _glorot(rng, cfg.hidden, c)
    params = [w0, w1]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    keep = 1.0 - cfg.dropout
    losses = []
    for epoch in range(1, cfg.epochs + 1):
        if cfg.dropout > 0:
            mask0 = (rng.random(x.shape) < keep) / keep
            mask1 = (rng.random((x.shape[0], cfg.hidden)) < keep) / keep
        else:
            mask0 = mask1 = None
        with np.errstate(over="ignore", invalid="ignore"):
            loss, g0, g1 = gcn_loss_grad(a.matrix, x, y, train_idx, params[0], params[1],
                                         cfg.weight_decay, mask0, mask1)
        if not (np.isfinite(loss) and np.all(np.isfinite(g0)) and np.all(np.isfinite(g1))):
            raise NumericError(f"GCN loss became non-finite at epoch {epoch}")
        losses.append(float(loss))
        for k, g in enumerate((g0, g1)):
            m[k] = beta1 * m[k] + (1 - beta1) * g
            with np.errstate(over="ignore"):
                v[k] = beta2 * v[k] + (1 - beta2) * g * g
            mhat = m[k] / (1 - beta1 ** epoch)
            vhat = v[k] / (1 - beta2 ** epoch)
            params[k] = params[k] - cfg.lr * mhat / (np.sqrt(vhat) + eps)
    return GcnModel(params[0], params[1], cfg, tuple(losses))


def save_model(model, path):
    """Write a model to the ``GCLM`` binary container (little-endian)."""
    with open(Path(path), "wb") as fh:
        fh.write(MODEL_MAGIC)
        if isinstance(model, LinearModel):
            c, k = model.weights.shape
            fh.write(struct.pack("<III", MODEL_VERSION, _KIND_CODES[model.kind], 2))
            fh.write(struct.pack("<qq", c, k))
            for arr in (model.weights, model.bias, model.mean, model.scale):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        elif isinstance(model, GcnModel):
            f, h = model.w0.shape
            c = model.w1.shape[1]
            cfg = model.config
            fh.write(struct.pack("<III", MODEL_VERSION, _KIND_CODES["gcn"], 3))
            fh.write(struct.pack("<qqq", f, h, c))
            fh.write(struct.pack("<dqddq", cfg.dropout, cfg.epochs, cfg.lr, cfg.weight_decay, cfg.seed))
            for arr in (model.w0, model.w1):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        else:
            raise ValidationError(f"cannot serialize {type(model).__name__}")


def load_model(path):
    with open(Path(path), "rb") as fh:
        if fh.read(4) != MODEL_MAGIC:
            raise ParseError(f"{path}: not a GCLM model file")
        version, kind_code, ndim = struct.unpack("<III", fh.read(12))
        if version != MODEL_VERSION:
            raise ParseError(f"{path}: unsupported model version {version}")
        kind = {v: k for k, v in _KIND_CODES.items()}.get(kind_code)
        if kind is None:
            raise ParseError(f"{path}: unknown model kind {kind_code}")
        shape = struct.unpack("<" + "q" * ndim, fh.read(8 * ndim))

        def read(*dims):
            count = int(np.prod(dims))
            return np.frombuffer(fh.read(8 * count), dtype="<f8").astype(np.float64).reshape(dims)

        if kind == "gcn":
            f, h, c = shape
            dropout, epochs, lr, wd, seed = struct.unpack("<dqddq", fh.read(40))
            cfg = GcnConfig(h, dropout, epochs, lr, wd, seed)
            return GcnModel(read(f, h), read(h, c), cfg)
        c, k = shape
        return LinearModel(read(c, k), read(c), kind, read(k), read(k))
