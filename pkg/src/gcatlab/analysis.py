"""Fisher-score separability and binned mutual information of transformed features.

All entropies and mutual informations are in nats.  Per-column scores are
aggregated by their maximum, with the mean reported alongside.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .graph import (
    TransformedFeatures,
    as_features,
    dirichlet_energy,
    dirichlet_energy_matrix,
    gcat,
    gconv,
    normalized_adjacency,
)

FISHER_EPS = 1e-12
DEFAULT_BINS = 16


def as_labels(y, num_classes=None):
    """Validate an integer label vector; returns ``(labels, num_classes)``."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValidationError("labels must be a 1-D vector")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValidationError("labels must be integers")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise ValidationError("labels must be non-negative")
    c = int(y.max()) + 1 if y.size else 0
    if num_classes is not None:
        if c > num_classes:
            raise ValidationError(f"label {c - 1} outside [0, {num_classes})")
        c = int(num_classes)
    return y, c


def _class_stats(z, y, c):
    counts = np.bincount(y, minlength=c)
    if c < 2 or np.any(counts == 0):
        raise ValidationError("every class in [0, C) needs at least one member, C >= 2")
    onehot = np.zeros((y.size, c))
    onehot[np.arange(y.size), y] = 1.0
    means = (onehot.T @ z) / counts[:, None]
    var = (onehot.T @ (z - means[y]) ** 2) / counts[:, None]
    return counts, means, var


def _fisher_matrix(z, y, c):
    counts, means, var = _class_stats(z, y, c)
    if c == 2:
        return (means[0] - means[1]) ** 2 / (var[0] + var[1] + FISHER_EPS)
    mu = z.mean(axis=0)
    between = counts @ (means - mu) ** 2
    within = counts @ var
    return between / (within + FISHER_EPS)


def fisher_score_column(values, y):
    """Between-class over within-class scatter of one column.

    With two classes this is ``(mu_0 - mu_1)^2 / (var_0 + var_1)``; with more
    it generalizes to ``sum_c n_c (mu_c - mu)^2 / (sum_c n_c var_c + eps)``.
    Variances are population variances.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    y, c = as_labels(y)
    if v.shape != y.shape:
        raise ValidationError("values and labels differ in length")
    return float(_fisher_matrix(v[:, None], y, c)[0])


def fisher_score(z, y):
    """Per-column Fisher scores and their maximum."""
    z = as_features(z)
    y, c = as_labels(y)
    if z.shape[0] != y.shape[0]:
        raise ValidationError(f"{z.shape[0]} feature rows vs {y.shape[0]} labels")
    if z.shape[1] == 0:
        return np.zeros(0), 0.0
    scores = _fisher_matrix(z, y, c)
    return scores, float(scores.max())


def discrete_entropy(y):
    y, _ = as_labels(y)
    if y.size == 0:
        raise ValidationError("entropy of an empty label vector")
    p = np.bincount(y) / y.size
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def quantile_bins(values, bins):
    """Map values to at most ``bins`` discrete codes ``0..k-1``.

    A column with no more than ``bins`` distinct values keeps one code per
    value.  Otherwise bin edges sit at the ``1/bins`` quantiles and tied edges
    merge.  Equal values always share a code.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    uniq, inverse = np.unique(v, return_inverse=True)
    if uniq.size <= bins:
        return inverse.astype(np.int64)
    edges = np.unique(np.quantile(v, np.linspace(0.0, 1.0, bins + 1)[1:-1]))
    codes = np.searchsorted(edges, v, side="left")
    _, codes = np.unique(codes, return_inverse=True)
    return codes.astype(np.int64)


def plugin_mutual_information(a, b):
    """Plug-in MI of two discrete code vectors from their joint histogram."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = a.size
    ka, kb = int(a.max()) + 1, int(b.max()) + 1
    joint = np.bincount(a * kb + b, minlength=ka * kb).reshape(ka, kb) / n
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    nz = joint > 0
    mi = np.sum(joint[nz] * (np.log(joint[nz]) - np.log(np.outer(pa, pb)[nz])))
    return max(float(mi), 0.0)


def mutual_information_column(values, y, bins=DEFAULT_BINS):
    v = np.asarray(values, dtype=np.float64).ravel()
    y, _ = as_labels(y)
    if bins < 2:
        raise ValidationError("bins must be >= 2")
    if v.shape != y.shape:
        raise ValidationError("values and labels differ in length")
    if v.size < bins:
        raise ValidationError(f"need at least {bins} samples for {bins} bins")
    return plugin_mutual_information(quantile_bins(v, bins), y)


def mutual_information(z, y, bins=DEFAULT_BINS):
    """Per-column binned MI with the labels and its maximum."""
    z = as_features(z)
    y, _ = as_labels(y)
    if z.shape[0] != y.shape[0]:
        raise ValidationError(f"{z.shape[0]} feature rows vs {y.shape[0]} labels")
    mi = np.array([mutual_information_column(z[:, k], y, bins) for k in range(z.shape[1])])
    return mi, float(mi.max()) if mi.size else 0.0


@dataclass
class DependencyReport:
    """Dependency scores of one transformed feature matrix against labels."""

    tag: str
    per_column_fisher: np.ndarray
    fisher_aggregate: float
    per_column_mi: np.ndarray
    mi_aggregate: float
    label_entropy: float
    bins: int = DEFAULT_BINS
    extra: dict = field(default_factory=dict)

    @property
    def fisher_mean(self):
        return float(self.per_column_fisher.mean()) if self.per_column_fisher.size else 0.0

    @property
    def mi_mean(self):
        return float(self.per_column_mi.mean()) if self.per_column_mi.size else 0.0

    def summary(self):
        out = {
            "tag": self.tag,
            "columns": int(self.per_column_fisher.size),
            "bins": self.bins,
            "fisher_aggregate": self.fisher_aggregate,
            "fisher_mean": self.fisher_mean,
            "mi_aggregate": self.mi_aggregate,
            "mi_mean": self.mi_mean,
            "label_entropy": self.label_entropy,
        }
        out.update(self.extra)
        return out

    def write_keyvalue(self, path):
        with open(Path(path), "w") as fh:
            for key, value in self.summary().items():
                fh.write(f"{key}={_fmt(value)}\n")

    def write_csv(self, path):
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["column", "fisher", "mi"])
            for k, (j, i) in enumerate(zip(self.per_column_fisher, self.per_column_mi)):
                w.writerow([k, _fmt(j), _fmt(i)])
            w.writerow(["max", _fmt(self.fisher_aggregate), _fmt(self.mi_aggregate)])
            w.writerow(["mean", _fmt(self.fisher_mean), _fmt(self.mi_mean)])


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_keyvalue(path):
    out = {}
    with open(Path(path)) as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                out[key] = value
    return out


def dependency_report(z, y, bins=DEFAULT_BINS):
    tag = z.tag if isinstance(z, TransformedFeatures) else "raw"
    fisher_cols, fisher_max = fisher_score(z, y)
    mi_cols, mi_max = mutual_information(z, y, bins)
    return DependencyReport(tag, fisher_cols, fisher_max, mi_cols, mi_max,
                            discrete_entropy(y), bins)


def compare_transforms(g, x, y, a_repr, bins=DEFAULT_BINS):
    """Dependency reports for graph convolution and graph concatenation.

    ``a_repr`` is the structure representation used by the concatenation.
    Both reports carry the smoothness of ``x`` and of each label indicator
    in ``extra``, plus the label entropy.
    """
    x = as_features(x, g.num_nodes)
    y, c = as_labels(y)
    a = normalized_adjacency(g)
    smooth = {
        "s2_x": dirichlet_energy_matrix(g, x) if x.shape[1] else 0.0,
        "s2_y": [dirichlet_energy(g, (y == k).astype(np.float64)) for k in range(c)],
    }
    if x.shape[1]:
        conv = dependency_report(gconv(a, x), y, bins)
    else:
        conv = DependencyReport("gconv", np.zeros(0), 0.0, np.zeros(0), 0.0, discrete_entropy(y), bins)
    cat = dependency_report(gcat(a_repr, x), y, bins)
    for rep in (conv, cat):
        rep.extra.update(smooth)
    return conv, cat
