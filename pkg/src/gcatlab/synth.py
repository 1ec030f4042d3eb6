"""Synthetic homophily/heterophily scenarios on a fixed graph.

Smooth (homophilous) signals are low-frequency Laplacian eigenvectors;
oscillating (heterophilous) ones are high-frequency eigenvectors or the
indicator of randomly scattered points.  Labels are always binary.

Case layout (``x`` = feature, ``y`` = label):

====== ==================== ==============================
case   x                    y
====== ==================== ==============================
1      low-freq eigvec      median split of x
2      low-freq eigvec      opt 1: median split of high-freq eigvec;
                            opt 2: scattered points
3      opt 1: high-freq     median split of low-freq eigvec
       opt 2: scattered
4_1    opt 1: high-freq     median split of x (opt 2: the scatter labels)
       opt 2: scattered
====== ==================== ==============================
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .graph import dirichlet_energy
from .spectral import select_eigenvector

LOW_FREQ_INDICES = (1, 4, 7, 10, 13, 16, 19, 22, 25, 28)
HIGH_FREQ_INDICES = tuple(-i for i in LOW_FREQ_INDICES)
POINT_COUNTS = (10, 50, 100, 200, 300, 500, 1000, 1500, 2000, 2500)
CASES = ("1", "2", "3", "4_1")


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of one synthetic cell.

    ``x_param`` / ``y_param`` are signed eigenvector indices or point counts
    depending on the case and option.  Parameters not used by a case (the
    label source in cases 1 and 4_1) are ``None``.
    """

    case_id: str
    option: int = 1
    x_param: int | None = None
    y_param: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "case_id", str(self.case_id))
        if self.case_id not in CASES:
            raise ValidationError(f"unknown case {self.case_id!r}; expected one of {CASES}")
        if self.option not in (1, 2):
            raise ValidationError("option must be 1 or 2")
        if self.x_param is None:
            raise ValidationError(f"case {self.case_id} needs x_param")
        if self.case_id in ("2", "3") and self.y_param is None:
            raise ValidationError(f"case {self.case_id} needs y_param")

    @property
    def label(self):
        if self.case_id == "1":
            return "case_1"
        return f"case_{self.case_id}_opt{self.option}"


@dataclass(frozen=True)
class Scenario:
    x: np.ndarray
    y: np.ndarray
    spec: ScenarioSpec
    s2_x: float
    s2_y: float
    x_construction: str
    y_construction: str

    def provenance(self):
        return {
            "spec": asdict(self.spec),
            "s2_x": self.s2_x,
            "s2_y_indicator": self.s2_y,
            "x_construction": self.x_construction,
            "y_construction": self.y_construction,
            "eigenvector_indexing": "0-based ascending; negative counts from the highest frequency",
            "median_ties": "class 0",
        }


def median_discretize(x):
    """Label 1 where ``x`` is strictly above its median, else 0."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValidationError("need at least two values to split at the median")
    y = (x > np.median(x)).astype(np.int64)
    if y.min() == y.max():
        raise ValidationError("median split leaves one class empty")
    return y


def scatter_point_labels(num_nodes, k, seed):
    """Exactly ``k`` nodes, chosen uniformly without replacement, get label 1."""
    num_nodes = getattr(num_nodes, "num_nodes", num_nodes)
    if not 1 <= k < num_nodes:
        raise ValidationError(f"point count {k} must lie in [1, {num_nodes})")
    rng = np.random.default_rng(seed)
    y = np.zeros(num_nodes, dtype=np.int64)
    y[rng.choice(num_nodes, size=k, replace=False)] = 1
    return y


def _eigvec(basis, idx):
    return select_eigenvector(basis, idx), f"eigenvector[{idx}]"


def generate_scenario(g, basis, spec):
    if basis.size != g.num_nodes:
        raise ValidationError("basis size does not match the graph")
    case, opt = spec.case_id, spec.option
    if case == "1":
        x, xc = _eigvec(basis, spec.x_param)
        y, yc = median_discretize(x), "median(x)"
    elif case == "2":
        x, xc = _eigvec(basis, spec.x_param)
        if opt == 1:
            src, name = _eigvec(basis, spec.y_param)
            y, yc = median_discretize(src), f"median({name})"
        else:
            y, yc = scatter_point_labels(g.num_nodes, spec.y_param, spec.seed), f"scatter({spec.y_param})"
    elif case == "3":
        src, name = _eigvec(basis, spec.y_param)
        y, yc = median_discretize(src), f"median({name})"
        if opt == 1:
            x, xc = _eigvec(basis, spec.x_param)
        else:
            x = scatter_point_labels(g.num_nodes, spec.x_param, spec.seed).astype(np.float64)
            xc = f"indicator(scatter({spec.x_param}))"
    else:
        if opt == 1:
            x, xc = _eigvec(basis, spec.x_param)
            y, yc = median_discretize(x), "median(x)"
        else:
            y = scatter_point_labels(g.num_nodes, spec.x_param, spec.seed)
            x, xc = y.astype(np.float64), f"indicator(scatter({spec.x_param}))"
            yc = "scatter labels (x itself)"
    return Scenario(x, y, spec, dirichlet_energy(g, x), dirichlet_energy(g, y.astype(np.float64)), xc, yc)


def case_grid(case_id, option=1, seed=0, low=LOW_FREQ_INDICES, high=HIGH_FREQ_INDICES,
              points=POINT_COUNTS):
    """All cells of one case/option on the standard parameter grids.

    Returns ``(x_values, y_values, specs)`` where ``specs`` is a nested list
    indexed ``[i][j]`` for ``x_values[i]`` and ``y_values[j]``.  One-dimensional
    cases (1 and 4_1) get ``y_values == [None]``.
    """
    case_id = str(case_id)
    if case_id == "1":
        xs, ys = list(low), [None]
    elif case_id == "2":
        xs, ys = list(low), list(high if option == 1 else points)
    elif case_id == "3":
        xs, ys = list(high if option == 1 else points), list(low)
    elif case_id == "4_1":
        xs, ys = list(high if option == 1 else points), [None]
    else:
        raise ValidationError(f"unknown case {case_id!r}")
    specs = [[ScenarioSpec(case_id, option if case_id != "1" else 1, x, y, seed) for y in ys] for x in xs]
    return xs, ys, specs


def export_scenario(scenario, out_dir, stem=None):
    """Write ``<stem>.nodes.csv`` (id, label, x) and ``<stem>.json`` provenance."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or scenario.spec.label
    with open(out / f"{stem}.nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label", "x"])
        for i, (lab, val) in enumerate(zip(scenario.y, scenario.x)):
            w.writerow([i, int(lab), repr(float(val))])
    with open(out / f"{stem}.json", "w") as fh:
        json.dump(scenario.provenance(), fh, indent=2, sort_keys=True)
    return out / f"{stem}.nodes.csv", out / f"{stem}.json"
