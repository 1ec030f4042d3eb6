"""Train/test splits and citation-dataset bundles.

A dataset bundle is a directory with two CSV files:

``nodes.csv``
    ``id,label,f0,f1,...`` -- one row per node.  Ids are arbitrary tokens;
    node indices follow file order.  A header row is recognised when its
    first field is ``id``.
``edges.csv``
    ``u,v`` -- one citation per row, referencing node ids.  Direction is
    ignored, duplicates are merged and self-citations are dropped.  A header
    row is recognised when its first field is ``u`` or ``source``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError
from ..graph import Graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    seed: int = 0
    repeats: int = 10

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must lie strictly between 0 and 1")
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")


def split(n, spec, repeat_index, attempt=0):
    """Shuffle ``0..n-1`` and cut at ``floor(train_fraction * n)``.

    The shuffle is seeded by ``(spec.seed, repeat_index, attempt)`` so every
    repeat is reproducible on its own.
    """
    if n < 5:
        raise ValidationError("need at least 5 samples to split")
    rng = np.random.default_rng([spec.seed, repeat_index, attempt])
    perm = rng.permutation(n)
    cut = int(np.floor(spec.train_fraction * n))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def split_covering_classes(y, spec, repeat_index, max_attempts=100):
    """:func:`split`, re-drawn until every class has a training row.

    Returns ``(train, test, attempt)``.
    """
    y = np.asarray(y)
    classes = np.unique(y)
    for attempt in range(max_attempts):
        train, test = split(y.size, spec, repeat_index, attempt)
        if np.unique(y[train]).size == classes.size:
            if attempt:
                log.info("repeat %d: split re-drawn %d time(s) to cover all classes",
                         repeat_index, attempt)
            return train, test, attempt
    raise ValidationError(f"no split covering all classes after {max_attempts} attempts")


@dataclass(frozen=True)
class Dataset:
    name: str
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    node_ids: tuple = ()
    class_names: tuple = ()
    dropped_self_loops: int = 0

    @property
    def num_classes(self):
        return len(self.class_names) if self.class_names else int(self.labels.max()) + 1


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row and any(cell.strip() for cell in row):
                yield lineno, [cell.strip() for cell in row]


def ingest_citation_dataset(directory, name=None):
    """Load ``nodes.csv`` and ``edges.csv`` from ``directory``."""
    directory = Path(directory)
    name = name or directory.name
    ids, raw_labels, feats = [], [], []
    width = None
    for lineno, row in _rows(directory / "nodes.csv"):
        if lineno == 1 and row[0].lower() == "id":
            continue
        if len(row) < 2:
            raise ParseError("node row needs at least id and label", lineno)
        try:
            values = [float(v) for v in row[2:]]
        except ValueError:
            raise ParseError(f"non-numeric feature for node {row[0]!r}", lineno) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"expected {width} features, got {len(values)}", lineno)
        ids.append(row[0])
        raw_labels.append(row[1])
        feats.append(values)
    if not ids:
        raise ValidationError(f"{directory / 'nodes.csv'}: no nodes")
    index = {node: i for i, node in enumerate(ids)}
    if len(index) != len(ids):
        raise ValidationError("duplicate node id in nodes.csv")

    class_names = list(dict.fromkeys(raw_labels))
    code = {c: k for k, c in enumerate(class_names)}
    labels = np.array([code[c] for c in raw_labels], dtype=np.int64)

    us, vs = [], []
    loops = 0
    for lineno, row in _rows(directory / "edges.csv"):
        if lineno == 1 and row[0].lower() in ("u", "source", "src"):
            continue
        if len(row) < 2:
            raise ParseError("edge row needs two endpoints", lineno)
        for node in row[:2]:
            if node not in index:
                raise ValidationError(f"edges.csv line {lineno}: unknown node id {node!r}")
        a, b = index[row[0]], index[row[1]]
        if a == b:
            loops += 1
            continue
        us.append(a)
        vs.append(b)
    if loops:
        log.info("%s: dropped %d self-citation(s)", name, loops)
    graph = Graph.from_edges(len(ids), us, vs, merge_duplicates=True)
    x = np.array(feats, dtype=np.float64).reshape(len(ids), width or 0)
    return Dataset(name, graph, x, labels, tuple(ids), tuple(class_names), loops)


def write_citation_dataset(directory, graph, features, labels, node_ids=None):
    """Write a bundle readable by :func:`ingest_citation_dataset`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = graph.num_nodes
    node_ids = list(node_ids) if node_ids is not None else [str(i) for i in range(n)]
    features = np.asarray(features, dtype=np.float64)
    with open(directory / "nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label"] + [f"f{k}" for k in range(features.shape[1])])
        for i in range(n):
            w.writerow([node_ids[i], str(labels[i])] + [repr(float(v)) for v in features[i]])
    u, v, _ = graph.edges()
    with open(directory / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v"])
        for a, b in zip(u, v):
            w.writerow([node_ids[a], node_ids[b]])


def convert_linqs(content_path, cites_path, out_dir):
    """Convert the LINQS ``.content`` / ``.cites`` pair into a CSV bundle.

    Citations whose endpoints are missing from the content file are
    skipped (the CiteSeer release has a few).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    known = set()
    with open(content_path) as src, open(out_dir / "nodes.csv", "w", newline="") as dst:
        w = csv.writer(dst)
        for line in src:
            parts = line.split()
            if not parts:
                continue
            known.add(parts[0])
            w.writerow([parts[0], parts[-1]] + parts[1:-1])
    skipped = 0
    with open(cites_path) as src, open(out_dir / "edges.csv", "w", newline="") as dst:
        w = csv.writer(dst)
        for line in src:
            parts = line.split()
            if len(parts) != 2:
                continue
            if parts[0] in known and parts[1] in known:
                w.writerow(parts)
            else:
                skipped += 1
    return skipped


def make_citation_like(num_nodes=300, num_classes=3, num_features=50, p_in=0.05, p_out=0.005,
                       feature_signal=0.3, seed=0):
    """Small stochastic-block-model graph with sparse bag-of-words features.

    Used for smoke tests and determinism checks when no real bundle is at
    hand.  Each class prefers its own block of vocabulary terms.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, num_classes, size=num_nodes)
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((num_nodes, num_nodes)) < prob, k=1)
    u, v = np.nonzero(upper)
    block = np.arange(num_features) % num_classes
    rate = np.where(block[None, :] == labels[:, None], 0.05 + feature_signal, 0.05)
    x = (rng.random((num_nodes, num_features)) < rate).astype(np.float64)
    return Graph.from_edges(num_nodes, u, v), x, labels
