"""Graphs, the renormalized adjacency, smoothness, and the two feature transforms.

A :class:`Graph` stores an undirected weighted graph as a symmetric CSR
matrix.  Graph convolution multiplies features by the self-loop normalized
adjacency ``D^{-1/2} (I + W) D^{-1/2}``; graph concatenation stacks a
structure representation next to the features without mixing them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidationError

TRANSFORM_TAGS = ("gconv", "gcat", "raw", "sgc")


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph over nodes ``0..num_nodes-1``.

    ``adjacency`` holds both directions of every edge; self-loops are never
    stored.  Build instances with :meth:`from_edges` so the invariants are
    checked.
    """

    num_nodes: int
    adjacency: sp.csr_matrix

    @classmethod
    def from_edges(cls, num_nodes, u, v, w=None, merge_duplicates=False):
        """Build a graph from undirected edge endpoints.

        Each pair is stored once per direction.  Repeated pairs are an error
        unless ``merge_duplicates`` is set, in which case the first weight
        wins.
        """
        num_nodes = int(num_nodes)
        if num_nodes < 1:
            raise ValidationError("graph needs at least one node")
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise ValidationError("edge endpoint arrays differ in length")
        w = np.ones(u.shape[0]) if w is None else np.asarray(w, dtype=np.float64).ravel()
        if w.shape != u.shape:
            raise ValidationError("weight array length differs from edge count")
        if u.size:
            if min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= num_nodes:
                raise ValidationError(f"node id outside 0..{num_nodes - 1}")
            if np.any(u == v):
                bad = int(u[np.argmax(u == v)])
                raise ValidationError(f"self-loop on node {bad}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValidationError("edge weights must be positive and finite")

        lo, hi = np.minimum(u, v), np.maximum(u, v)
        key = lo * num_nodes + hi
        _, first, counts = np.unique(key, return_index=True, return_counts=True)
        if np.any(counts > 1) and not merge_duplicates:
            dup = first[np.argmax(counts > 1)]
            raise ValidationError(f"duplicate edge ({lo[dup]}, {hi[dup]})")
        lo, hi, w = lo[first], hi[first], w[first]

        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        data = np.concatenate([w, w])
        adj = sp.csr_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes))
        adj.sort_indices()
        return cls(num_nodes, adj)

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    def edges(self):
        """Return ``(u, v, w)`` arrays with ``u < v``, one entry per edge."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64), coo.data[order]

    def degrees(self):
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def neighbors(self, i):
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]


@dataclass(frozen=True)
class NormalizedAdjacency:
    """The symmetric matrix ``D^{-1/2} (I + W) D^{-1/2}`` in CSR form."""

    matrix: sp.csr_matrix

    @property
    def num_nodes(self):
        return self.matrix.shape[0]

    def dense(self):
        return self.matrix.toarray()


@dataclass(frozen=True)
class TransformedFeatures:
    """Output of a feature transform together with the transform's tag."""

    data: np.ndarray
    tag: str

    def __post_init__(self):
        if self.tag not in TRANSFORM_TAGS:
            raise ValidationError(f"unknown transform tag {self.tag!r}")
        if self.data.ndim != 2:
            raise ValidationError("transformed features must be a 2-D matrix")

    @property
    def shape(self):
        return self.data.shape


def as_features(x, num_nodes=None):
    """Coerce ``x`` to an N x F float matrix, promoting vectors to one column."""
    if isinstance(x, TransformedFeatures):
        x = x.data
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValidationError(f"expected a feature matrix, got {x.ndim}-D array")
    if num_nodes is not None and x.shape[0] != num_nodes:
        raise ValidationError(f"feature matrix has {x.shape[0]} rows, graph has {num_nodes} nodes")
    if not np.all(np.isfinite(x)):
        raise ValidationError("feature matrix contains non-finite entries")
    return x


def load_edge_list(path):
    """Read a whitespace-separated ``u v [w]`` edge list.

    Blank lines and lines starting with ``#`` are skipped.  An optional first
    data line ``N <count>`` fixes the node count; otherwise it is one more
    than the largest id seen.
    """
    us, vs, ws = [], [], []
    declared = None
    seen_data = False
    with open(Path(path)) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "N" and not seen_data:
                if len(parts) != 2:
                    raise ParseError("header must be 'N <count>'", lineno)
                try:
                    declared = int(parts[1])
                except ValueError:
                    raise ParseError(f"bad node count {parts[1]!r}", lineno) from None
                seen_data = True
                continue
            seen_data = True
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'u v [w]', got {line!r}", lineno)
            try:
                a, b = int(parts[0]), int(parts[1])
                wt = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise ParseError(f"non-numeric field in {line!r}", lineno) from None
            if a < 0 or b < 0:
                raise ParseError(f"negative node id in {line!r}", lineno)
            if a == b:
                raise ValidationError(f"line {lineno}: self-loop on node {a}")
            if not np.isfinite(wt) or wt <= 0:
                raise ValidationError(f"line {lineno}: weight must be positive, got {wt}")
            us.append(a)
            vs.append(b)
            ws.append(wt)

    n = 1 + max(max(us, default=-1), max(vs, default=-1))
    if declared is not None:
        if declared < n:
            raise ValidationError(f"header declares {declared} nodes but ids reach {n - 1}")
        n = declared
    if n == 0:
        raise ValidationError(f"{path}: no edges and no node count")
    return Graph.from_edges(n, us, vs, ws)


def save_edge_list(g, path):
    u, v, w = g.edges()
    with open(Path(path), "w") as fh:
        fh.write(f"N {g.num_nodes}\n")
        for a, b, c in zip(u, v, w):
            fh.write(f"{int(a)} {int(b)} {float(c)!r}\n")


def grid_graph(rows, cols=None):
    """Four-neighbour lattice with unit weights; node id is ``r * cols + c``."""
    cols = rows if cols is None else cols
    ids = np.arange(rows * cols).reshape(rows, cols)
    u = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    v = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    return Graph.from_edges(rows * cols, u, v)


def normalized_adjacency(g):
    n = g.num_nodes
    a_hat = g.adjacency + sp.identity(n, format="csr")
    d_inv_sqrt = 1.0 / np.sqrt(np.asarray(a_hat.sum(axis=1)).ravel())
    scale = sp.diags(d_inv_sqrt)
    m = (scale @ a_hat @ scale).tocsr()
    m.sort_indices()
    return NormalizedAdjacency(m)


def laplacian(g):
    """Combinatorial Laplacian ``D_W - W`` as a CSR matrix."""
    lap = (sp.diags(g.degrees()) - g.adjacency).tocsr()
    lap.sort_indices()
    return lap


def dirichlet_energy(g, x):
    """Half the weighted sum of squared differences over ordered node pairs."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != g.num_nodes:
        raise ValidationError(f"signal must be a length-{g.num_nodes} vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("signal contains non-finite entries")
    u, v, w = g.edges()
    return float(np.sum(w * (x[u] - x[v]) ** 2))


def dirichlet_energy_matrix(g, x):
    x = as_features(x, g.num_nodes)
    u, v, w = g.edges()
    return float(np.sum(w[:, None] * (x[u] - x[v]) ** 2))


def gconv(a, x):
    """Graph convolution ``A_hat @ X`` computed as a sparse-dense product."""
    x = as_features(x)
    if x.shape[0] != a.num_nodes:
        raise ValidationError(f"adjacency is {a.num_nodes}x{a.num_nodes} but features have {x.shape[0]} rows")
    return TransformedFeatures(np.asarray(a.matrix @ x), "gconv")


def gcat(a_repr, x):
    """Concatenate a structure representation and features column-wise.

    ``a_repr`` is an N x d matrix such as node embeddings or the dense rows
    of a :class:`NormalizedAdjacency` (which is densified here).
    """
    if isinstance(a_repr, NormalizedAdjacency):
        a_repr = a_repr.dense()
    a_repr = as_features(a_repr)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != a_repr.shape[0]:
        raise ValidationError(f"row mismatch: structure has {a_repr.shape[0]} rows, features {x.shape[0]}")
    return TransformedFeatures(np.hstack([a_repr, x]), "gcat")
