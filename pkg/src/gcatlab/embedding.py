"""DeepWalk node embeddings: truncated random walks plus skip-gram training.

Walks are generated in numba with uniforms drawn up front from a seeded
numpy generator, so the corpus depends only on ``(graph, params, seed)``.
Skip-gram uses negative sampling with a word2vec-style linear congruential
stream inside the kernel; training is single-threaded and therefore exactly
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import ParseError, ValidationError

WALKS_PER_NODE = 10
WALK_LENGTH = 80
WINDOW = 10
NEGATIVES = 5
EPOCHS = 5
LEARNING_RATE = 0.025
DIM = 256
NEG_TABLE_SIZE = 1_000_000


@dataclass(frozen=True)
class WalkCorpus:
    """Random walks stored as a padded ``(num_walks, walk_length)`` array.

    Entries past ``lengths[i]`` are ``-1``.  Walks started at isolated nodes
    have length 1.
    """

    walks: np.ndarray
    lengths: np.ndarray
    num_nodes: int
    walks_per_node: int
    walk_length: int
    seed: int

    def __len__(self):
        return self.walks.shape[0]

    def __iter__(self):
        for row, n in zip(self.walks, self.lengths):
            yield row[:n].tolist()

    def token_counts(self):
        flat = self.walks[self.walks >= 0]
        return np.bincount(flat, minlength=self.num_nodes)


@numba.njit(cache=True)
def _walk_kernel(indptr, indices, cumw, starts, uniforms, walk_length, out, lengths):
    for r in range(starts.shape[0]):
        cur = starts[r]
        out[r, 0] = cur
        n = 1
        for step in range(1, walk_length):
            lo = indptr[cur]
            hi = indptr[cur + 1]
            if hi == lo:
                break
            base = cumw[lo - 1] if lo > 0 else 0.0
            target = base + uniforms[r, step] * (cumw[hi - 1] - base)
            # first neighbour whose cumulative weight exceeds target
            a, b = lo, hi - 1
            while a < b:
                mid = (a + b) // 2
                if cumw[mid] > target:
                    b = mid
                else:
                    a = mid + 1
            cur = indices[a]
            out[r, n] = cur
            n += 1
        lengths[r] = n


def random_walks(g, walks_per_node=WALKS_PER_NODE, walk_length=WALK_LENGTH, seed=0):
    """Uniform (weight-proportional) random walks, ``walks_per_node`` from every node.

    Each pass visits all nodes once in an order shuffled by the seeded RNG.
    """
    if g.num_nodes < 1:
        raise ValidationError("cannot walk an empty graph")
    if walks_per_node < 1 or walk_length < 1:
        raise ValidationError("walks_per_node and walk_length must be >= 1")
    adj = g.adjacency
    indptr = adj.indptr.astype(np.int64)
    indices = adj.indices.astype(np.int64)
    cumw = np.cumsum(adj.data.astype(np.float64))

    rng = np.random.default_rng(seed)
    n = g.num_nodes
    total = n * walks_per_node
    walks = np.full((total, walk_length), -1, dtype=np.int64)
    lengths = np.zeros(total, dtype=np.int64)
    for p in range(walks_per_node):
        starts = rng.permutation(n).astype(np.int64)
        uniforms = rng.random((n, walk_length))
        _walk_kernel(indptr, indices, cumw, starts, uniforms, walk_length,
                     walks[p * n:(p + 1) * n], lengths[p * n:(p + 1) * n])
    return WalkCorpus(walks, lengths, n, walks_per_node, walk_length, seed)


def negative_table(counts, size=NEG_TABLE_SIZE, power=0.75):
    """Sampling table whose entry frequencies follow ``counts ** power``."""
    counts = np.asarray(counts, dtype=np.float64)
    p = counts ** power
    if p.sum() <= 0:
        raise ValidationError("empty corpus: no tokens to sample negatives from")
    p /= p.sum()
    # entry k maps to the node whose cumulative-probability bin holds (k + 0.5) / size
    edges = np.cumsum(p)
    table = np.searchsorted(edges, (np.arange(size) + 0.5) / size, side="right")
    return np.minimum(table, counts.size - 1).astype(np.int64)


@numba.njit(cache=True, fastmath=True)
def _sgns_kernel(walks, lengths, w_in, w_out, table, window, negatives, epochs,
                 lr0, lr_min, seed):
    dim = w_in.shape[1]
    n_walks = walks.shape[0]
    total_tokens = 0
    for r in range(n_walks):
        total_tokens += lengths[r]
    total = total_tokens * epochs
    table_size = table.shape[0]
    state = np.uint64(seed) * np.uint64(2862933555777941757) + np.uint64(3037000493)
    mult = np.uint64(25214903917)
    inc = np.uint64(11)
    grad = np.zeros(dim, dtype=np.float32)
    done = 0
    for ep in range(epochs):
        for r in range(n_walks):
            length = lengths[r]
            for i in range(length):
                lr = lr0 - (lr0 - lr_min) * done / total
                done += 1
                center = walks[r, i]
                state = state * mult + inc
                shrink = np.int64((state >> np.uint64(16)) % np.uint64(window))
                span = window - shrink
                lo = max(0, i - span)
                hi = min(length, i + span + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    context = walks[r, j]
                    for d in range(dim):
                        grad[d] = 0.0
                    for k in range(negatives + 1):
                        if k == 0:
                            target = context
                            label = 1.0
                        else:
                            state = state * mult + inc
                            target = table[np.int64((state >> np.uint64(16)) % np.uint64(table_size))]
                            if target == context:
                                continue
                            label = 0.0
                        dot = np.float32(0.0)
                        for d in range(dim):
                            dot += w_in[center, d] * w_out[target, d]
                        if dot > 6.0:
                            f = 1.0
                        elif dot < -6.0:
                            f = 0.0
                        else:
                            f = 1.0 / (1.0 + np.exp(-np.float64(dot)))
                        g = np.float32((label - f) * lr)
                        for d in range(dim):
                            grad[d] += g * w_out[target, d]
                            w_out[target, d] += g * w_in[center, d]
                    for d in range(dim):
                        w_in[center, d] += grad[d]


@dataclass(frozen=True)
class EmbeddingMatrix:
    data: np.ndarray

    @property
    def dim(self):
        return self.data.shape[1]


def train_skipgram(corpus, dim=DIM, window=WINDOW, negatives=NEGATIVES, epochs=EPOCHS,
                   lr=LEARNING_RATE, seed=0):
    """Skip-gram with negative sampling over ``corpus``; returns input vectors.

    Context windows are shrunk by a random amount per centre token as in
    word2vec.  The learning rate decays linearly from ``lr`` to ``lr * 1e-4``.
    """
    if dim < 1 or window < 1 or negatives < 1 or epochs < 1:
        raise ValidationError("dim, window, negatives and epochs must be >= 1")
    if len(corpus) == 0 or int(corpus.lengths.sum()) == 0:
        raise ValidationError("empty corpus")
    rng = np.random.default_rng(seed)
    n = corpus.num_nodes
    w_in = ((rng.random((n, dim)) - 0.5) / dim).astype(np.float32)
    w_out = np.zeros((n, dim), dtype=np.float32)
    table = negative_table(corpus.token_counts())
    _sgns_kernel(corpus.walks, corpus.lengths, w_in, w_out, table, int(window),
                 int(negatives), int(epochs), float(lr), float(lr) * 1e-4, int(seed))
    if not np.all(np.isfinite(w_in)):
        raise ValidationError("skip-gram training diverged")
    return EmbeddingMatrix(w_in.astype(np.float64))


def deepwalk(g, dim=DIM, seed=0, walks_per_node=WALKS_PER_NODE, walk_length=WALK_LENGTH,
             window=WINDOW, negatives=NEGATIVES, epochs=EPOCHS, lr=LEARNING_RATE):
    corpus = random_walks(g, walks_per_node, walk_length, seed)
    return train_skipgram(corpus, dim, window, negatives, epochs, lr, seed)


def save_embedding_tsv(emb, path):
    data = emb.data if isinstance(emb, EmbeddingMatrix) else np.asarray(emb)
    with open(Path(path), "w") as fh:
        for i, row in enumerate(data):
            fh.write(str(i) + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")


def load_embedding_tsv(path):
    rows = {}
    width = None
    with open(Path(path)) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            try:
                node = int(parts[0])
                vec = [float(x) for x in parts[1:]]
            except ValueError:
                raise ParseError("non-numeric embedding entry", lineno) from None
            if width is None:
                width = len(vec)
            elif len(vec) != width:
                raise ParseError(f"expected {width} values, got {len(vec)}", lineno)
            rows[node] = vec
    if not rows:
        raise ValidationError(f"{path}: no embeddings")
    n = max(rows) + 1
    if sorted(rows) != list(range(n)):
        raise ValidationError(f"{path}: node ids must cover 0..{n - 1}")
    return EmbeddingMatrix(np.array([rows[i] for i in range(n)], dtype=np.float64))
