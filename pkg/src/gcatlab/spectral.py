"""Dense symmetric eigendecomposition and signed-index eigenvector selection.

The production path calls LAPACK ``dsyev`` (Householder tridiagonalization
followed by implicit-shift QL/QR).  :func:`householder_ql` is a
self-contained numpy version of the same two stages; it is slow but
independent of LAPACK and is used to cross-check small problems.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import NumericError, ValidationError

CACHE_MAGIC = b"GCSB"
CACHE_VERSION = 1
SIGN_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SpectralBasis:
    """Ascending eigenvalues with unit-norm eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self):
        return self.eigenvalues.shape[0]


def _as_dense_symmetric(m):
    if sp.issparse(m):
        m = m.toarray()
    m = np.array(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix contains non-finite entries")
    if m.size and np.max(np.abs(m - m.T)) > 1e-9:
        raise ValidationError("matrix is not symmetric")
    return m


def _fix_signs(vecs):
    """Flip columns so the first entry above the threshold is positive."""
    big = np.abs(vecs) > SIGN_THRESHOLD
    first = np.argmax(big, axis=0)
    pivots = vecs[first, np.arange(vecs.shape[1])]
    signs = np.where(pivots < 0, -1.0, 1.0)
    return vecs * signs


def eigendecompose(m, method="lapack"):
    """Full eigendecomposition of a symmetric matrix.

    ``method`` is ``"lapack"`` (default) or ``"reference"`` for the pure
    numpy :func:`householder_ql`.
    """
    m = _as_dense_symmetric(m)
    if method == "lapack":
        try:
            vals, vecs = scipy.linalg.eigh(m, driver="ev")
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigensolver failed: {exc}") from exc
    elif method == "reference":
        vals, vecs = householder_ql(m)
    else:
        raise ValidationError(f"unknown method {method!r}")
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    return SpectralBasis(vals, _fix_signs(vecs))


def _tridiagonalize(a):
    """Householder reduction ``a = Q T Q^T``; returns diag, offdiag, Q."""
    a = a.copy()
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        # two-sided reflection H A H restricted to the trailing block
        sub = a[k + 1:, k:]
        sub -= 2.0 * np.outer(v, v @ sub)
        sub = a[k:, k + 1:]
        sub -= 2.0 * np.outer(sub @ v, v)
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v)
    return np.diag(a).copy(), np.append(np.diag(a, -1), 0.0), q


def householder_ql(a, max_iter=60):
    """Eigenpairs of a symmetric matrix by tridiagonalization plus implicit QL.

    Returns unsorted eigenvalues and the matching eigenvector columns.
    """
    a = _as_dense_symmetric(a)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    d, e, z = _tridiagonalize(a)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise NumericError(f"QL iteration did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + np.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi1 = z[:, i + 1].copy()
                z[:, i + 1] = s * z[:, i] + c * zi1
                z[:, i] = c * z[:, i] - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, z


def select_eigenvector(basis, idx):
    """Column ``idx`` of the ascending basis; negative ``idx`` counts from the top."""
    n = basis.size
    idx = int(idx)
    if not -n <= idx < n:
        raise ValidationError(f"eigenvector index {idx} outside [-{n}, {n})")
    return basis.eigenvectors[:, idx % n].copy()


def matrix_digest(m):
    """Content hash used to key cached decompositions."""
    m = _as_dense_symmetric(m)
    h = hashlib.sha256()
    h.update(struct.pack("<q", m.shape[0]))
    h.update(np.ascontiguousarray(m).tobytes())
    return h.hexdigest()


def save_basis(basis, path, digest=""):
    n = basis.size
    key = digest.encode("ascii")
    with open(Path(path), "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IqI", CACHE_VERSION, n, len(key)))
        fh.write(key)
        fh.write(np.ascontiguousarray(basis.eigenvalues, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.eigenvectors, dtype="<f8").tobytes())


def load_basis(path, digest=None):
    """Read a cached basis; returns ``None`` on version or digest mismatch."""
    with open(Path(path), "rb") as fh:
        if fh.read(4) != CACHE_MAGIC:
            return None
        version, n, klen = struct.unpack("<IqI", fh.read(16))
        if version != CACHE_VERSION:
            return None
        key = fh.read(klen).decode("ascii")
        if digest is not None and key != digest:
            return None
        vals = np.frombuffer(fh.read(8 * n), dtype="<f8").astype(np.float64)
        vecs = np.frombuffer(fh.read(8 * n * n), dtype="<f8").astype(np.float64).reshape(n, n)
    return SpectralBasis(vals, vecs)


def cached_eigendecompose(m, cache_dir):
    """:func:`eigendecompose` with an on-disk cache keyed by the matrix content."""
    digest = matrix_digest(m)
    path = Path(cache_dir) / f"basis-{digest[:16]}.bin"
    if path.exists():
        basis = load_basis(path, digest)
        if basis is not None:
            return basis
    basis = eigendecompose(m)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    save_basis(basis, tmp, digest)
    tmp.replace(path)
    return basis
