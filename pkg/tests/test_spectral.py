import numpy as np
import pytest

from gcatlab.errors import ValidationError
from gcatlab.graph import Graph, dirichlet_energy, grid_graph, laplacian
from gcatlab.spectral import (
    SpectralBasis, cached_eigendecompose, eigendecompose, householder_ql, load_basis,
    matrix_digest, save_basis, select_eigenvector,
)


def p3_char_roots():
    # det(L - t I) for the path on three nodes is -t (t - 1) (t - 3).
    return np.sort(np.roots([-1, 4, -3, 0]).real)


class TestEigendecompose:
    def test_k2(self, k2):
        b = eigendecompose(laplacian(k2).toarray())
        np.testing.assert_allclose(b.eigenvalues, [0, 2], atol=1e-14)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(b.eigenvectors[:, 0], [s, s], atol=1e-14)
        np.testing.assert_allclose(b.eigenvectors[:, 1], [s, -s], atol=1e-14)

    def test_diagonal(self):
        b = eigendecompose(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(b.eigenvalues, [1, 2, 3])
        np.testing.assert_allclose(b.eigenvectors, [[0, 0, 1], [1, 0, 0], [0, 1, 0]], atol=1e-15)

    def test_p3(self, p3):
        b = eigendecompose(laplacian(p3).toarray())
        np.testing.assert_allclose(b.eigenvalues, [0, 1, 3], atol=1e-13)
        np.testing.assert_allclose(b.eigenvalues, p3_char_roots(), atol=1e-12)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValidationError):
            eigendecompose(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_sparse_input(self, p3):
        b = eigendecompose(laplacian(p3))
        assert b.size == 3

    @pytest.mark.parametrize("method", ["lapack", "reference"])
    def test_properties_on_grid(self, method):
        g = grid_graph(9, 7)
        lap = laplacian(g).toarray()
        b = eigendecompose(lap, method=method)
        v, lam = b.eigenvectors, b.eigenvalues
        assert np.all(np.diff(lam) >= 0) and lam[0] >= -1e-9
        np.testing.assert_allclose(v.T @ v, np.eye(63), atol=1e-8)
        resid = np.linalg.norm(lap @ v - v * lam, axis=0)
        assert np.all(resid <= 1e-7 * np.maximum(1.0, np.abs(lam)))
        rel = np.linalg.norm(v @ np.diag(lam) @ v.T - lap) / np.linalg.norm(lap)
        assert rel < 1e-6
        for k in range(63):
            assert dirichlet_energy(g, v[:, k]) == pytest.approx(lam[k], rel=1e-7, abs=1e-12)

    def test_sign_convention(self):
        b = eigendecompose(laplacian(grid_graph(6)).toarray())
        for k in range(b.size):
            col = b.eigenvectors[:, k]
            first = col[np.abs(col) > 1e-12][0]
            assert first > 0

    def test_reference_matches_lapack(self, rng):
        m = rng.standard_normal((40, 40))
        m = m + m.T
        ref = eigendecompose(m, method="reference")
        lap = eigendecompose(m, method="lapack")
        np.testing.assert_allclose(ref.eigenvalues, lap.eigenvalues, atol=1e-10)
        # Spectrum of a random matrix is simple, so vectors agree after sign fixing.
        np.testing.assert_allclose(ref.eigenvectors, lap.eigenvectors, atol=1e-8)

    def test_householder_ql_raw(self, rng):
        m = rng.standard_normal((12, 12))
        m = m + m.T
        d, z = householder_ql(m)
        np.testing.assert_allclose(m @ z, z * d, atol=1e-10)

    def test_deterministic(self):
        lap = laplacian(grid_graph(8)).toarray()
        a, b = eigendecompose(lap), eigendecompose(lap)
        assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
        assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()


class TestSelectEigenvector:
    def test_constant_sign_first(self):
        b = eigendecompose(laplacian(grid_graph(5)).toarray())
        v = select_eigenvector(b, 0)
        assert np.all(v > 0)

    def test_minus_one_on_k2(self, k2):
        b = eigendecompose(laplacian(k2).toarray())
        np.testing.assert_allclose(select_eigenvector(b, -1), np.array([1, -1]) / np.sqrt(2))

    def test_high_beats_low(self):
        rng = np.random.default_rng(3)
        for n in (3, 8, 20):
            upper = np.triu(rng.random((n, n)) < 0.5, k=1)
            upper[np.arange(n - 1), np.arange(1, n)] = True  # keep it connected
            g = Graph.from_edges(n, *np.nonzero(upper))
            b = eigendecompose(laplacian(g).toarray())
            assert (dirichlet_energy(g, select_eigenvector(b, -1))
                    >= dirichlet_energy(g, select_eigenvector(b, 1)))

    def test_range(self, k2):
        b = eigendecompose(laplacian(k2).toarray())
        select_eigenvector(b, -2)
        with pytest.raises(ValidationError):
            select_eigenvector(b, 2)
        with pytest.raises(ValidationError):
            select_eigenvector(b, -3)


class TestCache:
    def test_round_trip(self, tmp_path, p3):
        b = eigendecompose(laplacian(p3).toarray())
        save_basis(b, tmp_path / "b.bin", "abc")
        c = load_basis(tmp_path / "b.bin", "abc")
        assert c.eigenvectors.tobytes() == b.eigenvectors.tobytes()
        assert load_basis(tmp_path / "b.bin", "other") is None

    def test_cached_eigendecompose_hits(self, tmp_path, monkeypatch):
        lap = laplacian(grid_graph(5)).toarray()
        first = cached_eigendecompose(lap, tmp_path)
        files = list(tmp_path.iterdir())
        assert len(files) == 1 and matrix_digest(lap)[:16] in files[0].name

        import gcatlab.spectral as spectral

        def boom(*a, **k):
            raise AssertionError("cache miss")

        monkeypatch.setattr(spectral, "eigendecompose", boom)
        again = cached_eigendecompose(lap, tmp_path)
        assert again.eigenvalues.tobytes() == first.eigenvalues.tobytes()

    def test_basis_type(self):
        b = SpectralBasis(np.array([0.0, 1.0]), np.eye(2))
        assert b.size == 2
