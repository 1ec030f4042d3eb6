import json

import numpy as np
import pytest

from gcatlab.errors import ValidationError
from gcatlab.graph import dirichlet_energy
from gcatlab.synth import (
    HIGH_FREQ_INDICES, LOW_FREQ_INDICES, POINT_COUNTS, ScenarioSpec, case_grid, export_scenario,
    generate_scenario, median_discretize, scatter_point_labels,
)


class TestMedianDiscretize:
    @pytest.mark.parametrize("x, y", [
        ([1, 2, 3, 4], [0, 0, 1, 1]),
        ([5, 5, 1, 9], [0, 0, 0, 1]),
        ([1, 2], [0, 1]),
    ])
    def test_examples(self, x, y):
        assert median_discretize(x).tolist() == y

    def test_constant(self):
        with pytest.raises(ValidationError):
            median_discretize([2, 2, 2])


class TestScatter:
    def test_count(self):
        y = scatter_point_labels(2500, 10, seed=3)
        assert y.sum() == 10

    def test_seeded(self):
        assert np.array_equal(scatter_point_labels(100, 30, 1), scatter_point_labels(100, 30, 1))

    def test_all_but_one(self):
        y = scatter_point_labels(50, 49, 0)
        assert (y == 0).sum() == 1

    def test_accepts_graph(self, small_grid):
        assert scatter_point_labels(small_grid, 5, 0).size == small_grid.num_nodes

    @pytest.mark.parametrize("k", [0, 100, 101])
    def test_range(self, k):
        with pytest.raises(ValidationError):
            scatter_point_labels(100, k, 0)


class TestSpec:
    def test_grids(self):
        assert LOW_FREQ_INDICES == (1, 4, 7, 10, 13, 16, 19, 22, 25, 28)
        assert HIGH_FREQ_INDICES == tuple(-i for i in LOW_FREQ_INDICES)
        assert POINT_COUNTS[-1] == 2500 and len(POINT_COUNTS) == 10

    def test_validation(self):
        with pytest.raises(ValidationError):
            ScenarioSpec("5", 1, 1)
        with pytest.raises(ValidationError):
            ScenarioSpec("2", 3, 1, -1)
        with pytest.raises(ValidationError):
            ScenarioSpec("3", 1, -1)

    def test_labels(self):
        assert ScenarioSpec("1", 1, 1).label == "case_1"
        assert ScenarioSpec("4_1", 2, 10).label == "case_4_1_opt2"

    @pytest.mark.parametrize("case, option, shape", [
        ("1", 1, (10, 1)), ("2", 1, (10, 10)), ("2", 2, (10, 10)),
        ("3", 1, (10, 10)), ("3", 2, (10, 10)), ("4_1", 1, (10, 1)), ("4_1", 2, (10, 1)),
    ])
    def test_case_grid_shapes(self, case, option, shape):
        xs, ys, specs = case_grid(case, option)
        assert (len(xs), len(ys)) == shape
        assert len(specs) == shape[0] and all(len(r) == shape[1] for r in specs)

    def test_case2_has_hundred_cells(self):
        _, _, specs = case_grid("2", 1)
        assert sum(len(r) for r in specs) == 100


class TestGenerate:
    def test_case1_homophily(self, small_grid, small_grid_basis):
        sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("1", 1, 1))
        assert sc.s2_x == pytest.approx(small_grid_basis.eigenvalues[1], rel=1e-7)
        r = np.random.default_rng(0)
        null = [dirichlet_energy(small_grid, r.permutation(sc.y).astype(float)) for _ in range(100)]
        assert sc.s2_y < 0.25 * np.mean(null)
        assert np.array_equal(sc.y, median_discretize(sc.x))

    def test_case2_opt1(self, small_grid, small_grid_basis):
        sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("2", 1, 4, -4))
        src = small_grid_basis.eigenvectors[:, -4]
        assert sc.s2_x < dirichlet_energy(small_grid, src)
        assert np.array_equal(sc.y, median_discretize(src))

    def test_case2_opt2(self, small_grid, small_grid_basis):
        sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("2", 2, 4, 50, seed=2))
        assert sc.y.sum() == 50

    def test_case3(self, small_grid, small_grid_basis):
        sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("3", 1, -7, 1))
        np.testing.assert_array_equal(sc.x, small_grid_basis.eigenvectors[:, -7])
        sc2 = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("3", 2, 10, 1))
        assert set(np.unique(sc2.x)) == {0.0, 1.0} and sc2.x.sum() == 10

    def test_case4_opt2(self, small_grid, small_grid_basis):
        sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("4_1", 2, 100))
        assert sc.y.sum() == 100
        np.testing.assert_array_equal(sc.x, sc.y.astype(float))

    def test_frequency_tags(self, small_grid, small_grid_basis):
        med = np.median(small_grid_basis.eigenvalues)
        for k in LOW_FREQ_INDICES:
            sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("1", 1, k))
            assert sc.s2_x <= med
        for k in HIGH_FREQ_INDICES:
            sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("4_1", 1, k))
            assert sc.s2_x >= med
            assert set(np.unique(sc.y)) == {0, 1}

    def test_deterministic(self, small_grid, small_grid_basis):
        spec = ScenarioSpec("3", 2, 20, 4, seed=5)
        a = generate_scenario(small_grid, small_grid_basis, spec)
        b = generate_scenario(small_grid, small_grid_basis, spec)
        assert a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes()

    def test_point_count_too_large(self, small_grid, small_grid_basis):
        with pytest.raises(ValidationError):
            generate_scenario(small_grid, small_grid_basis, ScenarioSpec("4_1", 2, 144))

    def test_export(self, tmp_path, small_grid, small_grid_basis):
        sc = generate_scenario(small_grid, small_grid_basis, ScenarioSpec("2", 1, 1, -1))
        nodes, prov = export_scenario(sc, tmp_path)
        lines = nodes.read_text().splitlines()
        assert lines[0] == "id,label,x" and len(lines) == 145
        meta = json.loads(prov.read_text())
        assert meta["spec"]["x_param"] == 1 and meta["s2_x"] == sc.s2_x
        assert "0-based" in meta["eigenvector_indexing"]
