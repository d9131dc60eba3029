from itertools import combinations

import numpy as np
import pytest

from sensorsel.convex import project_capped_simplex
from sensorsel.crlb import crlb_trace
from sensorsel.dynamic import EnumerationCapError
from sensorsel.robust import (
    exhaustive_robust,
    grid_values,
    ico,
    is_binary,
    relaxed_solve,
    round_top_m,
    subset_to_vector,
    vector_to_subset,
    worst_case_crlb,
)
from sensorsel.scene import (
    Scene,
    SensorSpec,
    grid_geometry,
    prism_scene,
    random_scene,
)

from conftest import PAPER_NOISE, axis_cross_scene, trace_inv_oracle


def worst_case_oracle(scene, c):
    """Per-grid-point LAPACK inversion, plain loop."""
    best = -np.inf
    for g in range(scene.targets.shape[0]):
        grid = grid_geometry(scene, scene.targets[g : g + 1])
        j = np.einsum("m,mi,mj->ij", c * grid.eps[0], grid.los[0], grid.los[0])
        if np.linalg.matrix_rank(j, tol=1e-12) < 3:
            return np.inf
        best = max(best, trace_inv_oracle(j))
    return best


@pytest.fixture
def robust_scene():
    return random_scene(seed=21, m_max=8, d_s=4.0, d_max=14.0, g=5, noise=PAPER_NOISE)


class TestProjection:
    def test_mass_and_box_constraints(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 20))
            total = rng.uniform(0.0, n)
            v = rng.standard_normal(n) * rng.uniform(0.1, 10.0)
            c = project_capped_simplex(v, total)
            assert np.all(c >= -1e-12) and np.all(c <= 1 + 1e-12)
            assert c.sum() == pytest.approx(total, abs=1e-9)

    def test_identity_on_feasible_point(self):
        v = np.array([0.25, 0.5, 0.25, 0.0])
        np.testing.assert_allclose(project_capped_simplex(v, 1.0), v, atol=1e-9)

    def test_infeasible_mass_rejected(self):
        with pytest.raises(ValueError):
            project_capped_simplex(np.zeros(3), 4.0)


class TestWorstCase:
    def test_all_ones_single_target_equals_trace_form(self, robust_scene):
        single = grid_geometry(robust_scene, robust_scene.targets[:1])
        out = worst_case_crlb(single, np.ones(8))
        ref = crlb_trace(robust_scene, list(range(8)), robust_scene.targets[0])
        assert out.value == pytest.approx(ref.value, rel=1e-12)
        assert out.argmax_g == 0

    def test_two_nonzero_weights_is_infinite(self, robust_scene):
        c = np.zeros(8)
        c[2] = c[5] = 1.0
        assert np.isinf(worst_case_crlb(robust_scene, c).value)

    def test_matches_per_target_oracle(self, robust_scene):
        rng = np.random.default_rng(13)
        for _ in range(10):
            c = rng.uniform(0.0, 1.0, size=8)
            out = worst_case_crlb(robust_scene, c)
            assert out.value == pytest.approx(worst_case_oracle(robust_scene, c), rel=1e-9)
            vals = grid_values(grid_geometry(robust_scene), c)
            assert out.value == vals[out.argmax_g]


class TestRelaxedSolve:
    def test_full_budget_is_all_ones(self, robust_scene):
        sol = relaxed_solve(robust_scene, 8)
        np.testing.assert_allclose(sol.c, np.ones(8), atol=1e-9)

    def test_never_worse_than_binary_optimum(self, robust_scene):
        sol = relaxed_solve(robust_scene, 4)
        ref = exhaustive_robust(robust_scene, 4)
        assert sol.objective <= ref.value * (1 + 1e-9)

    def test_symmetric_scene_symmetric_weights_and_grid_search(self):
        # Target on the z axis: the four equatorial sensors are equivalent.
        scene = axis_cross_scene(d_s=2.0, d_max=10.0, targets=((0.0, 0.0, 6.0),))
        grid = grid_geometry(scene)
        sol = relaxed_solve(grid, 3)
        eq = sol.c[:4]
        assert eq.max() - eq.min() <= 1e-4
        # Two-parameter reduction: equal equatorial weight a, apex weights b1, b2
        # with 4a + b1 + b2 = 3.  A fine scan must not beat the solver.
        best = np.inf
        for b1 in np.linspace(0.0, 1.0, 41):
            for b2 in np.linspace(0.0, 1.0, 41):
                a = (3.0 - b1 - b2) / 4.0
                if not 0.0 <= a <= 1.0:
                    continue
                c = np.array([a, a, a, a, b1, b2])
                val = worst_case_crlb(grid, c).value
                best = min(best, val)
        assert sol.objective <= best + 1e-6 * best

    def test_pinned_sensors_stay_pinned(self, robust_scene):
        sol = relaxed_solve(robust_scene, 4, fixed_ones=[1, 6])
        assert sol.c[1] == pytest.approx(1.0, abs=1e-12)
        assert sol.c[6] == pytest.approx(1.0, abs=1e-12)

    def test_rejects_oversized_pin_set(self, robust_scene):
        with pytest.raises(ValueError):
            relaxed_solve(robust_scene, 2, fixed_ones=[0, 1, 2])


class TestRoundTopM:
    def test_binary_input_unchanged(self):
        c = np.array([1.0, 0.0, 1.0, 0.0])
        np.testing.assert_array_equal(round_top_m(c, 2), c)

    def test_keeps_largest(self):
        c = np.array([0.9, 0.8, 0.1, 0.05])
        np.testing.assert_array_equal(round_top_m(c, 2), [1.0, 1.0, 0.0, 0.0])

    def test_tie_break_lowest_index(self):
        c = np.array([0.5, 0.7, 0.5, 0.5])
        np.testing.assert_array_equal(round_top_m(c, 2), [1.0, 1.0, 0.0, 0.0])

    def test_instability_gap_on_prism(self):
        scene = prism_scene(g=40, noise=PAPER_NOISE)
        grid = grid_geometry(scene)
        gaps = []
        for m in (4, 5, 6):
            sol = relaxed_solve(grid, m)
            rounded = round_top_m(sol.c, m)
            ref = exhaustive_robust(grid, m)
            assert sol.objective <= ref.value * (1 + 1e-9)
            gaps.append(worst_case_crlb(grid, rounded).value / ref.value)
        assert max(gaps) >= 1.2


class TestIco:
    def test_exact_budget_and_binary(self, robust_scene):
        c = ico(robust_scene, 4)
        assert is_binary(c)
        assert int(c.sum()) == 4

    def test_full_budget(self, robust_scene):
        c = ico(robust_scene, 8)
        np.testing.assert_array_equal(c, np.ones(8))

    def test_single_selection_contract(self):
        scene = random_scene(seed=2, m_max=6, d_s=2.0, d_max=8.0, g=1, noise=PAPER_NOISE)
        c = ico(scene, 1)
        assert is_binary(c) and int(c.sum()) == 1
        assert np.isinf(worst_case_crlb(scene, c).value)  # one sensor cannot fix 3D

    def test_bracketed_by_dmo_and_rounding_on_aggregate(self):
        # Aggregate over 50 seeded scenes: the greedy pinning sits between the
        # exact optimizer and the naive top-weight rounding.
        from sensorsel.dmo import dmo

        ico_vals, dmo_vals, round_vals = [], [], []
        for seed in range(50):
            scene = random_scene(seed=seed, m_max=8, d_s=4.0, d_max=14.0, g=10, noise=PAPER_NOISE)
            grid = grid_geometry(scene)
            ico_vals.append(worst_case_crlb(grid, ico(grid, 4)).value)
            dmo_vals.append(dmo(grid, 4).value)
            sol = relaxed_solve(grid, 4)
            round_vals.append(worst_case_crlb(grid, round_top_m(sol.c, 4)).value)
        finite = np.isfinite(round_vals)
        assert np.mean(ico_vals) >= np.mean(dmo_vals) - 1e-9
        assert np.mean(np.asarray(ico_vals)[finite]) <= np.mean(np.asarray(round_vals)[finite])


class TestExhaustiveRobust:
    def test_full_set(self, robust_scene):
        res = exhaustive_robust(robust_scene, 8)
        np.testing.assert_array_equal(res.c, np.ones(8))

    def test_matches_naive_loop(self, robust_scene):
        res = exhaustive_robust(robust_scene, 4)
        best_val, best_subset = np.inf, None
        for subset in combinations(range(8), 4):
            val = worst_case_oracle(robust_scene, subset_to_vector(subset, 8))
            if val < best_val:
                best_val, best_subset = val, list(subset)
        assert res.subset == best_subset
        assert res.value == pytest.approx(best_val, rel=1e-9)

    def test_all_coplanar_flag(self):
        pts = np.array(
            [[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0], [0.5, 0.5, 0]]
        )
        pts -= pts.mean(axis=0)
        scene = Scene(
            sensors=tuple(SensorSpec(position=p) for p in pts),
            d_s=float(np.linalg.norm(pts, axis=1).max()),
            d_max=30.0,
            targets=[[6.0, 0.1, 0.0]],  # in the sensor plane: every LOS set flat
            sensor_center=pts.mean(axis=0),
        )
        res = exhaustive_robust(scene, 3)
        assert res.all_singular
        assert res.subset == [0, 1, 2]  # lexicographically first

    def test_cap_refusal(self):
        scene = random_scene(seed=0, m_max=14, d_s=4.0, d_max=14.0, g=2)
        with pytest.raises(EnumerationCapError):
            exhaustive_robust(scene, 7, cap=100)


class TestVectorHelpers:
    def test_binary_round_trip(self):
        c = subset_to_vector([0, 3], 5)
        assert vector_to_subset(c) == [0, 3]
        assert is_binary(c)

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            vector_to_subset(np.array([0.5, 0.5]))
