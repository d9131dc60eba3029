import numpy as np
import pytest

from sensorsel.dmo import _PenalizedModel, dmo
from sensorsel.dynamic import DegenerateSceneError
from sensorsel.robust import exhaustive_robust, is_binary
from sensorsel.scene import Scene, SensorSpec, grid_geometry, random_scene

from conftest import PAPER_NOISE


@pytest.fixture(scope="module")
def grid():
    scene = random_scene(seed=55, m_max=8, d_s=4.0, d_max=14.0, g=10, noise=PAPER_NOISE)
    return grid_geometry(scene)


class TestMonotonicity:
    def test_f_plus_increasing_on_random_ordered_pairs(self, grid):
        model = _PenalizedModel(grid, 4, 100.0)
        rng = np.random.default_rng(17)
        c2 = rng.uniform(0.0, 1.0, size=(200, 8))
        c1 = c2 * rng.uniform(0.0, 1.0, size=(200, 8))
        f1 = model.f_plus(c1)
        f2 = model.f_plus(c2)
        # -inf <= anything handles the singular sentinels.
        assert np.all(f1 <= f2 + 1e-9 * (1.0 + np.abs(f2)))

    def test_f_minus_increasing_and_penalizing(self, grid):
        model = _PenalizedModel(grid, 4, 100.0)
        assert model.f_minus(np.ones((1, 8)))[0] == pytest.approx(400.0)
        assert model.f_minus(0.5 * np.ones((1, 8)))[0] == pytest.approx(0.0)

    def test_constraint_parts_increasing(self, grid):
        model = _PenalizedModel(grid, 4, 100.0)
        rng = np.random.default_rng(5)
        c2 = rng.uniform(0.0, 1.0, size=(100, 8))
        c1 = c2 * rng.uniform(0.0, 1.0, size=(100, 8))
        assert np.all(c1.sum(axis=1) <= c2.sum(axis=1))  # g1 monotone
        assert np.all((c1 * c1).sum(axis=1) <= (c2 * c2).sum(axis=1))  # h1 monotone
        assert np.all(model.f_minus(c1) <= model.f_minus(c2))


class TestDmo:
    def test_matches_exhaustive_within_delta(self, grid):
        for m in (3, 4):
            res = dmo(grid, m, delta=0.05)
            ref = exhaustive_robust(grid, m)
            assert res.value >= ref.value - 1e-9  # never better than the optimum
            assert (res.value - ref.value) / res.value <= 0.05 + 1e-12

    def test_exact_when_queue_exhausts(self, grid):
        res = dmo(grid, 4, delta=1e-6)
        ref = exhaustive_robust(grid, 4)
        assert res.value == pytest.approx(ref.value, rel=1e-6)

    def test_output_has_exactly_m_ones(self, grid):
        for m in (3, 4, 5):
            res = dmo(grid, m)
            assert is_binary(res.c)
            assert len(res.subset) == m

    def test_undersized_budget_is_degenerate(self, grid):
        # Two sensors can never pin three coordinates anywhere on the grid.
        with pytest.raises(DegenerateSceneError):
            dmo(grid, 2)

    def test_duplicate_sensor_position_still_feasible(self):
        base = random_scene(seed=4, m_max=7, d_s=4.0, d_max=14.0, g=5, noise=PAPER_NOISE)
        pts = np.vstack([base.positions, base.positions[0]])
        pts -= pts.mean(axis=0)
        scene = Scene(
            sensors=tuple(SensorSpec(position=p) for p in pts),
            d_s=float(np.linalg.norm(pts, axis=1).max()),
            d_max=14.0,
            targets=base.targets + base.sensor_center - pts.mean(axis=0),
            sensor_center=np.zeros(3),
            noise=PAPER_NOISE,
        )
        res = dmo(scene, 3)
        assert is_binary(res.c) and len(res.subset) == 3

    def test_degenerate_scene_raises(self):
        pts = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]])
        scene = Scene(
            sensors=tuple(SensorSpec(position=p) for p in pts),
            d_s=1.0,
            d_max=20.0,
            targets=[[5.0, 0.0, 0.0]],  # in-plane target: every subset singular
            sensor_center=np.zeros(3),
        )
        with pytest.raises(DegenerateSceneError):
            dmo(scene, 3)

    def test_delta_validation(self, grid):
        with pytest.raises(ValueError):
            dmo(grid, 3, delta=0.0)
        with pytest.raises(ValueError):
            dmo(grid, 3, delta=1.0)

    def test_deterministic(self, grid):
        a = dmo(grid, 4)
        b = dmo(grid, 4)
        assert a.subset == b.subset and a.value == b.value
