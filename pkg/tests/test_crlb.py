import math

import numpy as np
import pytest

from sensorsel.crlb import (
    CrlbValue,
    batch_inv3,
    batch_trace_inverse,
    crlb_fractional,
    crlb_trace,
    fim,
    fim_from_geoms,
    fractional_sums,
    inv3,
    marginal_reduction,
    pair_term,
    sherman_morrison_update,
    subset_geometries,
    svr_decompose,
    trace_inverse,
    triplet_term,
)
from sensorsel.scene import SensorTargetGeometry, random_scene

from conftest import (
    fim_entry_oracle,
    fractional_oracle,
    gram_rank,
    planar_scene,
    random_spd,
    trace_inv_oracle,
)


def geom(eps, los):
    los = np.asarray(los, dtype=float)
    return SensorTargetGeometry(distance=1.0, los=los / np.linalg.norm(los), epsilon=eps)


AXIS_GEOMS = [geom(1.0, [1, 0, 0]), geom(1.0, [0, 1, 0]), geom(1.0, [0, 0, 1])]


class TestFim:
    def test_orthonormal_unit_weights_give_identity(self):
        j = fim_from_geoms([1.0, 1.0, 1.0], [g.los for g in AXIS_GEOMS])
        np.testing.assert_allclose(j, np.eye(3), atol=1e-15)

    def test_single_sensor_rank_one(self):
        u = np.array([0.6, 0.8, 0.0])
        j = fim_from_geoms([2.5], [u])
        assert np.linalg.matrix_rank(j) == 1
        assert np.trace(j) == pytest.approx(2.5)

    def test_matches_scalar_entry_oracle(self, small_scene):
        target = small_scene.targets[1]
        subset = [0, 2, 5, 7, 9]
        geoms = subset_geometries(small_scene, subset, target)
        expected = fim_entry_oracle([g.epsilon for g in geoms], [g.los for g in geoms])
        np.testing.assert_allclose(fim(small_scene, subset, target), expected, rtol=1e-13)

    def test_rejects_duplicates_and_empty(self, small_scene):
        with pytest.raises(ValueError):
            fim(small_scene, [], small_scene.targets[0])
        with pytest.raises(ValueError):
            fim(small_scene, [1, 1, 2], small_scene.targets[0])


class TestTraceForm:
    def test_identity_gives_three(self):
        assert trace_inverse(np.eye(3)).value == pytest.approx(3.0)

    def test_two_sensors_singular(self, small_scene):
        out = crlb_trace(small_scene, [0, 1], small_scene.targets[0])
        assert out.singular and math.isinf(out.value)

    def test_matches_lapack_oracle(self, small_scene):
        target = small_scene.targets[0]
        subset = [1, 3, 4, 6]
        j = fim(small_scene, subset, target)
        assert crlb_trace(small_scene, subset, target).value == pytest.approx(
            trace_inv_oracle(j), rel=1e-11
        )

    def test_sentinel_invariant(self):
        v = CrlbValue.infinite()
        assert v.singular and math.isinf(v.value)
        w = CrlbValue.finite(2.0)
        assert not w.singular and w.value == 2.0


class TestFractionalForm:
    def test_axis_triple(self):
        eps = [1.0, 1.0, 1.0]
        los = [g.los for g in AXIS_GEOMS]
        n, d = fractional_sums(eps, los)
        assert n == pytest.approx(3.0)
        assert d == pytest.approx(1.0)

    def test_coplanar_is_singular(self):
        scene = planar_scene(n_extra_off_plane=0)
        out = crlb_fractional(scene, [0, 1, 2, 3], scene.targets[0])
        assert out.singular

    def test_requires_three_sensors(self, small_scene):
        with pytest.raises(ValueError):
            crlb_fractional(small_scene, [0, 1], small_scene.targets[0])

    def test_matches_nested_loop_oracle(self, small_scene):
        target = small_scene.targets[2]
        subset = [0, 1, 4, 5, 8, 9]
        geoms = subset_geometries(small_scene, subset, target)
        eps = [g.epsilon for g in geoms]
        los = [g.los for g in geoms]
        n_ref, d_ref = fractional_oracle(eps, np.asarray(los))
        n, d = fractional_sums(eps, los)
        assert n == pytest.approx(n_ref, rel=1e-12)
        assert d == pytest.approx(d_ref, rel=1e-12)

    def test_form_equivalence_random_subsets(self):
        rng = np.random.default_rng(7)
        for seed in range(20):
            scene = random_scene(seed=seed, m_max=12, d_s=4.0, d_max=14.0, g=1)
            target = scene.targets[0]
            for _ in range(5):
                m = int(rng.integers(4, 9))
                subset = rng.choice(12, size=m, replace=False).tolist()
                t = crlb_trace(scene, subset, target)
                f = crlb_fractional(scene, subset, target)
                assert t.singular == f.singular
                if not t.singular:
                    assert abs(t.value - f.value) / t.value <= 1e-9

    def test_monotone_in_subset_growth(self):
        scene = random_scene(seed=11, m_max=10, d_s=4.0, d_max=14.0, g=1)
        target = scene.targets[0]
        base = [0, 1, 2, 3]
        value = crlb_trace(scene, base, target).value
        for extra in range(4, 10):
            new_value = crlb_trace(scene, base + list(range(4, extra + 1)), target).value
            assert new_value <= value + 1e-12
            value = new_value


class TestPairTripletTerms:
    def test_parallel_pair_is_zero(self):
        a = geom(2.0, [0.0, 0.0, 1.0])
        b = geom(3.0, [0.0, 0.0, 1.0])
        assert pair_term(a, b) == pytest.approx(0.0, abs=1e-15)

    def test_orthonormal_triple_volume_one(self):
        assert triplet_term(*AXIS_GEOMS) == pytest.approx(1.0)

    def test_triplet_permutation_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            gs = [geom(rng.uniform(0.5, 2.0), rng.standard_normal(3)) for _ in range(3)]
            vals = {
                round(triplet_term(gs[i], gs[j], gs[k]), 12)
                for i, j, k in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
            }
            assert len(vals) == 1


class TestMarginalReduction:
    def test_zero_weight_gives_zero(self):
        g = geom(0.0, [1.0, 0.0, 0.0])
        assert marginal_reduction(np.eye(3), g) == pytest.approx(0.0)

    def test_identity_unit_case(self):
        g = geom(1.0, [0.0, 1.0, 0.0])
        assert marginal_reduction(np.eye(3), g) == pytest.approx(0.5)

    def test_matches_direct_trace_difference(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            j = random_spd(rng)
            j_inv = np.linalg.inv(j)
            g = geom(rng.uniform(0.1, 2.0), rng.standard_normal(3))
            direct = trace_inv_oracle(j) - trace_inv_oracle(j + g.epsilon * np.outer(g.los, g.los))
            assert marginal_reduction(j_inv, g) == pytest.approx(direct, abs=1e-10)

    def test_nonnegative(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            j_inv = np.linalg.inv(random_spd(rng))
            g = geom(rng.uniform(0.0, 3.0), rng.standard_normal(3))
            assert marginal_reduction(j_inv, g) >= 0.0


class TestShermanMorrison:
    def test_zero_weight_is_identity_update(self):
        j_inv = np.linalg.inv(random_spd(np.random.default_rng(5)))
        g = geom(0.0, [1.0, 0.0, 0.0])
        np.testing.assert_allclose(sherman_morrison_update(j_inv, g), j_inv, atol=1e-15)

    def test_identity_axis_case(self):
        g = geom(1.0, [1.0, 0.0, 0.0])
        np.testing.assert_allclose(
            sherman_morrison_update(np.eye(3), g), np.diag([0.5, 1.0, 1.0]), atol=1e-15
        )

    def test_matches_direct_inverse(self):
        rng = np.random.default_rng(29)
        for _ in range(300):
            j = random_spd(rng)
            g = geom(rng.uniform(0.1, 2.0), rng.standard_normal(3))
            updated = sherman_morrison_update(np.linalg.inv(j), g)
            direct = np.linalg.inv(j + g.epsilon * np.outer(g.los, g.los))
            np.testing.assert_allclose(updated, direct, atol=1e-10)


class TestArgmaxArgminDuality:
    def test_best_marginal_reduction_is_best_augmented_trace(self):
        rng = np.random.default_rng(31)
        for seed in range(10):
            scene = random_scene(seed=seed, m_max=10, d_s=4.0, d_max=14.0, g=1)
            target = scene.targets[0]
            base = [0, 1, 2]
            j = fim(scene, base, target)
            if trace_inverse(j).singular:
                continue
            j_inv = np.linalg.inv(j)
            geoms = subset_geometries(scene, range(10), target)
            candidates = [m for m in range(10) if m not in base]
            reductions = np.array([marginal_reduction(j_inv, geoms[m]) for m in candidates])
            traces = np.array(
                [crlb_trace(scene, base + [m], target).value for m in candidates]
            )
            argmax_set = set(np.flatnonzero(reductions >= reductions.max() - 1e-12))
            argmin_set = set(np.flatnonzero(traces <= traces.min() + 1e-12))
            assert argmax_set == argmin_set


class TestSvr:
    def test_unit_cube(self):
        out = svr_decompose(np.eye(3))
        assert out.surface == pytest.approx(6.0)
        assert out.volume == pytest.approx(1.0)
        assert (out.surface / 2.0) / out.volume == pytest.approx(3.0)

    def test_one_two_three_box(self):
        out = svr_decompose(np.diag([1.0, 2.0, 3.0]))
        assert (out.surface / 2.0) / out.volume == pytest.approx(11.0 / 6.0)

    def test_identity_with_trace_inverse(self):
        rng = np.random.default_rng(37)
        for _ in range(100):
            j = random_spd(rng, 0.2, 5.0)
            out = svr_decompose(j)
            assert (out.surface / 2.0) / out.volume == pytest.approx(
                trace_inv_oracle(j), rel=1e-9
            )


class TestSingularityDetection:
    def test_coplanar_los_flagged_by_both_forms(self):
        scene = planar_scene(n_extra_off_plane=1)
        target = scene.targets[0]
        coplanar = [0, 1, 2, 3]
        geoms = subset_geometries(scene, coplanar, target)
        assert gram_rank([g.los for g in geoms]) <= 2
        assert crlb_trace(scene, coplanar, target).singular
        assert crlb_fractional(scene, coplanar, target).singular

    def test_off_plane_sensor_restores_rank(self):
        scene = planar_scene(n_extra_off_plane=1)
        target = scene.targets[0]
        subset = [0, 1, 2, 4]
        geoms = subset_geometries(scene, subset, target)
        assert gram_rank([g.los for g in geoms]) == 3
        assert not crlb_trace(scene, subset, target).singular


class TestBatchKernels:
    def test_batch_inverse_matches_lapack(self):
        rng = np.random.default_rng(41)
        js = np.stack([random_spd(rng) for _ in range(50)])
        np.testing.assert_allclose(batch_inv3(js), np.linalg.inv(js), atol=1e-11)

    def test_batch_trace_inverse_flags_zero_matrix(self):
        js = np.stack([np.eye(3), np.zeros((3, 3))])
        vals, singular = batch_trace_inverse(js)
        assert vals[0] == pytest.approx(3.0)
        assert math.isinf(vals[1]) and singular[1]

    def test_inv3_matches_lapack(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            j = random_spd(rng)
            np.testing.assert_allclose(inv3(j), np.linalg.inv(j), atol=1e-11)
