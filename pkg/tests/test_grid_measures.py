import math

import numpy as np
import pytest

import ergolab as eg
from conftest import PHI, SQRT2M1, TWO_SINK_B


def _interval_boxes_oracle(n, lo, length):
    """Independent floor/ceil arithmetic for boxes overlapping an arc."""
    out = set()
    lo = lo % 1.0
    hi = lo + length
    for seg_lo, seg_hi in ([(lo, min(hi, 1.0))] + ([(0.0, hi - 1.0)] if hi > 1.0 else [])):
        for j in range(int(math.floor(seg_lo * n)), int(math.ceil(seg_hi * n))):
            if min(seg_hi, (j + 1) / n) - max(seg_lo, j / n) > 1e-12:
                out.add(j % n)
    return out


class TestUlamExactCircle:
    def test_identity_is_identity_matrix(self):
        g = eg.Grid(eg.CIRCLE, 8)
        u = eg.ulam_matrix(eg.CircleDiffeo(0.0, 0.0), g)
        assert np.array_equal(u.matrix.toarray(), np.eye(8))

    def test_aligned_rotation_is_cyclic_permutation(self):
        g = eg.Grid(eg.CIRCLE, 4)
        u = eg.ulam_matrix(eg.Rotation(0.25), g)
        expected = np.zeros((4, 4))
        expected[np.arange(4), (np.arange(4) + 1) % 4] = 1.0
        assert np.array_equal(u.matrix.toarray(), expected)

    def test_golden_rotation_two_entry_rows(self):
        # every image arc of a 1/64 box straddles exactly two boxes, split by
        # the fractional part of 64*phi = 0.5541752799932738
        frac = (64 * PHI) % 1.0
        assert frac == pytest.approx(0.5541752799932738, abs=1e-15)
        g = eg.Grid(eg.CIRCLE, 64)
        u = eg.ulam_matrix(eg.Rotation(PHI), g)
        dense = u.matrix.toarray()
        for i in range(64):
            nz = dense[i][dense[i] > 0]
            assert nz.size == 2
            assert sorted(nz) == pytest.approx([1.0 - frac, frac], abs=1e-12)
            assert nz.sum() == pytest.approx(1.0, abs=1e-12)

    def test_method_mismatch_rejected(self):
        g = eg.Grid(eg.TORUS2, 8)
        with pytest.raises(eg.UsageError):
            eg.ulam_matrix(eg.Rotation(0.1), g)


class TestUlamExactTorus:
    def test_translation_doubly_stochastic(self):
        g = eg.Grid(eg.TORUS2, 16)
        u = eg.ulam_matrix(eg.ToralTranslation(PHI, SQRT2M1), g)
        cols = np.asarray(u.matrix.sum(axis=0)).ravel()
        assert np.max(np.abs(cols - 1.0)) <= 1e-12

    def test_automorphism_doubly_stochastic(self):
        g = eg.Grid(eg.TORUS2, 16)
        u = eg.ulam_matrix(eg.ToralAutomorphism(((2, 1), (1, 1))), g)
        cols = np.asarray(u.matrix.sum(axis=0)).ravel()
        assert np.max(np.abs(cols - 1.0)) <= 1e-12

    def test_aligned_translation_is_permutation(self):
        g = eg.Grid(eg.TORUS2, 8)
        u = eg.ulam_matrix(eg.ToralTranslation(0.25, 0.5), g)
        dense = u.matrix.toarray()
        assert np.all((dense == 0.0) | (dense == 1.0))
        assert np.array_equal(dense.sum(axis=0), np.ones(64))

    def test_automorphism_matches_sampling(self):
        g = eg.Grid(eg.TORUS2, 8)
        m = eg.ToralAutomorphism(((2, 1), (1, 1)))
        exact = eg.ulam_matrix(m, g).matrix.toarray()
        sampled = eg.ulam_matrix(m, g, method="sampling", samples=1024, seed=1).matrix.toarray()
        assert np.max(np.abs(exact - sampled)) <= 0.05


class TestUlamSampling:
    def test_requires_minimum_samples(self):
        g = eg.Grid(eg.CIRCLE, 16)
        with pytest.raises(eg.UsageError):
            eg.ulam_matrix(eg.Rotation(0.1), g, method="sampling", samples=8)

    def test_exact_and_sampling_agree(self):
        g = eg.Grid(eg.CIRCLE, 64)
        m = eg.CircleDiffeo(0.1, 0.5)
        exact = eg.ulam_matrix(m, g).matrix.toarray()
        sampled = eg.ulam_matrix(m, g, method="sampling", samples=256, seed=0).matrix.toarray()
        assert np.max(np.abs(exact - sampled)) <= 0.05

    def test_sampling_deterministic_per_seed(self):
        g = eg.Grid(eg.CIRCLE, 32)
        m = eg.CircleDiffeo(0.1, 0.5)
        a = eg.ulam_matrix(m, g, method="sampling", samples=64, seed=5).matrix
        b = eg.ulam_matrix(m, g, method="sampling", samples=64, seed=5).matrix
        assert (a != b).nnz == 0


class TestRowStochasticity:
    @pytest.mark.parametrize(
        "m,n",
        [
            (eg.Rotation(PHI), 256),
            (eg.CircleDiffeo(0.1, 0.5), 128),
            (eg.CircleDiffeo(0.001, TWO_SINK_B, freq=2), 128),
            (eg.ToralTranslation(PHI, SQRT2M1), 32),
            (eg.ToralAutomorphism(((2, 1), (1, 1))), 32),
        ],
        ids=lambda v: repr(v),
    )
    def test_rows_sum_to_one(self, m, n):
        g = eg.Grid(m.space, n)
        u = eg.ulam_matrix(m, g)
        rows = np.asarray(u.matrix.sum(axis=1)).ravel()
        assert np.max(np.abs(rows - 1.0)) <= 1e-9


class TestAnnealed:
    def test_single_map_equals_ulam(self, golden_rotation):
        g = eg.Grid(eg.CIRCLE, 64)
        a = eg.annealed_matrix(golden_rotation, g).matrix
        b = eg.ulam_matrix(golden_rotation.maps[0], g).matrix
        assert (a != b).nnz == 0

    def test_two_aligned_rotations_half_weights(self):
        ifs = eg.uniform_ifs([eg.Rotation(0.25), eg.Rotation(0.5)])
        g = eg.Grid(eg.CIRCLE, 4)
        dense = eg.annealed_matrix(ifs, g).matrix.toarray()
        for i in range(4):
            nz = sorted(dense[i][dense[i] > 0])
            assert nz == [0.5, 0.5]

    def test_mixed_family_row_sums(self):
        ifs = eg.uniform_ifs([eg.Rotation(PHI), eg.CircleDiffeo(0.1, 0.5)])
        g = eg.Grid(eg.CIRCLE, 128)
        rows = np.asarray(eg.annealed_matrix(ifs, g).matrix.sum(axis=1)).ravel()
        assert np.max(np.abs(rows - 1.0)) <= 1e-9


class TestPushforward:
    def test_permutation_preserves_uniform(self):
        g = eg.Grid(eg.CIRCLE, 4)
        u = eg.ulam_matrix(eg.Rotation(0.25), g)
        mu = eg.GridMeasure.uniform(g)
        assert eg.tv_distance(eg.pushforward(mu, u), mu) == 0.0

    def test_point_mass_shifts(self):
        g = eg.Grid(eg.CIRCLE, 4)
        u = eg.ulam_matrix(eg.Rotation(0.25), g)
        out = eg.pushforward(eg.GridMeasure.point_mass(g, 0), u)
        assert out.weights[1] == 1.0

    def test_mass_conservation(self):
        g = eg.Grid(eg.CIRCLE, 128)
        u = eg.ulam_matrix(eg.CircleDiffeo(0.1, 0.5), g)
        rng = np.random.default_rng(0)
        for _ in range(5):
            w = rng.random(128)
            mu = eg.GridMeasure(g, w / w.sum())
            assert abs(eg.pushforward(mu, u).weights.sum() - 1.0) <= 1e-9

    def test_diffeo_pushforward_vs_monte_carlo(self):
        # oracle: histogram of 1e6 pushed sample points
        g = eg.Grid(eg.CIRCLE, 128)
        m = eg.CircleDiffeo(0.1, 0.5)
        u = eg.ulam_matrix(m, g)
        pushed = eg.pushforward(eg.GridMeasure.uniform(g), u)
        rng = np.random.default_rng(123)
        samples = m.apply_points(rng.random(10**6))
        hist = np.bincount(g.box_index(samples), minlength=128).astype(float)
        mc = eg.GridMeasure(g, hist / hist.sum())
        assert eg.tv_distance(pushed, mc) <= 0.02
        assert eg.tv_distance(pushed, eg.GridMeasure.uniform(g)) > 0.05

    def test_grid_mismatch(self):
        u = eg.ulam_matrix(eg.Rotation(0.25), eg.Grid(eg.CIRCLE, 4))
        mu = eg.GridMeasure.uniform(eg.Grid(eg.CIRCLE, 8))
        with pytest.raises(eg.UsageError):
            eg.pushforward(mu, u)


class TestPermutationExactness:
    def test_composition_matches_matrix_product(self):
        # for grid-aligned rotations the discretization is a homomorphism:
        # pushing forward by f then g equals the matrix product P_f P_g
        g = eg.Grid(eg.CIRCLE, 8)
        f, h = eg.Rotation(2 / 8), eg.Rotation(3 / 8)
        pf = eg.ulam_matrix(f, g).matrix.toarray()
        ph = eg.ulam_matrix(h, g).matrix.toarray()
        composed = eg.ulam_matrix(eg.Rotation(5 / 8), g).matrix.toarray()
        assert np.array_equal(pf @ ph, composed)


class TestTvDistance:
    def test_identical(self):
        g = eg.Grid(eg.CIRCLE, 16)
        mu = eg.GridMeasure.uniform(g)
        assert eg.tv_distance(mu, mu) == 0.0

    def test_disjoint_point_masses(self):
        g = eg.Grid(eg.CIRCLE, 16)
        assert eg.tv_distance(eg.GridMeasure.point_mass(g, 0), eg.GridMeasure.point_mass(g, 5)) == 1.0

    def test_uniform_vs_point_mass_quarter_grid(self):
        g = eg.Grid(eg.CIRCLE, 4)
        assert eg.tv_distance(eg.GridMeasure.uniform(g), eg.GridMeasure.point_mass(g, 0)) == 0.75


class TestPreimage:
    def test_identity(self):
        g = eg.Grid(eg.CIRCLE, 16)
        a = eg.BoxSet.from_interval(g, 0.25, 0.75)
        pre = eg.preimage_boxset(eg.CircleDiffeo(0.0, 0.0), a, g)
        assert pre.indices == a.indices

    def test_shift_permutation(self):
        g = eg.Grid(eg.CIRCLE, 4)
        a = eg.BoxSet.from_indices(g, [1])
        pre = eg.preimage_boxset(eg.Rotation(0.25), a, g)
        assert pre.indices == frozenset({0})

    def test_rotation_preimage_matches_interval_oracle(self):
        g = eg.Grid(eg.CIRCLE, 128)
        a = eg.BoxSet.from_interval(g, 0.0, 0.5)
        pre = eg.preimage_boxset(eg.Rotation(PHI), a, g)
        oracle = _interval_boxes_oracle(128, -PHI, 0.5)
        assert len(pre.indices ^ oracle) <= 2  # one boundary box per arc endpoint

    def test_theta_validation(self):
        g = eg.Grid(eg.CIRCLE, 8)
        a = eg.BoxSet.from_indices(g, [0])
        with pytest.raises(eg.UsageError):
            eg.preimage_boxset(eg.Rotation(0.1), a, g, theta=0.0)


class TestSymmetricDifferenceScore:
    def test_whole_space_and_empty_are_invariant(self, golden_rotation):
        g = eg.Grid(eg.CIRCLE, 32)
        mu = eg.GridMeasure.uniform(g)
        assert eg.symmetric_difference_score(golden_rotation, mu, eg.BoxSet.all_boxes(g)) == 0.0
        assert eg.symmetric_difference_score(golden_rotation, mu, eg.BoxSet.empty(g)) == 0.0

    def test_half_preserving_diffeo_scores_below_boundary_scale(self):
        # x + 0.3*sin(2*pi*x)/(2*pi) fixes 0 and 1/2, so each half is invariant
        n = 128
        ifs = eg.uniform_ifs([eg.CircleDiffeo(0.0, 0.3)])
        g = eg.Grid(eg.CIRCLE, n)
        mu = eg.GridMeasure.uniform(g)
        a = eg.BoxSet.from_interval(g, 0.0, 0.5)
        assert eg.symmetric_difference_score(ifs, mu, a) <= 2.0 / n

    def test_complement_symmetry_for_volume_preserving(self, golden_rotation, torus_ifs):
        for ifs, grid in [
            (golden_rotation, eg.Grid(eg.CIRCLE, 64)),
            (torus_ifs, eg.Grid(eg.TORUS2, 16)),
        ]:
            mu = eg.GridMeasure.uniform(grid)
            if grid.space.dim == 1:
                a = eg.BoxSet.from_interval(grid, 0.1, 0.4)
            else:
                a = eg.BoxSet.from_rect(grid, 0.0, 0.5, 0.0, 0.5)
            s1 = eg.symmetric_difference_score(ifs, mu, a)
            s2 = eg.symmetric_difference_score(ifs, mu, a.complement())
            assert abs(s1 - s2) <= 1e-9


class TestQuasiInvariance:
    def test_uniform_under_diffeo(self):
        g = eg.Grid(eg.CIRCLE, 64)
        mu = eg.GridMeasure.uniform(g)
        assert eg.quasi_invariance_check(mu, eg.CircleDiffeo(0.1, 0.5), eps=1e-9).ok

    def test_point_mass_under_shift_fails(self):
        g = eg.Grid(eg.CIRCLE, 4)
        mu = eg.GridMeasure.point_mass(g, 0)
        report = eg.quasi_invariance_check(mu, eg.Rotation(0.25), eps=1e-9)
        assert not report.ok
        assert report.violating_boxes == (1,)

    def test_two_sink_stationary_supports_itself(self, two_sink_ifs, two_sink_map):
        g = eg.Grid(eg.CIRCLE, 128)
        mu = eg.stationary_measure(two_sink_ifs, g).measure
        assert eg.quasi_invariance_check(mu, two_sink_map, eps=1e-9).ok


class TestBoxSetAndCsv:
    def test_from_interval_half(self):
        g = eg.Grid(eg.CIRCLE, 128)
        a = eg.BoxSet.from_interval(g, 0.0, 0.5)
        assert a.indices == frozenset(range(64))

    def test_wraparound_interval(self):
        g = eg.Grid(eg.CIRCLE, 8)
        a = eg.BoxSet.from_interval(g, 0.875, 1.125)
        assert a.indices == frozenset({7, 0})

    def test_complement_and_symdiff(self):
        g = eg.Grid(eg.CIRCLE, 8)
        a = eg.BoxSet.from_indices(g, [0, 1])
        b = eg.BoxSet.from_indices(g, [1, 2])
        assert a.symmetric_difference(b).indices == frozenset({0, 2})
        assert a.complement().indices == frozenset(range(2, 8))

    def test_csv_exports(self, tmp_path):
        g = eg.Grid(eg.CIRCLE, 8)
        u = eg.ulam_matrix(eg.Rotation(0.25), g)
        from ergolab.grid_measures import measure_to_csv, ulam_to_csv

        ulam_to_csv(u, tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().strip().splitlines()
        assert lines[0] == "row,col,value" and len(lines) == 9
        measure_to_csv(eg.GridMeasure.uniform(g), tmp_path / "mu.csv")
        lines = (tmp_path / "mu.csv").read_text().strip().splitlines()
        assert lines[0] == "box,weight" and len(lines) == 9
