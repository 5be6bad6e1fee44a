import math

import numpy as np
import pytest

import ergolab as eg
from ergolab.stationary import lazy_operator
from conftest import PHI


def _n_cycle_matrix(n):
    g = eg.Grid(eg.CIRCLE, n)
    return eg.ulam_matrix(eg.Rotation(1.0 / n), g), g


class TestStationaryMeasure:
    def test_irrational_rotation_uniform_exact(self, golden_rotation):
        g = eg.Grid(eg.CIRCLE, 256)
        res = eg.stationary_measure(golden_rotation, g)
        assert res.converged
        assert res.residual <= 1e-9
        assert eg.tv_distance(res.measure, eg.GridMeasure.uniform(g)) <= 1e-9

    def test_toral_automorphism_uniform(self):
        ifs = eg.uniform_ifs([eg.ToralAutomorphism(((2, 1), (1, 1)))])
        g = eg.Grid(eg.TORUS2, 64)
        res = eg.stationary_measure(ifs, g)
        assert res.converged
        assert eg.tv_distance(res.measure, eg.GridMeasure.uniform(g)) <= 1e-9

    def test_fixed_point_residual_contract(self, two_sink_ifs):
        g = eg.Grid(eg.CIRCLE, 128)
        res = eg.stationary_measure(two_sink_ifs, g, tol=1e-8)
        pushed = eg.pushforward(res.measure, res.operator)
        assert eg.tv_distance(res.measure, pushed) <= 1e-8

    def test_diffeo_against_monte_carlo_orbit(self):
        # oracle: visit histogram of a 1e7-step random orbit, pure-python loop
        a, b = 0.1, 0.3
        n_grid = 128
        ifs = eg.uniform_ifs([eg.CircleDiffeo(a, b)])
        g = eg.Grid(eg.CIRCLE, n_grid)
        res = eg.stationary_measure(ifs, g)
        assert res.converged

        c = b / (2 * math.pi)
        two_pi = 2 * math.pi
        sin = math.sin
        hist = np.zeros(n_grid)
        x = 0.123456
        for _ in range(10**7):
            x = (x + a + c * sin(two_pi * x)) % 1.0
            hist[int(x * n_grid)] += 1
        mc = eg.GridMeasure(g, hist / hist.sum())
        assert eg.tv_distance(res.measure, mc) <= 0.05
        assert eg.tv_distance(res.measure, eg.GridMeasure.uniform(g)) > 0.05

    def test_nonconverged_flagged(self, two_sink_ifs):
        g = eg.Grid(eg.CIRCLE, 128)
        res = eg.stationary_measure(two_sink_ifs, g, tol=1e-12, max_iter=3)
        assert not res.converged
        assert res.iterations == 3

    def test_lazy_operator_same_fixed_point(self, two_sink_ifs, golden_rotation):
        # coincidence at 2*tol needs the operator reasonably conditioned;
        # the contracting control system and the exact rotation both qualify
        for ifs, n in [(two_sink_ifs, 128), (golden_rotation, 64)]:
            g = eg.Grid(eg.CIRCLE, n)
            tol = 1e-9
            u = eg.annealed_matrix(ifs, g)
            a = eg.stationary_from_matrix(u, tol=tol)
            b = eg.stationary_from_matrix(lazy_operator(u), tol=tol)
            assert eg.tv_distance(a.measure, b.measure) <= 2 * tol

    def test_permutation_cesaro_iteration_bound(self):
        tol = 1e-8
        for n in (16, 64):
            u, g = _n_cycle_matrix(n)
            res = eg.stationary_from_matrix(u, tol=tol)
            assert res.converged
            assert res.iterations <= n * math.ceil(1.0 / tol)
            assert eg.tv_distance(res.measure, eg.GridMeasure.uniform(g)) <= tol


class TestErgodicComponents:
    def test_identity_gives_singletons(self):
        g = eg.Grid(eg.CIRCLE, 4)
        u = eg.ulam_matrix(eg.CircleDiffeo(0.0, 0.0), g)
        comps = eg.ergodic_components(u, eg.GridMeasure.uniform(g))
        assert [sorted(c.indices) for c in comps] == [[0], [1], [2], [3]]

    def test_n_cycle_gives_single_component(self):
        u, g = _n_cycle_matrix(8)
        comps = eg.ergodic_components(u, eg.GridMeasure.uniform(g))
        assert len(comps) == 1
        assert comps[0].indices == frozenset(range(8))

    def test_two_sink_components_match_basin_oracle(self, two_sink_ifs, two_sink_map):
        # oracle: iterate every box center forward; basins split at the repellers
        n = 128
        g = eg.Grid(eg.CIRCLE, n)
        res = eg.stationary_measure(two_sink_ifs, g)
        comps = eg.ergodic_components(res.operator, res.measure)
        assert len(comps) == 2

        centers = g.centers()
        pts = centers.copy()
        for _ in range(400):
            pts = two_sink_map.apply_points(pts)
        left_basin = set(np.nonzero(np.abs(pts - 0.25) < 0.05)[0].tolist())
        right_basin = set(np.nonzero(np.abs(pts - 0.75) < 0.05)[0].tolist())
        assert left_basin and right_basin
        lows = sorted(min(c.indices) for c in comps)
        comp_left = next(c for c in comps if min(c.indices) == lows[0])
        comp_right = next(c for c in comps if min(c.indices) == lows[1])
        assert comp_left.indices <= left_basin
        assert comp_right.indices <= right_basin

    def test_components_cover_support_and_are_disjoint(self, two_sink_ifs):
        # the support threshold must dominate the fixed-point residual, or
        # transient boxes keep residual dust above it
        g = eg.Grid(eg.CIRCLE, 128)
        tol = 1e-10
        res = eg.stationary_measure(two_sink_ifs, g, tol=1e-13)
        comps = eg.ergodic_components(res.operator, res.measure, tol=tol)
        support = set(np.nonzero(res.measure.weights > tol)[0].tolist())
        union = set()
        for i, c in enumerate(comps):
            for d in comps[i + 1 :]:
                assert not (c.indices & d.indices)
            union |= c.indices
        assert union >= support

    def test_empty_support_rejected(self):
        u, g = _n_cycle_matrix(4)
        mu = eg.GridMeasure.uniform(g)
        with pytest.raises(eg.UsageError):
            eg.ergodic_components(u, mu, tol=1.0)


class TestOpenPositivity:
    def test_uniform_true_for_all_block_sizes(self):
        g = eg.Grid(eg.CIRCLE, 64)
        mu = eg.GridMeasure.uniform(g)
        for size in (1, 2, 8, 32):
            assert eg.open_positivity_check(mu, size).ok

    def test_point_mass_false(self):
        g = eg.Grid(eg.CIRCLE, 16)
        report = eg.open_positivity_check(eg.GridMeasure.point_mass(g, 3), 1)
        assert not report.ok
        assert report.largest_null_run == 15

    def test_two_sink_null_run_surrounds_sources(self, two_sink_ifs):
        g = eg.Grid(eg.CIRCLE, 128)
        res = eg.stationary_measure(two_sink_ifs, g)
        report = eg.open_positivity_check(res.measure, 4, pos_tol=1e-12)
        assert not report.ok
        assert report.largest_null_run >= 8
        # the reported null run must contain a repeller (near x=0 or x=1/2)
        run_boxes = {(report.null_run_start + j) % 128 for j in range(report.largest_null_run)}
        source_boxes = {int(0.0 * 128), int(0.5 * 128)}
        assert run_boxes & source_boxes

    def test_torus_block_positivity(self):
        g = eg.Grid(eg.TORUS2, 16)
        w = np.zeros(g.n_boxes)
        w[g.box_index(np.array([[0.03, 0.03]]))[0]] = 1.0
        mu = eg.GridMeasure(g, w)
        assert not eg.open_positivity_check(mu, 2).ok
        assert eg.open_positivity_check(eg.GridMeasure.uniform(g), 1).ok


class TestOpenModZero:
    def test_all_boxes(self):
        g = eg.Grid(eg.CIRCLE, 128)
        rep = eg.component_is_open_mod0(eg.BoxSet.all_boxes(g), g)
        assert rep.boundary_fraction == 0.0
        assert rep.grid_open

    def test_single_box(self):
        g = eg.Grid(eg.CIRCLE, 128)
        rep = eg.component_is_open_mod0(eg.BoxSet.from_indices(g, [5]), g)
        assert rep.boundary_fraction == 1.0
        assert not rep.grid_open

    def test_half_circle(self):
        g = eg.Grid(eg.CIRCLE, 128)
        rep = eg.component_is_open_mod0(eg.BoxSet.from_interval(g, 0.0, 0.5), g)
        assert rep.boundary_boxes == 2
        assert rep.boundary_fraction == pytest.approx(2 / 64)
        assert rep.grid_open
