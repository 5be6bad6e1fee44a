import math

import numpy as np
import pytest

import ergolab as eg
from conftest import PHI

ALL_FAMILIES = [
    eg.Rotation(PHI),
    eg.Rotation(0.25),
    eg.CircleDiffeo(0.1, 0.5),
    eg.CircleDiffeo(0.001, 0.2 * math.pi, freq=2),
    eg.ToralTranslation(PHI, math.sqrt(2) - 1),
    eg.ToralAutomorphism(((2, 1), (1, 1))),
    eg.ToralAutomorphism(((1, 1), (1, 0))),  # det = -1
]


def _random_points(m, count, seed):
    rng = np.random.default_rng(seed)
    return rng.random(count) if m.space.dim == 1 else rng.random((count, 2))


class TestApply:
    def test_rotation_exact(self):
        assert eg.apply(eg.Rotation(0.25), 0.5) == 0.75

    def test_identity_diffeo(self):
        assert eg.apply(eg.CircleDiffeo(0.0, 0.0), 0.3) == 0.3

    def test_cat_map_point(self):
        out = eg.apply(eg.ToralAutomorphism(((2, 1), (1, 1))), (0.5, 0.5))
        assert np.allclose(out, [0.5, 0.0])

    def test_wrap_consistency(self):
        # evaluating at x and at x+1 on the lift gives the same circle point
        for m in ALL_FAMILIES[:4]:
            xs = np.linspace(0.0, 0.99, 7)
            d = m.space.distance(eg.apply(m, xs), eg.apply(m, xs + 1.0))
            assert np.max(d) <= 1e-12

    def test_domain_mismatch_rejected(self):
        with pytest.raises(eg.UsageError):
            eg.apply(eg.Rotation(0.1), np.zeros((3, 2)))
        with pytest.raises(eg.UsageError):
            eg.apply(eg.ToralTranslation(0.1, 0.2), 0.5)


class TestInverse:
    def test_rotation(self):
        assert eg.apply_inverse(eg.Rotation(0.25), 0.75) == 0.5

    def test_automorphism_integer_inverse(self):
        m = eg.ToralAutomorphism(((2, 1), (1, 1)))
        assert np.allclose(m.inverse_array, [[1, -1], [-1, 2]])
        assert np.allclose(eg.apply_inverse(m, (0.5, 0.0)), (0.5, 0.5))

    def test_circle_diffeo_round_trip(self):
        f = eg.CircleDiffeo(0.1, 0.5)
        y = eg.apply(f, 0.2)
        assert abs(eg.apply_inverse(f, y) - 0.2) <= 1e-10

    @pytest.mark.parametrize("m", ALL_FAMILIES, ids=lambda m: repr(m))
    def test_round_trip_1000_points(self, m):
        pts = _random_points(m, 1000, seed=42)
        back = m.invert_points(m.apply_points(pts))
        assert np.max(m.space.distance(back, pts)) <= 1e-10

    def test_inverse_direction_flips(self):
        m = eg.Rotation(0.3)
        inv = m.inverse()
        assert inv.direction == eg.INVERSE
        assert inv.inverse().direction == eg.FORWARD
        xs = np.linspace(0, 1, 11, endpoint=False)
        assert np.allclose(inv.apply_points(xs), m.invert_points(xs))


class TestDerivative:
    def test_rotation_is_one(self):
        assert eg.map_derivative(eg.Rotation(0.37), 0.123) == 1.0

    def test_circle_diffeo_at_zero(self):
        assert eg.map_derivative(eg.CircleDiffeo(0.1, 0.5), 0.0) == pytest.approx(1.5, abs=1e-14)

    def test_automorphism_unit_det(self):
        assert eg.map_derivative(eg.ToralAutomorphism(((2, 1), (1, 1))), (0.2, 0.7)) == 1.0

    def test_volume_preserving_families(self):
        for m in ALL_FAMILIES:
            if not m.volume_preserving:
                continue
            pts = _random_points(m, 1000, seed=7)
            assert np.max(np.abs(m.jacobian(pts) - 1.0)) <= 1e-12


class TestInvariants:
    def test_circle_diffeo_requires_contraction_bound(self):
        with pytest.raises(eg.UsageError):
            eg.CircleDiffeo(0.0, 1.0)

    def test_automorphism_requires_unimodular(self):
        with pytest.raises(eg.UsageError):
            eg.ToralAutomorphism(((2, 0), (0, 1)))

    def test_probability_vector(self):
        with pytest.raises(eg.UsageError):
            eg.IFSystem(eg.CIRCLE, (eg.Rotation(0.1), eg.Rotation(0.2)), (0.6, 0.6))
        with pytest.raises(eg.UsageError):
            eg.IFSystem(eg.CIRCLE, (eg.Rotation(0.1), eg.Rotation(0.2)), (0.0, 1.0))

    def test_single_map_system_allowed(self):
        ifs = eg.uniform_ifs([eg.Rotation(0.1)])
        assert ifs.k == 1 and ifs.probs == (1.0,)

    def test_ifs_space_mismatch(self):
        with pytest.raises(eg.UsageError):
            eg.IFSystem(eg.CIRCLE, (eg.ToralTranslation(0.1, 0.2),), (1.0,))


class TestWords:
    def test_single_letter(self, two_rotations):
        w = eg.Word.forward([1])
        x = 0.77
        assert eg.apply_word(w, two_rotations, x) == eg.apply(two_rotations.maps[0], x)

    def test_cancellation(self, two_rotations):
        w = eg.Word((( 1, eg.FORWARD), (1, eg.INVERSE)))
        assert abs(eg.apply_word(w, two_rotations, 0.3) - 0.3) <= 1e-10

    def test_two_rotations_compose(self):
        ifs = eg.uniform_ifs([eg.Rotation(0.1), eg.Rotation(0.2)])
        w = eg.Word.forward([1, 2])
        assert eg.apply_word(w, ifs, 0.0) == pytest.approx(0.3, abs=1e-15)

    def test_associativity(self, two_rotations):
        rng = np.random.default_rng(3)
        for _ in range(20):
            u = eg.Word.forward(rng.integers(1, 3, size=3))
            v = eg.Word.forward(rng.integers(1, 3, size=4))
            x = float(rng.random())
            via_concat = eg.apply_word(u.concat(v), two_rotations, x)
            via_steps = eg.apply_word(v, two_rotations, eg.apply_word(u, two_rotations, x))
            assert two_rotations.space.distance(via_concat, via_steps) <= 1e-10

    def test_empty_word_rejected(self):
        with pytest.raises(eg.UsageError):
            eg.Word(())


class TestPhaseSpace:
    def test_circle_distance(self):
        assert eg.CIRCLE.distance(0.1, 0.9) == pytest.approx(0.2)
        assert eg.CIRCLE.distance(0.25, 0.5) == pytest.approx(0.25)

    def test_torus_distance(self):
        d = eg.TORUS2.distance((0.05, 0.05), (0.95, 0.95))
        assert d == pytest.approx(math.sqrt(2) * 0.1)
