"""Flux, circulation, gauge, and potential checks against independent oracles."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from magquant.fields import (
    MagneticField,
    SegmentRule,
    SimplexRule,
    VectorPotential,
    GaugeFunction,
    circulation,
    flux_triangle,
    gauge_transform,
    pentagon_flux,
    poincare_potential,
    verify_potential,
)
from magquant.presets import make_potential, parse_field

B_CONST = MagneticField.constant(1.0)
B_SIN = MagneticField.from_b12(lambda p: np.sin(np.asarray(p)[..., 0]), name="sin")

coord = st.floats(-3.0, 3.0)
point2 = st.tuples(coord, coord).map(np.array)


def flux_subdivision_oracle(B, a, b, c, tol=1e-10):
    """Adaptive 4-way midpoint subdivision with a fixed modest rule per cell."""
    rule = SimplexRule.gauss(4)

    def total(tris):
        return sum(flux_triangle(B, *t, rule=rule) for t in tris)

    tris = [(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float))]
    prev = total(tris)
    for _ in range(12):
        new = []
        for (p, q, r) in tris:
            mpq, mpr, mqr = 0.5 * (p + q), 0.5 * (p + r), 0.5 * (q + r)
            new += [(p, mpq, mpr), (mpq, q, mqr), (mpr, mqr, r), (mpq, mqr, mpr)]
        tris = new
        cur = total(tris)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise AssertionError("subdivision oracle did not converge")


class TestFluxTriangle:
    def test_constant_field_signed_area(self):
        assert flux_triangle(B_CONST, (0, 0), (1, 0), (0, 1)) == pytest.approx(0.5, abs=1e-14)

    def test_degenerate_triangle(self):
        a = np.array([0.7, -0.3])
        assert flux_triangle(B_SIN, a, a, (1.0, 2.0)) == pytest.approx(0.0, abs=1e-14)

    def test_sinusoidal_vs_subdivision_oracle(self):
        # frozen via the adaptive-subdivision oracle (agrees to 1e-10 on refinement)
        got = flux_triangle(B_SIN, (0, 0), (1, 0), (0, 1))
        oracle = flux_subdivision_oracle(B_SIN, (0, 0), (1, 0), (0, 1))
        assert got == pytest.approx(oracle, abs=1e-9)
        assert got == pytest.approx(0.15852901519210325, abs=1e-9)

    @given(a=point2, b=point2, c=point2)
    def test_orientation_antisymmetry(self, a, b, c):
        f1 = flux_triangle(B_SIN, a, b, c)
        f2 = flux_triangle(B_SIN, a, c, b)
        assert abs(f1 + f2) < 1e-9

    def test_midpoint_additivity(self):
        a, b, c = np.array([0.2, -1.0]), np.array([2.0, 0.5]), np.array([-0.5, 1.5])
        mab, mac, mbc = 0.5 * (a + b), 0.5 * (a + c), 0.5 * (b + c)
        whole = flux_triangle(B_SIN, a, b, c)
        parts = (flux_triangle(B_SIN, a, mab, mac) + flux_triangle(B_SIN, mab, b, mbc)
                 + flux_triangle(B_SIN, mac, mbc, c) + flux_triangle(B_SIN, mab, mbc, mac))
        assert whole == pytest.approx(parts, abs=1e-9)

    def test_batched_evaluation(self, rng):
        a, b, c = (rng.uniform(-2, 2, size=(11, 2)) for _ in range(3))
        batch = flux_triangle(B_SIN, a, b, c, rule=SimplexRule.gauss(16))
        singles = [flux_triangle(B_SIN, a[i], b[i], c[i], rule=SimplexRule.gauss(16))
                   for i in range(11)]
        assert np.allclose(batch, singles, atol=1e-14)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            flux_triangle(B_CONST, (0, 0, 0), (1, 0, 0), (0, 1, 0))


class TestCirculation:
    def test_zero_potential(self):
        A = VectorPotential.zero(2)
        assert circulation(A, (0.3, 1.0), (-2.0, 0.5)) == 0.0

    def test_symmetric_gauge_through_origin(self):
        A = make_potential("constant:1", "symmetric", 2)
        assert circulation(A, (0, 0), (1, 1)) == pytest.approx(0.0, abs=1e-14)

    def test_symmetric_gauge_exact_value(self):
        # (1/2) int_0^1 ((1-t) + t) dt = 1/2
        A = make_potential("constant:1", "symmetric", 2)
        assert circulation(A, (1, 0), (0, 1)) == pytest.approx(0.5, abs=1e-14)

    @given(x=point2, y=point2)
    def test_antisymmetry(self, x, y):
        A = make_potential("sinusoidal:1,0.5", "landau", 2)
        assert abs(circulation(A, x, y) + circulation(A, y, x)) < 1e-10

    def test_gauge_difference_is_boundary_term(self):
        A = make_potential("constant:1", "symmetric", 2)
        rho = GaugeFunction(2, lambda p: np.sin(np.asarray(p)[..., 0]) * np.asarray(p)[..., 1],
                            [lambda p: np.cos(np.asarray(p)[..., 0]) * np.asarray(p)[..., 1],
                             lambda p: np.sin(np.asarray(p)[..., 0])])
        A2 = gauge_transform(A, rho)
        x, y = np.array([0.4, -1.2]), np.array([-0.8, 0.9])
        got = circulation(A2, x, y) - circulation(A, x, y)
        want = rho.rho(y[None, :])[0] - rho.rho(x[None, :])[0]
        assert got == pytest.approx(want, abs=1e-12)


class TestPentagon:
    def test_unit_square_fan(self):
        val = pentagon_flux(B_CONST, (0, 0), (1, 0), (1, 1), (0, 1), (0, 0))
        assert val == pytest.approx(1.0, abs=1e-14)

    def test_zero_field(self):
        B0 = MagneticField.zero(2)
        pts = np.random.default_rng(3).uniform(-1, 1, size=(5, 2))
        assert pentagon_flux(B0, *pts) == 0.0

    def test_fan_is_sum_of_triangles(self, rng):
        pts = rng.uniform(-2, 2, size=(5, 2))
        want = (flux_triangle(B_SIN, pts[0], pts[1], pts[2])
                + flux_triangle(B_SIN, pts[0], pts[2], pts[3])
                + flux_triangle(B_SIN, pts[0], pts[3], pts[4]))
        assert pentagon_flux(B_SIN, *pts) == pytest.approx(want, abs=1e-12)


class TestGaugeAndPotential:
    def test_gauge_transform_identity(self):
        A = make_potential("constant:1", "symmetric", 2)
        rho0 = GaugeFunction(2, lambda p: np.zeros(np.asarray(p).shape[:-1]),
                             [lambda p: np.zeros(np.asarray(p).shape[:-1])] * 2)
        A2 = gauge_transform(A, rho0)
        pts = np.random.default_rng(0).uniform(-2, 2, (7, 2))
        assert np.allclose(A2.eval(pts), A.eval(pts))

    def test_gradient_of_linear(self):
        A = VectorPotential.zero(2)
        rho = GaugeFunction(2, lambda p: np.asarray(p)[..., 0],
                            [lambda p: np.ones(np.asarray(p).shape[:-1]),
                             lambda p: np.zeros(np.asarray(p).shape[:-1])])
        A2 = gauge_transform(A, rho)
        pts = np.random.default_rng(1).uniform(-2, 2, (5, 2))
        assert np.allclose(A2.eval(pts), np.stack([np.ones(5), np.zeros(5)], axis=-1))

    def test_symmetric_plus_xy_half_is_landau(self):
        A = make_potential("constant:1", "symmetric", 2)
        rho = GaugeFunction(2, lambda p: 0.5 * np.asarray(p)[..., 0] * np.asarray(p)[..., 1],
                            [lambda p: 0.5 * np.asarray(p)[..., 1],
                             lambda p: 0.5 * np.asarray(p)[..., 0]])
        A2 = gauge_transform(A, rho)
        L = make_potential("constant:1", "landau", 2)
        pts = np.random.default_rng(2).uniform(-3, 3, (9, 2))
        assert np.allclose(A2.eval(pts), L.eval(pts), atol=1e-14)

    def test_poincare_constant_closed_form(self):
        b = 1.7
        A = poincare_potential(MagneticField.constant(b))
        pts = np.random.default_rng(4).uniform(-2, 2, (9, 2))
        want = np.stack([-0.5 * b * pts[:, 1], 0.5 * b * pts[:, 0]], axis=-1)
        assert np.allclose(A.eval(pts), want, atol=1e-12)

    def test_poincare_zero_field(self):
        A = poincare_potential(MagneticField.zero(2))
        pts = np.random.default_rng(5).uniform(-2, 2, (4, 2))
        assert np.allclose(A.eval(pts), 0.0)

    def test_poincare_cosine_verifies(self, rng):
        B = MagneticField.from_b12(lambda p: np.cos(np.asarray(p)[..., 0]), name="cos")
        A = poincare_potential(B)
        probes = rng.uniform(-2.5, 2.5, (16, 2))
        report = verify_potential(A, B, probes, tol=1e-6)
        assert report.passed and report.max_defect < 1e-8

    def test_verify_exact_pair(self, rng):
        A = make_potential("constant:1", "symmetric", 2)
        report = verify_potential(A, B_CONST, rng.uniform(-3, 3, (12, 2)), tol=1e-9)
        assert report.passed

    def test_verify_zero_potential_fails(self, rng):
        report = verify_potential(VectorPotential.zero(2), B_CONST,
                                  rng.uniform(-3, 3, (12, 2)), tol=1e-6)
        assert not report.passed
        assert report.max_defect == pytest.approx(1.0, rel=1e-6)


class TestStokesConsistency:
    """Circulation cycle equals the triangle flux (sign pinned by the route identity)."""

    @pytest.mark.parametrize("field,gauge", [("constant:1", "symmetric"),
                                             ("sinusoidal:1,0.5", "landau")])
    def test_cycle_equals_flux(self, field, gauge, rng):
        B = parse_field(field, 2)
        A = make_potential(field, gauge, 2)
        for _ in range(5):
            x, z, y = rng.uniform(-2, 2, (3, 2))
            cyc = circulation(A, x, z) + circulation(A, z, y) + circulation(A, y, x)
            assert cyc == pytest.approx(flux_triangle(B, z, y, x), abs=1e-9)


class TestConstruction:
    def test_one_dimensional_field_must_vanish(self):
        with pytest.raises(ValueError):
            MagneticField.from_b12(lambda p: np.ones(np.asarray(p).shape[:-1]), dim=1)

    def test_antisymmetry_violation_rejected(self):
        ones = lambda p: np.ones(np.asarray(p).shape[:-1])
        with pytest.raises(ValueError):
            MagneticField(2, [[None, ones], [ones, None]])

    def test_rule_weight_sums(self):
        assert SegmentRule.gauss(16).weights.sum() == pytest.approx(1.0)
        r = SimplexRule.gauss(8)
        assert r.weights.sum() == pytest.approx(0.5)

    def test_gauge_gradient_consistency_enforced(self):
        with pytest.raises(ValueError):
            GaugeFunction(2, lambda p: np.asarray(p)[..., 0] ** 2,
                          [lambda p: np.ones(np.asarray(p).shape[:-1]),
                           lambda p: np.zeros(np.asarray(p).shape[:-1])])
