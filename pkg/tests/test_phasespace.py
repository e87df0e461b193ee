"""Partial Fourier transforms, mixed norms, Poisson bracket, symplectic form."""

import numpy as np
import pytest
import warnings
from hypothesis import given, strategies as st

from magquant.fields import MagneticField
from magquant.grids import BoxGrid, PhaseGrid
from magquant.phasespace import (
    KernelFunction,
    Symbol,
    inverse_partial_fourier,
    norm_1_inf,
    partial_fourier,
    poisson_bracket,
    symplectic_form,
)
from magquant._warnings import AliasingWarning


@pytest.fixture(scope="module")
def grid1():
    return PhaseGrid(BoxGrid(1, 8.0, 64), 1.0)


def gaussian_kernel(dim, sx=1.0, sw=1.0, cx=0.0):
    def F(x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        return np.exp(-np.sum((x - cx) ** 2, -1) / (2 * sx ** 2)
                      - np.sum(w ** 2, -1) / (2 * sw ** 2))
    return KernelFunction.from_callable(dim, F)


class TestPartialFourier:
    def test_impulse_transforms_to_constant(self, grid1):
        M = grid1.box.points_per_axis
        samples = np.zeros((M, M), dtype=complex)
        samples[:, M // 2] = 1.0 / grid1.w_spacing  # discrete delta at w=0
        F = KernelFunction.from_samples(samples, grid1)
        f = partial_fourier(F, grid1)
        assert np.allclose(f.samples, 1.0, atol=1e-12)

    def test_roundtrip_identity(self, grid1, rng):
        M = grid1.box.points_per_axis
        samples = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
        F = KernelFunction.from_samples(samples, grid1)
        back = inverse_partial_fourier(partial_fourier(F, grid1), grid1)
        assert np.max(np.abs(back.on_grid(grid1) - samples)) < 1e-12

    def test_gaussian_closed_form(self, grid1):
        F = KernelFunction.from_callable(1, lambda x, w: np.exp(
            -0.5 * np.sum(np.asarray(w, float) ** 2, -1)) + 0.0 * np.sum(np.asarray(x), -1))
        f = partial_fourier(F, grid1)
        eta = grid1.momentum_axis
        want = np.sqrt(2 * np.pi) * np.exp(-0.5 * eta ** 2)
        assert np.max(np.abs(f.samples - want[None, :])) < 1e-12

    def test_gaussian_dense_quadrature_oracle(self, grid1):
        # independent Riemann-sum oracle of the defining integral
        F = KernelFunction.from_callable(1, lambda x, w: np.exp(
            -0.5 * np.sum(np.asarray(w, float) ** 2, -1)) + 0.0 * np.sum(np.asarray(x), -1))
        w = np.linspace(-20, 20, 4001)
        eta = grid1.momentum_axis[::8]
        oracle = np.trapezoid(np.exp(-0.5 * w[None, :] ** 2 + 1j * w[None, :] * eta[:, None]),
                              w, axis=1)
        f = partial_fourier(F, grid1)
        assert np.max(np.abs(f.samples[32, ::8] - oracle)) < 1e-10

    def test_closure_matches_samples_on_grid(self, grid1):
        F = gaussian_kernel(1, sx=0.9, sw=1.3, cx=0.4)
        f = partial_fourier(F, grid1)
        x = grid1.box.points[5:9]
        eta = grid1.momentum_points[17:21]
        direct = f.eval(x, eta)
        sampled = f.samples[5:9, 17:21].diagonal()
        assert np.max(np.abs(direct - sampled)) < 1e-12

    def test_inverse_closure_consistent_off_grid(self, grid1):
        # limited by the kernel's w-box tail (exp(-14) at sw = 1.5, box 8)
        F = gaussian_kernel(1, sx=0.9, sw=1.5)
        f = partial_fourier(F, grid1)
        back = inverse_partial_fourier(f, grid1)
        x = np.array([[0.13], [1.07]])
        w = np.array([[0.49], [-2.33]])
        assert np.max(np.abs(back.eval(x, w) - F.eval(x, w))) < 1e-8


class TestNorm1Inf:
    def test_zero(self, grid1):
        F = KernelFunction.from_samples(np.zeros((64, 64)), grid1)
        assert norm_1_inf(F, grid1) == 0.0

    def test_separable_indicator(self):
        # F(x, w) = g(x) 1_[0,1](w), sup|g| = 2 -> integral 2.0
        grid = PhaseGrid(BoxGrid(1, 8.0, 256), 1.0)
        def F(x, w):
            x = np.asarray(x, dtype=float)[..., 0]
            w = np.asarray(w, dtype=float)[..., 0]
            g = 2.0 * np.exp(-x ** 2)
            ind = ((w >= 0) & (w < 1)).astype(float)
            return g * ind
        val = norm_1_inf(KernelFunction.from_callable(1, F), grid)
        assert val == pytest.approx(2.0, rel=1e-12)

    def test_grid_refinement_agreement(self):
        F = gaussian_kernel(1, sx=0.8, sw=1.1)
        coarse = norm_1_inf(F, PhaseGrid(BoxGrid(1, 8.0, 64), 1.0))
        fine = norm_1_inf(F, PhaseGrid(BoxGrid(1, 8.0, 256), 1.0))
        assert coarse == pytest.approx(fine, rel=0.01)


def coordinate_symbol(dim, axis, kind):
    if kind == "q":
        return Symbol.from_callable(dim, lambda x, xi: np.asarray(x, float)[..., axis]
                                    + 0.0 * np.sum(np.asarray(xi), -1))
    return Symbol.from_callable(dim, lambda x, xi: np.asarray(xi, float)[..., axis]
                                + 0.0 * np.sum(np.asarray(x), -1))


class TestPoissonBracket:
    def test_canonical_pair(self):
        grid = PhaseGrid(BoxGrid(2, 6.0, 12), 0.25)
        B = MagneticField.constant(1.0)
        pb = poisson_bracket(B, coordinate_symbol(2, 0, "q"), coordinate_symbol(2, 0, "p"), grid)
        assert np.max(np.abs(pb.samples - 1.0)) < 1e-12

    def test_momentum_pair_gives_field(self):
        grid = PhaseGrid(BoxGrid(2, 6.0, 12), 0.25)
        B = MagneticField.from_b12(lambda p: 1.0 + 0.5 * np.sin(np.asarray(p)[..., 0]), name="sin")
        pb = poisson_bracket(B, coordinate_symbol(2, 0, "p"), coordinate_symbol(2, 1, "p"), grid)
        pos = grid.box.points.reshape(grid.box.tensor_shape + (2,))
        want = B.component(0, 1, pos).reshape(grid.box.tensor_shape + (1, 1))
        assert np.max(np.abs(pb.samples - want)) < 1e-12

    def test_matches_finite_difference_oracle(self):
        # momentum box at hbar = 1/2 covers 9.5 sigma of the symbols, so the
        # periodization ringing of the spectral derivative sits far below 1e-6
        grid = PhaseGrid(BoxGrid(1, 6.0, 64), 0.5)
        B = MagneticField.zero(1)
        f = Symbol.from_callable(1, lambda x, xi: np.exp(
            -((np.asarray(x, float)[..., 0] - 0.3) ** 2
              + 1.3 * (np.asarray(xi, float)[..., 0] + 0.1) ** 2) / 2))
        g = Symbol.from_callable(1, lambda x, xi: np.exp(
            -(0.8 * (np.asarray(x, float)[..., 0] + 0.4) ** 2
              + 0.6 * np.asarray(xi, float)[..., 0] ** 2) / 2))
        pb = poisson_bracket(B, f, g, grid).samples.reshape(64, 64)

        h = 1e-3
        e = np.array([h])
        X = grid.box.points[:, None, :]
        XI = grid.momentum_points[None, :, :]

        def dx(fun, x, xi):
            return (-fun(x + 2 * e, xi) + 8 * fun(x + e, xi)
                    - 8 * fun(x - e, xi) + fun(x - 2 * e, xi)) / (12 * h)

        def dxi(fun, x, xi):
            return (-fun(x, xi + 2 * e) + 8 * fun(x, xi + e)
                    - 8 * fun(x, xi - e) + fun(x, xi - 2 * e)) / (12 * h)

        oracle = dx(f.func, X, XI) * dxi(g.func, X, XI) - dxi(f.func, X, XI) * dx(g.func, X, XI)
        # compare away from the momentum-box edge where the symbol is periodized
        inner = np.abs(grid.momentum_axis) < 0.75 * grid.momentum_axis.max()
        assert np.max(np.abs(pb[:, inner] - oracle[:, inner])) < 1e-6

    def test_antisymmetry_and_leibniz(self):
        grid = PhaseGrid(BoxGrid(1, 7.0, 64), 0.5)
        B = MagneticField.zero(1)
        f = Symbol.from_callable(1, lambda x, xi: np.exp(
            -(np.asarray(x, float)[..., 0] ** 2 + np.asarray(xi, float)[..., 0] ** 2) / 2))
        g = Symbol.from_callable(1, lambda x, xi: np.exp(
            -((np.asarray(x, float)[..., 0] - 0.5) ** 2
              + 0.7 * np.asarray(xi, float)[..., 0] ** 2) / 2.2))
        hsym = Symbol.from_callable(1, lambda x, xi: np.exp(
            -(0.9 * (np.asarray(x, float)[..., 0] + 0.3) ** 2
              + 1.1 * (np.asarray(xi, float)[..., 0] - 0.2) ** 2) / 2.4))
        pb_fg = poisson_bracket(B, f, g, grid).samples
        pb_gf = poisson_bracket(B, g, f, grid).samples
        assert np.max(np.abs(pb_fg + pb_gf)) < 1e-12

        gh = Symbol.from_samples(g.on_grid(grid) * hsym.on_grid(grid), grid)
        lhs = poisson_bracket(B, f, gh, grid).samples
        rhs = (poisson_bracket(B, f, g, grid).samples * hsym.on_grid(grid)
               + g.on_grid(grid) * poisson_bracket(B, f, hsym, grid).samples)
        assert np.max(np.abs(lhs - rhs)) < 1e-8

    def test_jacobi_identity_constant_field(self):
        grid = PhaseGrid(BoxGrid(2, 6.0, 16), 0.5)
        B = MagneticField.constant(1.0)
        rng = np.random.default_rng(7)

        def bump(c, s):
            return Symbol.from_callable(2, lambda x, xi, c=c, s=s: np.exp(
                -(np.sum((np.asarray(x, float) - c[:2]) ** 2, -1)
                  + np.sum((np.asarray(xi, float) - c[2:]) ** 2, -1)) / (2 * s ** 2)))

        f, g, h = (bump(rng.uniform(-0.4, 0.4, 4), rng.uniform(1.0, 1.3)) for _ in range(3))
        def pb(a, b):
            return Symbol.from_samples(poisson_bracket(B, a, b, grid).on_grid(grid), grid)
        total = (poisson_bracket(B, f, pb(g, h), grid).samples
                 + poisson_bracket(B, g, pb(h, f), grid).samples
                 + poisson_bracket(B, h, pb(f, g), grid).samples)
        assert np.max(np.abs(total)) < 1e-6

    def test_aliasing_warning_fires(self):
        grid = PhaseGrid(BoxGrid(1, 4.0, 16), 0.25)
        rough = Symbol.from_callable(1, lambda x, xi: np.cos(
            12.0 * np.asarray(x, float)[..., 0]) + 0.0 * np.sum(np.asarray(xi), -1))
        smooth = Symbol.from_callable(1, lambda x, xi: np.exp(
            -np.asarray(x, float)[..., 0] ** 2 - np.asarray(xi, float)[..., 0] ** 2))
        with pytest.warns(AliasingWarning):
            poisson_bracket(MagneticField.zero(1), rough, smooth, grid)


class TestSymplecticForm:
    def test_standard_block_explicit(self):
        # Y = (y, 0), Z = (0, zeta): sigma = z.eta - y.zeta = -y.zeta
        B0 = MagneticField.zero(1)
        assert symplectic_form(B0, [0, 0], [2.0, 0.0], [0.0, 3.0]) == pytest.approx(-6.0)

    def test_magnetic_term(self):
        B = MagneticField.constant(1.0)
        X = np.array([0.3, -0.7, 0.0, 0.0])
        Y = np.array([1.0, 0.0, 0.0, 0.0])
        Z = np.array([0.0, 1.0, 0.0, 0.0])
        assert symplectic_form(B, X, Y, Z) == pytest.approx(1.0)

    @given(st.integers(0, 2 ** 30))
    def test_antisymmetry_and_bilinearity(self, seed):
        rng = np.random.default_rng(seed)
        B = MagneticField.from_b12(lambda p: 1.0 + 0.5 * np.sin(np.asarray(p)[..., 0]), name="sin")
        X, Y, Z = (rng.uniform(-2, 2, 4) for _ in range(3))
        a, b = rng.uniform(-2, 2, 2)
        assert symplectic_form(B, X, Y, Y) == pytest.approx(0.0, abs=1e-12)
        assert symplectic_form(B, X, Y, Z) == pytest.approx(-symplectic_form(B, X, Z, Y), abs=1e-12)
        lhs = symplectic_form(B, X, a * Y + b * Z, Z)
        rhs = a * symplectic_form(B, X, Y, Z) + b * symplectic_form(B, X, Z, Z)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            symplectic_form(MagneticField.zero(2), [0, 0], [1, 0], [0, 1])
