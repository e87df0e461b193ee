"""Magnetic coherent states, Husimi functions, and the Berezin quantization.

The coherent frame is the workhorse: column Z = (z, zeta) holds the grid
samples of

    exp(i/hbar (x - z/2) . zeta) exp(i/hbar circ[z -> x]) hbar^{-N/4} v((x - z)/sqrt(hbar))

with the envelope displaced periodically on the box (the wrap keeps the
discrete resolution of identity exact up to fiducial normalization; see the
decisions ledger).  Because the momentum axis is the exact FFT dual of the
position grid, sums over the momentum index collapse to circulant tables and
every Berezin operator is assembled in O(D^3) for a D-point position grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from ._warnings import BoundaryWarning, QuadratureWarning
from .fields import (
    GaugeFunction,
    MagneticField,
    SegmentRule,
    SimplexRule,
    VectorPotential,
    _flux_fixed,
    gauge_transform,
)
from .grids import BoxGrid, PhaseGrid
from .phasespace import KernelFunction, Symbol, inverse_partial_fourier, partial_fourier, spectral_derivative
from .weyl import OperatorMatrix, circulation_matrix, flux_rule_for, operator_norm

__all__ = [
    "FiducialVector",
    "CoherentState",
    "CoherentFrame",
    "coherent_vector",
    "overlap_kernel",
    "husimi",
    "berezin_op",
    "berezin_delta",
    "berezin_p_expectation",
    "sigma_map",
    "ss_symbol",
    "gauge_covariance_check",
]

_Z_CHUNK = 1 << 21


@dataclass
class FiducialVector:
    """Unit-norm Schwartz-class profile used to build the coherent family."""

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    grad: Sequence[Callable[[np.ndarray], np.ndarray]] | None = None
    sigma: float = 1.0
    parity: str | None = None
    name: str = "custom"

    @classmethod
    def gaussian(cls, dim: int) -> "FiducialVector":
        norm = np.pi ** (-dim / 4.0)

        def v(x):
            x = np.asarray(x, dtype=float)
            return norm * np.exp(-0.5 * np.sum(x ** 2, axis=-1))

        def make_grad(j):
            return lambda x: -np.asarray(x)[..., j] * v(x)

        return cls(dim, v, [make_grad(j) for j in range(dim)], sigma=1.0, parity="even", name="gaussian")

    @classmethod
    def odd_perturbed(cls, dim: int, eps: float = 0.3) -> "FiducialVector":
        """Gaussian with an odd admixture; exercises the non-even fiducial branch."""
        norm = np.pi ** (-dim / 4.0) / np.sqrt(1.0 + eps ** 2 / 2.0)

        def v(x):
            x = np.asarray(x, dtype=float)
            return norm * (1.0 + eps * x[..., 0]) * np.exp(-0.5 * np.sum(x ** 2, axis=-1))

        def make_grad(j):
            def g(x, _j=j):
                x = np.asarray(x, dtype=float)
                e = np.exp(-0.5 * np.sum(x ** 2, axis=-1))
                lead = eps * e if _j == 0 else 0.0
                return norm * (lead - x[..., _j] * (1.0 + eps * x[..., 0]) * e)

            return g

        return cls(dim, v, [make_grad(j) for j in range(dim)], sigma=1.0, parity=None,
                   name=f"odd_perturbed:{eps}")

    def scaled(self, hbar: float, deltas: np.ndarray) -> np.ndarray:
        """v_hbar at displacement arrays: hbar^{-N/4} v(delta / sqrt(hbar))."""
        return hbar ** (-self.dim / 4.0) * np.asarray(
            self.func(np.asarray(deltas) / np.sqrt(hbar)), dtype=complex)

    def grad_values(self, pts: np.ndarray, fd_step: float = 1e-6) -> np.ndarray:
        """Gradient components at points, exact if supplied, else central differences."""
        pts = np.asarray(pts, dtype=float)
        if self.grad is not None:
            return np.stack([np.asarray(g(pts), dtype=complex) for g in self.grad], axis=-1)
        out = np.empty(pts.shape, dtype=complex)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = fd_step
            out[..., j] = (np.asarray(self.func(pts + e), dtype=complex)
                           - np.asarray(self.func(pts - e), dtype=complex)) / (2 * fd_step)
        return out


@dataclass(frozen=True)
class CoherentState:
    """Grid samples of one coherent vector plus boundary diagnostics."""

    values: np.ndarray
    center: np.ndarray
    boundary_warning: bool
    leakage: float


def _boundary_margin(v: FiducialVector, hbar: float) -> float:
    return 5.0 * np.sqrt(hbar) * v.sigma


def coherent_vector(A: VectorPotential, v: FiducialVector, hbar: float, Z,
                    grid: BoxGrid, rule: SegmentRule | None = None) -> CoherentState:
    """Sample one magnetic coherent vector centered at the phase point Z."""
    if not (0.0 < hbar <= 1.0):
        raise ValueError("hbar must lie in (0, 1]")
    Z = np.asarray(Z, dtype=float)
    N = grid.dim
    z, zeta = Z[:N], Z[N:]
    pts = grid.points
    env = v.scaled(hbar, grid.wrap(pts - z))
    circ = circulation_matrix(A, z[None, :], pts, rule)[0]
    phase = (pts - 0.5 * z) @ zeta / hbar + circ / hbar
    vals = np.exp(1j * phase) * env
    margin = _boundary_margin(v, hbar)
    warn = bool(np.any(np.abs(z) > grid.half_width - margin))
    if warn:
        warnings.warn("coherent-state center is within 5 sqrt(hbar) sigma of the box boundary",
                      BoundaryWarning)
    mask = np.any(np.abs(pts) > 0.9 * grid.half_width, axis=-1)
    leak = float(np.sum(np.abs(vals[mask]) ** 2) * grid.weight)
    return CoherentState(values=vals, center=Z, boundary_warning=warn, leakage=leak)


def overlap_kernel(A: VectorPotential, v: FiducialVector, hbar: float, Y, Z,
                   grid: BoxGrid) -> complex:
    """Discrete reproducing kernel <v(Y), v(Z)> with weight h^N."""
    cy = coherent_vector(A, v, hbar, Y, grid)
    cz = coherent_vector(A, v, hbar, Z, grid)
    return complex(np.vdot(cy.values, cz.values) * grid.weight)


class CoherentFrame:
    """All coherent vectors on a phase grid, stored in factorized form.

    Column (z, zeta) is D_zeta c_z where c_z collects the gauge phase and the
    wrapped envelope; momentum sums are evaluated as circulant tables rather
    than by materializing the (D x D^2) frame matrix.
    """

    def __init__(self, A: VectorPotential, v: FiducialVector, hbar: float, grid: PhaseGrid,
                 rule: SegmentRule | None = None):
        if grid.hbar != hbar:
            grid = grid.with_hbar(hbar)
        self.A = A
        self.v = v
        self.hbar = float(hbar)
        self.grid = grid
        pts = grid.box.points
        disp = grid.box.wrap(pts[None, :, :] - pts[:, None, :])  # [z, x]
        env = v.scaled(hbar, disp)
        circ = circulation_matrix(A, pts, pts, rule)
        self.momentumless = np.exp(1j / hbar * circ) * env  # c_z[x], shape (D, D)
        mask = np.any(np.abs(pts) > 0.9 * grid.box.half_width, axis=-1)
        self.leakage = np.sum(np.abs(env[:, mask]) ** 2, axis=1) * grid.box.weight
        self.column_norms = np.sqrt(np.sum(np.abs(env) ** 2, axis=1) * grid.box.weight)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def _shift_index(self) -> np.ndarray:
        """(D, D) gather table: flattened per-axis (ix - iy) mod M."""
        M = self.grid.box.points_per_axis
        N = self.dim
        idx_axes = np.unravel_index(np.arange(self.grid.box.size), self.grid.box.tensor_shape)
        flat = np.zeros((self.grid.box.size, self.grid.box.size), dtype=np.int64)
        for a in range(N):
            ia = idx_axes[a]
            flat = flat * M + (ia[:, None] - ia[None, :]) % M
        return flat

    def column(self, Z) -> np.ndarray:
        """Samples of the coherent vector at an arbitrary phase point of this grid."""
        Z = np.asarray(Z, dtype=float)
        N = self.dim
        z, zeta = Z[:N], Z[N:]
        pts = self.grid.box.points
        zi = self._position_index(z)
        phase = (pts - 0.5 * z) @ zeta / self.hbar
        return np.exp(1j * phase) * self.momentumless[zi]

    def _position_index(self, z: np.ndarray) -> int:
        box = self.grid.box
        idx = np.rint((z + box.half_width) / box.spacing).astype(int)
        if np.max(np.abs(idx * box.spacing - box.half_width - z)) > 1e-9 * box.spacing:
            raise ValueError("phase point position must lie on the grid")
        flat = 0
        for d in range(self.dim):
            flat = flat * box.points_per_axis + idx[d]
        return int(flat)

    def matrix(self, max_entries: int = 1 << 28) -> np.ndarray:
        """Explicit frame matrix, columns in position-major phase order; memory-guarded."""
        D = self.grid.box.size
        if D * self.grid.size > max_entries:
            raise ValueError("explicit frame matrix would be too large; use the factorized API")
        pts = self.grid.box.points
        mom = self.grid.momentum_points
        cols = np.empty((D, self.grid.size), dtype=complex)
        for zi in range(D):
            z = pts[zi]
            phase = ((pts[:, None, :] - 0.5 * z) * mom[None, :, :]).sum(-1) / self.hbar
            cols[:, zi * mom.shape[0]:(zi + 1) * mom.shape[0]] = (
                np.exp(1j * phase) * self.momentumless[zi][:, None])
        return cols

    def _momentum_tables(self, f_vals: np.ndarray) -> np.ndarray:
        """t_z[d] = sum_zeta f(z, zeta) exp(i/hbar d h . zeta) as circulant tables."""
        N = self.dim
        M = self.grid.box.points_per_axis
        D = self.grid.box.size
        g = f_vals.reshape((D,) + (M,) * N)
        axes = tuple(range(1, N + 1))
        g = np.fft.ifftshift(g, axes=axes)
        t = (M ** N) * np.fft.ifftn(g, axes=axes)
        return t.reshape(D, D)

    def berezin(self, f_vals: np.ndarray) -> OperatorMatrix:
        """Berezin operator for symbol values sampled on the phase grid.

        Equals V diag(w f) V* for the explicit frame matrix V; evaluated as a
        position-indexed sum of Hadamard products with circulant momentum
        tables.
        """
        D = self.grid.box.size
        f_vals = np.asarray(f_vals, dtype=complex).reshape(D, D)
        t = self._momentum_tables(f_vals)
        idx = self._shift_index
        c = self.momentumless
        entries = np.zeros((D, D), dtype=complex)
        for zi in range(D):
            entries += (c[zi][:, None] * np.conj(c[zi])[None, :]) * t[zi].ravel()[idx]
        entries *= self.grid.frame_weight
        return OperatorMatrix(entries, self.grid.box)

    def analysis(self, u: np.ndarray) -> np.ndarray:
        """All overlaps <v(Z), u> h^N, shape (D_pos, D_mom); FFT over the momentum index."""
        N = self.dim
        M = self.grid.box.points_per_axis
        D = self.grid.box.size
        box = self.grid.box
        g = (np.conj(self.momentumless) * u[None, :]).reshape((D,) + (M,) * N)
        axes = tuple(range(1, N + 1))
        hat = np.fft.fftshift(np.fft.fft(g, axis=axes[0]) if N == 1 else np.fft.fftn(g, axes=axes), axes=axes)
        k = np.arange(M) - M // 2
        sign = np.where(k % 2 == 0, 1.0, -1.0)
        for a in range(N):
            shape = [1] * (N + 1)
            shape[a + 1] = M
            hat *= sign.reshape(shape)
        hat = hat.reshape(D, D) * box.weight
        zphase = np.exp(0.5j / self.hbar * (box.points @ self.grid.momentum_points.T))
        return hat * zphase

    def synthesis(self, phi: np.ndarray) -> np.ndarray:
        """sum_Z w phi(Z) v(Z); adjoint of analysis with respect to the frame weights."""
        N = self.dim
        M = self.grid.box.points_per_axis
        D = self.grid.box.size
        box = self.grid.box
        phi = np.asarray(phi, dtype=complex).reshape(D, D)
        zphase = np.exp(-0.5j / self.hbar * (box.points @ self.grid.momentum_points.T))
        g = phi * zphase
        k = np.arange(M) - M // 2
        sign = np.where(k % 2 == 0, 1.0, -1.0)
        gt = g.reshape((D,) + (M,) * N)
        for a in range(N):
            shape = [1] * (N + 1)
            shape[a + 1] = M
            gt = gt * sign.reshape(shape)
        axes = tuple(range(1, N + 1))
        gt = np.fft.ifftshift(gt, axes=axes)
        tables = (M ** N) * np.fft.ifftn(gt, axes=axes)
        tables = tables.reshape(D, D)
        return self.grid.frame_weight * np.sum(self.momentumless * tables, axis=0)

    def resolution_defect(self) -> float:
        """Operator-norm distance of sum_Z w |v(Z)><v(Z)| from the identity."""
        R = self.berezin(np.ones(self.grid.size))
        return operator_norm(R - OperatorMatrix.identity(self.grid.box))


def _symbol_values(f, grid: PhaseGrid) -> np.ndarray:
    if isinstance(f, Symbol):
        return f.on_grid(grid).reshape(grid.box.size, grid.box.size)
    if callable(f):
        return Symbol.from_callable(grid.dim, f).on_grid(grid).reshape(grid.box.size, grid.box.size)
    vals = np.asarray(f, dtype=complex)
    return vals.reshape(grid.box.size, grid.box.size)


def berezin_op(A: VectorPotential, v: FiducialVector, hbar: float, f, grid: PhaseGrid,
               frame: CoherentFrame | None = None) -> OperatorMatrix:
    """Positive quantization: average of coherent projections weighted by the symbol."""
    frame = frame or CoherentFrame(A, v, hbar, grid)
    return frame.berezin(_symbol_values(f, frame.grid))


def berezin_delta(A: VectorPotential, v: FiducialVector, hbar: float, Z,
                  grid: BoxGrid) -> OperatorMatrix:
    """Quantization of a phase-space point mass: (2 pi hbar)^-N rank-one projection."""
    state = coherent_vector(A, v, hbar, Z, grid)
    pref = (2.0 * np.pi * hbar) ** (-grid.dim)
    entries = pref * np.outer(state.values, np.conj(state.values))
    return OperatorMatrix(entries, grid)


def husimi(A: VectorPotential, v: FiducialVector, hbar: float, u: np.ndarray, grid: PhaseGrid,
            frame: CoherentFrame | None = None) -> np.ndarray:
    """Phase-space density (2 pi hbar)^-N |<v(Y), u>|^2 on the phase grid (D_pos, D_mom)."""
    frame = frame or CoherentFrame(A, v, hbar, grid)
    u = np.asarray(u, dtype=complex)
    box = frame.grid.box
    edge = np.any(np.abs(box.points) > 0.9 * box.half_width, axis=-1)
    edge_mass = float(np.sum(np.abs(u[edge]) ** 2) * box.weight)
    if edge_mass > 1e-8:
        warnings.warn(f"state carries mass {edge_mass:.2e} near the box boundary; "
                      "Husimi mass may leak", BoundaryWarning)
    phi = frame.analysis(u)
    return (2.0 * np.pi * hbar) ** (-frame.dim) * np.abs(phi) ** 2


def berezin_expectation(frame: CoherentFrame, f, u: np.ndarray) -> complex:
    """<u, B(f) u> evaluated through the Husimi pairing (no operator assembly)."""
    vals = _symbol_values(f, frame.grid)
    phi = frame.analysis(np.asarray(u, dtype=complex)).reshape(vals.shape)
    return complex(frame.grid.frame_weight * np.sum(vals * np.abs(phi) ** 2))


def berezin_p_expectation(A: VectorPotential, v: FiducialVector, hbar: float,
                          u: np.ndarray, j: int, grid: BoxGrid,
                          rule: SegmentRule | None = None, fd_step: float = 1e-5) -> complex:
    """Momentum-symbol expectation via its three-term closed form.

    <u, B(p_j) u> = int int d_xj{circ[x -> x - sqrt(hbar) y]} |u(x)|^2 |v(y)|^2
                    + i sqrt(hbar) ||u||^2 int (d_j v) conj(v)
                    + i hbar int conj(d_j u) u
    """
    u = np.asarray(u, dtype=complex)
    pts = grid.points
    N = grid.dim
    vvals = np.asarray(v.func(pts), dtype=complex)
    vmass = np.abs(vvals) ** 2 * grid.weight
    umass = np.abs(u) ** 2 * grid.weight
    unorm2 = float(np.sum(umass))

    ej = np.zeros(N)
    ej[j] = fd_step
    sq = np.sqrt(hbar)

    def circ_block(shift):
        starts = (pts + shift)[:, None, :] + np.zeros_like(pts)[None, :, :]
        ends = starts - sq * pts[None, :, :]
        return circulation_matrix_pairs(A, starts, ends, rule)

    circ_plus = circ_block(ej)
    circ_minus = circ_block(-ej)
    dcirc = (circ_plus - circ_minus) / (2 * fd_step)
    term1 = complex(np.einsum("x,xy,y->", umass, dcirc, vmass))

    gradv = v.grad_values(pts)[:, j]
    term2 = 1j * sq * unorm2 * complex(np.sum(gradv * np.conj(vvals)) * grid.weight)

    du = spectral_derivative(u.reshape(grid.tensor_shape), j, grid.points_per_axis,
                             np.pi / grid.half_width).ravel()
    term3 = 1j * hbar * complex(np.sum(np.conj(du) * u) * grid.weight)
    return term1 + term2 + term3


def circulation_matrix_pairs(A: VectorPotential, starts: np.ndarray, ends: np.ndarray,
                             rule: SegmentRule | None = None) -> np.ndarray:
    """Circulations for explicit (i, j)-indexed start/end arrays of shape (I, J, N)."""
    from .fields import _circulation_fixed

    rule = rule or SegmentRule.gauss(32)
    if A.name == "zero":
        return np.zeros(starts.shape[:-1])
    out = np.empty(starts.shape[:-1])
    step = max(1, _Z_CHUNK // (starts.shape[1] * rule.nodes.size))
    for i in range(0, starts.shape[0], step):
        out[i:i + step] = _circulation_fixed(A, starts[i:i + step], ends[i:i + step], rule)
    return out


def _default_sigma_nodes(v: FiducialVector, grid: PhaseGrid) -> tuple[np.ndarray, float]:
    spacing = 0.4 * v.sigma
    reach = 7.0 * v.sigma
    n = int(np.ceil(2 * reach / spacing))
    ax = -reach + (np.arange(n) + 0.5) * (2 * reach / n)
    grids = np.meshgrid(*([ax] * grid.dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    return nodes, (2 * reach / n) ** grid.dim


def sigma_map(B: MagneticField, v: FiducialVector, hbar: float, F: KernelFunction,
              grid: PhaseGrid, z_nodes: np.ndarray | None = None, z_weight: float | None = None,
              flux_rule: SimplexRule | None = None) -> KernelFunction:
    """Kernel-side map expressing a Berezin operator as a twisted-calculus kernel.

    [S F](x, y) = int dz F(x - sqrt(hbar) z, y) conj(v(z + sqrt(hbar) y / 2))
                  v(z - sqrt(hbar) y / 2)
                  exp(-i/hbar flux<x - sqrt(hbar) z, x + hbar y/2, x - hbar y/2>)
    """
    if grid.hbar != hbar:
        grid = grid.with_hbar(hbar)
    N = grid.dim
    if z_nodes is None:
        z_nodes, z_weight = _default_sigma_nodes(v, grid)
    elif z_weight is None:
        raise ValueError("explicit z_nodes require an explicit z_weight")
    sq = np.sqrt(hbar)
    rule = flux_rule
    if rule is None and not B.is_zero:
        rng = np.random.default_rng(13)
        xs = grid.box.points[rng.integers(0, grid.box.size, size=48)]
        ys = grid.w_points[rng.integers(0, grid.box.size, size=48)]
        zs = z_nodes[rng.integers(0, z_nodes.shape[0], size=48)]
        rule = flux_rule_for(B, (xs - sq * zs, xs + 0.5 * hbar * ys, xs - 0.5 * hbar * ys))

    def closure(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        base = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        xb = np.broadcast_to(x, base + (N,)).reshape(-1, N)
        yb = np.broadcast_to(y, base + (N,)).reshape(-1, N)
        out = np.zeros(xb.shape[0], dtype=complex)
        step = max(1, _Z_CHUNK // max(z_nodes.shape[0], 1))
        for i in range(0, xb.shape[0], step):
            xs = xb[i:i + step, None, :]
            ys = yb[i:i + step, None, :]
            zs = z_nodes[None, :, :]
            amp = F.eval(xs - sq * zs, np.broadcast_to(ys, (xs.shape[0],) + z_nodes.shape))
            amp = amp * np.conj(v.func(zs + 0.5 * sq * ys)) * np.asarray(v.func(zs - 0.5 * sq * ys))
            if not B.is_zero:
                phase = _flux_fixed(B, xs - sq * zs,
                                    np.broadcast_to(xs + 0.5 * hbar * ys, (xs.shape[0],) + z_nodes.shape),
                                    np.broadcast_to(xs - 0.5 * hbar * ys, (xs.shape[0],) + z_nodes.shape),
                                    rule)
                amp = amp * np.exp(-1j / hbar * phase)
            out[i:i + step] = z_weight * amp.sum(axis=1)
        return out.reshape(base)

    return KernelFunction.from_callable(N, closure)


def ss_symbol(B: MagneticField, v: FiducialVector, hbar: float, f: Symbol,
              grid: PhaseGrid, **sigma_kwargs) -> Symbol:
    """Symbol-side Berezin-to-Weyl map; depends on the field B only."""
    if grid.hbar != hbar:
        grid = grid.with_hbar(hbar)
    F = inverse_partial_fourier(f, grid)
    SF = sigma_map(B, v, hbar, F, grid, **sigma_kwargs)
    return partial_fourier(SF, grid)


def gauge_covariance_check(A: VectorPotential, rho: GaugeFunction, v: FiducialVector,
                           hbar: float, f, grid: PhaseGrid,
                           frame: CoherentFrame | None = None,
                           frame_prime: CoherentFrame | None = None) -> float:
    """Norm defect || B^{A + d rho}(f) - U_rho B^A(f) U_rho^* || with U_rho = diag(e^{i rho/hbar})."""
    A2 = gauge_transform(A, rho)
    op1 = berezin_op(A, v, hbar, f, grid, frame=frame)
    op2 = berezin_op(A2, v, hbar, f, grid, frame=frame_prime)
    phase = np.exp(1j / hbar * np.asarray(rho.rho(grid.box.points), dtype=float))
    conjugated = OperatorMatrix(op1.entries * np.outer(phase, np.conj(phase)), grid.box)
    return operator_norm(op2 - conjugated)
