"""Magnetic Weyl quantization: kernel/symbol operator assembly, twisted products, norms.

Operators are dense matrices of kernel values K(x_i, x_j) acting with the grid
quadrature weight baked in:  (K u)(x_i) = sum_j K_ij u(x_j) h^N.  The operator
norm is the top singular value of the weighted action, so matrix and continuum
norms align.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._warnings import QuadratureWarning
from .fields import MagneticField, SegmentRule, SimplexRule, VectorPotential, _circulation_fixed, _flux_fixed
from .grids import BoxGrid, PhaseGrid
from .phasespace import (
    KernelFunction,
    Symbol,
    inverse_partial_fourier,
    partial_fourier,
    spectral_derivative,
)

__all__ = [
    "OperatorMatrix",
    "CcrReport",
    "operator_norm",
    "rep_operator",
    "weyl_op",
    "magnetic_momentum",
    "ccr_defect",
    "twisted_conv",
    "moyal_product",
    "circulation_matrix",
    "flux_rule_for",
]

DENSE_NORM_LIMIT = 4096
_PAIR_CHUNK = 1 << 21


@dataclass
class OperatorMatrix:
    """Dense operator on the discretized state space with quadrature weight h^N."""

    entries: np.ndarray
    grid: BoxGrid

    def __post_init__(self):
        D = self.grid.size
        if self.entries.shape != (D, D):
            raise ValueError(f"entries must be {D}x{D} for this grid")
        if not np.all(np.isfinite(self.entries.view(float))):
            raise ValueError("operator entries must be finite")

    @property
    def weight(self) -> float:
        return self.grid.weight

    @property
    def action(self) -> np.ndarray:
        """Matrix of the operator on plain coefficient vectors: entries * h^N."""
        return self.entries * self.weight

    @classmethod
    def identity(cls, grid: BoxGrid) -> "OperatorMatrix":
        return cls(np.eye(grid.size, dtype=complex) / grid.weight, grid)

    @classmethod
    def from_action(cls, action: np.ndarray, grid: BoxGrid) -> "OperatorMatrix":
        return cls(np.asarray(action, dtype=complex) / grid.weight, grid)

    @classmethod
    def diagonal(cls, values: np.ndarray, grid: BoxGrid) -> "OperatorMatrix":
        return cls.from_action(np.diag(np.asarray(values, dtype=complex)), grid)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.entries @ np.asarray(u, dtype=complex) * self.weight

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T.copy(), self.grid)

    def compose(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.grid != self.grid:
            raise ValueError("grid mismatch in composition")
        return OperatorMatrix(self.entries @ other.entries * self.weight, self.grid)

    def trace(self) -> complex:
        return complex(np.trace(self.entries) * self.weight)

    def __add__(self, other):
        return OperatorMatrix(self.entries + other.entries, self.grid)

    def __sub__(self, other):
        return OperatorMatrix(self.entries - other.entries, self.grid)

    def __mul__(self, c):
        return OperatorMatrix(self.entries * c, self.grid)

    __rmul__ = __mul__

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        """<u, K v> in the weighted L2 inner product."""
        return complex(np.vdot(u, self.apply(v)) * self.weight)


def operator_norm(K: OperatorMatrix, dense_limit: int = DENSE_NORM_LIMIT,
                  tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest singular value of the weighted action matrix."""
    act = K.action
    D = act.shape[0]
    if D <= dense_limit:
        return float(np.linalg.svd(act, compute_uv=False)[0])
    # power iteration on act^H act with a deterministic start vector
    v = np.ones(D, dtype=complex) + 1e-3 * np.arange(D)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iter):
        w = act.conj().T @ (act @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
        if abs(lam - lam_prev) <= tol * max(lam, 1.0):
            return float(np.sqrt(lam))
        lam_prev = lam
    warnings.warn("power iteration for the operator norm did not converge; "
                  "falling back to dense SVD", QuadratureWarning)
    return float(np.linalg.svd(act, compute_uv=False)[0])


def circulation_matrix(A: VectorPotential, start: np.ndarray, end: np.ndarray,
                       rule: SegmentRule | None = None) -> np.ndarray:
    """Circulations of A along segments start[i] -> end[j]; shape (len(start), len(end))."""
    rule = rule or SegmentRule.gauss(32)
    if A.name == "zero":
        return np.zeros((start.shape[0], end.shape[0]))
    out = np.empty((start.shape[0], end.shape[0]))
    step = max(1, _PAIR_CHUNK // (end.shape[0] * rule.nodes.size))
    for i in range(0, start.shape[0], step):
        xs = start[i:i + step, None, :]
        ys = end[None, :, :]
        out[i:i + step] = _circulation_fixed(A, xs, ys, rule)
    return out


def rep_operator(A: VectorPotential, hbar: float, F: KernelFunction, grid: BoxGrid,
                 segment_rule: SegmentRule | None = None) -> OperatorMatrix:
    """Operator with kernel hbar^-N exp(-i/hbar circ[x->y]) F((x+y)/2, (y-x)/hbar)."""
    if not (0.0 < hbar <= 1.0):
        raise ValueError("hbar must lie in (0, 1]")
    pts = grid.points
    D = grid.size
    N = grid.dim
    circ = circulation_matrix(A, pts, pts, segment_rule)
    entries = np.empty((D, D), dtype=complex)
    step = max(1, _PAIR_CHUNK // D)
    for i in range(0, D, step):
        mid = 0.5 * (pts[i:i + step, None, :] + pts[None, :, :])
        wv = (pts[None, :, :] - pts[i:i + step, None, :]) / hbar
        entries[i:i + step] = F.eval(mid, wv)
    entries *= hbar ** (-N) * np.exp(-1j / hbar * circ)
    return OperatorMatrix(entries, grid)


def weyl_op(A: VectorPotential, hbar: float, f: Symbol, grid: PhaseGrid,
            segment_rule: SegmentRule | None = None) -> OperatorMatrix:
    """Weyl quantization of a phase-space symbol via its partial-Fourier kernel."""
    if grid.hbar != hbar:
        grid = grid.with_hbar(hbar)
    F = inverse_partial_fourier(f, grid)
    return rep_operator(A, hbar, F, grid.box, segment_rule)


def _derivative_matrix_1d(M: int, half_width: float) -> np.ndarray:
    k = np.fft.fftfreq(M, d=1.0) * M
    k[M // 2] = 0.0
    col = np.fft.ifft(1j * (np.pi / half_width) * k)
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    return col[idx]


def magnetic_momentum(A: VectorPotential, hbar: float, j: int, grid: BoxGrid) -> OperatorMatrix:
    """Matrix of -i hbar d_j - A_j(x) with the spectral (FFT) derivative."""
    if not 0 <= j < grid.dim:
        raise ValueError("axis out of range")
    M = grid.points_per_axis
    d1 = _derivative_matrix_1d(M, grid.half_width)
    act = np.array([[1.0 + 0j]])
    for ax in range(grid.dim):
        act = np.kron(act, d1 if ax == j else np.eye(M, dtype=complex))
    act *= -1j * hbar
    act -= np.diag(np.asarray(A.components[j](grid.points), dtype=complex))
    return OperatorMatrix.from_action(act, grid)


def _apply_momentum(A_vals: np.ndarray, hbar: float, j: int, grid: BoxGrid, u: np.ndarray) -> np.ndarray:
    t = u.reshape(grid.tensor_shape)
    du = spectral_derivative(t, j, grid.points_per_axis, np.pi / grid.half_width).ravel()
    return -1j * hbar * du - A_vals[:, j] * u


@dataclass(frozen=True)
class CcrReport:
    """Commutation-relation defects measured on an interior Gaussian batch."""

    defect_position: float  # max_jk || i[Pi_j, Q_k] u - hbar delta_jk u ||
    defect_momentum: float  # max_jk || i[Pi_j, Pi_k] u + hbar B_jk(x) u ||
    n_states: int


def ccr_defect(A: VectorPotential, B: MagneticField, hbar: float, grid: BoxGrid,
               n_states: int = 8, seed: int = 7, width: float = 0.7) -> CcrReport:
    """Check the magnetic commutation relations on interior-supported states (matrix-free)."""
    rng = np.random.default_rng(seed)
    pts = grid.points
    N = grid.dim
    A_vals = A.eval(pts)
    Pi = lambda j, u: _apply_momentum(A_vals, hbar, j, grid, u)
    worst_q = 0.0
    worst_p = 0.0
    for _ in range(n_states):
        c = rng.uniform(-0.25, 0.25, size=N) * grid.half_width
        mom = rng.uniform(-1.0, 1.0, size=N)
        u = np.exp(-np.sum((pts - c) ** 2, axis=1) / (2 * width ** 2)).astype(complex)
        u *= np.exp(1j * pts @ mom)
        u /= np.sqrt(np.sum(np.abs(u) ** 2) * grid.weight)
        for j in range(N):
            pj_u = Pi(j, u)
            for k in range(N):
                qk = pts[:, k]
                res = 1j * (Pi(j, qk * u) - qk * pj_u) - (hbar if j == k else 0.0) * u
                worst_q = max(worst_q, float(np.sqrt(np.sum(np.abs(res) ** 2) * grid.weight)))
            for k in range(N):
                res = 1j * (Pi(j, Pi(k, u)) - Pi(k, Pi(j, u))) + hbar * B.component(j, k, pts) * u
                worst_p = max(worst_p, float(np.sqrt(np.sum(np.abs(res) ** 2) * grid.weight)))
    return CcrReport(defect_position=worst_q, defect_momentum=worst_p, n_states=n_states)


def flux_rule_for(B: MagneticField, triangles: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
                  target: float = 1e-12) -> SimplexRule:
    """Smallest tensor Gauss rule that reproduces the next order on probe triangles."""
    if B.is_zero:
        return SimplexRule.gauss(2)
    if triangles is None:
        rng = np.random.default_rng(11)
        a, b, c = (rng.uniform(-4, 4, size=(32, B.dim)) for _ in range(3))
    else:
        a, b, c = triangles
    for order in (2, 4, 8, 16):
        lo = _flux_fixed(B, a, b, c, SimplexRule.gauss(order))
        hi = _flux_fixed(B, a, b, c, SimplexRule.gauss(2 * order))
        if np.max(np.abs(lo - hi)) <= target:
            return SimplexRule.gauss(order)
    return SimplexRule.gauss(16)


def twisted_conv(B: MagneticField, hbar: float, F: KernelFunction, G: KernelFunction,
                 grid: PhaseGrid, z_cut: float | None = None,
                 flux_rule: SimplexRule | None = None,
                 check_resolution: bool = False) -> KernelFunction:
    """Magnetic twisted composition of two kernels (z-integral on the w-grid).

    (F  *B  G)(x, y) = sum_z dz^N  exp(-i/hbar flux<x - h y/2, x - h y/2 + h z, x + h y/2>)
                       F(x - h (y - z)/2, z) G(x + h z/2, y - z),     h = hbar.
    """
    if grid.hbar != hbar:
        grid = grid.with_hbar(hbar)
    N = grid.dim
    znodes = grid.w_points
    if z_cut is not None:
        znodes = znodes[np.max(np.abs(znodes), axis=1) <= z_cut]
    zweight = grid.w_spacing ** N
    rule = flux_rule or flux_rule_for(B, _probe_triangles(B, hbar, grid))

    def closure(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        base = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        xb = np.broadcast_to(x, base + (N,)).reshape(-1, N)
        yb = np.broadcast_to(y, base + (N,)).reshape(-1, N)
        out = np.zeros(xb.shape[0], dtype=complex)
        step = max(1, _PAIR_CHUNK // max(znodes.shape[0], 1))
        for i in range(0, xb.shape[0], step):
            xs = xb[i:i + step, None, :]
            ys = yb[i:i + step, None, :]
            zs = znodes[None, :, :]
            fv = F.eval(xs - 0.5 * hbar * (ys - zs), np.broadcast_to(zs, (xs.shape[0],) + znodes.shape))
            gv = G.eval(xs + 0.5 * hbar * zs, ys - zs)
            amp = fv * gv
            if not B.is_zero:
                v0 = xs - 0.5 * hbar * ys
                phase = _flux_fixed(B, v0, v0 + hbar * zs, xs + 0.5 * hbar * ys, rule)
                amp = amp * np.exp(-1j / hbar * phase)
            out[i:i + step] = zweight * amp.sum(axis=1)
        return out.reshape(base)

    if check_resolution:
        _warn_if_underresolved(closure, F, G, B, hbar, grid)
    return KernelFunction.from_callable(N, closure)


def _probe_triangles(B: MagneticField, hbar: float, grid: PhaseGrid):
    if B.is_zero:
        return None
    pts = grid.box.points
    wpts = grid.w_points
    rng = np.random.default_rng(5)
    xi = pts[rng.integers(0, pts.shape[0], size=48)]
    yi = wpts[rng.integers(0, wpts.shape[0], size=48)]
    zi = wpts[rng.integers(0, wpts.shape[0], size=48)]
    v0 = xi - 0.5 * hbar * yi
    return v0, v0 + hbar * zi, xi + 0.5 * hbar * yi


def _warn_if_underresolved(closure, F, G, B, hbar, grid):
    # refine the z-grid by 2 on a small probe set and compare
    N = grid.dim
    rng = np.random.default_rng(3)
    px = grid.box.points[rng.integers(0, grid.box.size, size=16)]
    py = grid.w_points[rng.integers(0, grid.box.size, size=16)]
    coarse = closure(px, py)
    fine_axis = (grid.box.axis[:, None] + np.array([0.0, 0.5 * grid.box.spacing])).ravel() / hbar
    grids = np.meshgrid(*([fine_axis] * N), indexing="ij")
    zf = np.stack([g.ravel() for g in grids], axis=-1)
    zw = (0.5 * grid.w_spacing) ** N
    rule = flux_rule_for(B, _probe_triangles(B, hbar, grid))
    out = np.zeros(px.shape[0], dtype=complex)
    for i in range(px.shape[0]):
        xs = px[i][None, :]
        ys = py[i][None, :]
        fv = F.eval(xs - 0.5 * hbar * (ys - zf), zf)
        gv = G.eval(xs + 0.5 * hbar * zf, ys - zf)
        amp = fv * gv
        if not B.is_zero:
            v0 = xs - 0.5 * hbar * ys
            phase = _flux_fixed(B, np.broadcast_to(v0, zf.shape), v0 + hbar * zf,
                                np.broadcast_to(xs + 0.5 * hbar * ys, zf.shape), rule)
            amp = amp * np.exp(-1j / hbar * phase)
        out[i] = zw * amp.sum()
    drift = np.max(np.abs(out - coarse))
    if drift > 1e-6:
        warnings.warn(f"twisted convolution z-grid underresolved (refinement drift {drift:.2e})",
                      QuadratureWarning)


def moyal_product(B: MagneticField, hbar: float, f: Symbol, g: Symbol, grid: PhaseGrid,
                  **conv_kwargs) -> Symbol:
    """Magnetic composition of symbols, computed through the kernel-side product."""
    if grid.hbar != hbar:
        grid = grid.with_hbar(hbar)
    Fk = inverse_partial_fourier(f, grid)
    Gk = inverse_partial_fourier(g, grid)
    conv = twisted_conv(B, hbar, Fk, Gk, grid, **conv_kwargs)
    return partial_fourier(conv, grid)
