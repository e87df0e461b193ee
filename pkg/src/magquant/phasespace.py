"""Symbols, kernels, partial Fourier transforms, norms, and the magnetic Poisson bracket.

Conventions (pinned by the operator homomorphism tests, see weyl.py):

    (F_fwd F)(x, eta) = int dw  exp(+i w . eta) F(x, w)
    (F_inv f)(x, w)   = (2 pi)^-N int d(eta) exp(-i w . eta) f(x, eta)

On a PhaseGrid the w-axis is the exact FFT dual of the momentum axis, so both
maps are realized by FFTs and invert each other to machine precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._warnings import AliasingWarning
from .fields import MagneticField
from .grids import PhaseGrid

__all__ = [
    "Symbol",
    "KernelFunction",
    "partial_fourier",
    "inverse_partial_fourier",
    "norm_1_inf",
    "poisson_bracket",
    "symplectic_form",
    "spectral_derivative",
]

_CHUNK = 1 << 18


@dataclass
class Symbol:
    """Function on phase space, as an (x, xi) closure and/or cached grid samples.

    Samples are stored as a tensor of shape (M,)*N + (M,)*N with position axes
    first (ascending coordinates) and momentum axes last.
    """

    dim: int
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    samples: np.ndarray | None = None
    grid: PhaseGrid | None = field(default=None, repr=False)

    @classmethod
    def from_callable(cls, dim: int, func) -> "Symbol":
        return cls(dim=dim, func=func)

    @classmethod
    def from_samples(cls, samples: np.ndarray, grid: PhaseGrid, func=None) -> "Symbol":
        return cls(dim=grid.dim, func=func, samples=np.asarray(samples, dtype=complex), grid=grid)

    def eval(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        if self.func is None:
            raise ValueError("symbol has no closure; only grid samples are available")
        return np.asarray(self.func(np.asarray(x, dtype=float), np.asarray(xi, dtype=float)), dtype=complex)

    def on_grid(self, grid: PhaseGrid) -> np.ndarray:
        if self.samples is not None and self.grid == grid:
            return self.samples
        if self.func is None:
            raise ValueError("symbol has no closure and no samples on this grid")
        D = grid.box.size
        pos = grid.box.points
        mom = grid.momentum_points
        vals = self.eval(pos[:, None, :], mom[None, :, :]).reshape(grid.box.tensor_shape * 2)
        if self.grid is None or self.grid == grid:
            self.samples = vals
            self.grid = grid
        return vals

    def conj(self) -> "Symbol":
        f = None
        if self.func is not None:
            f = lambda x, xi, _f=self.func: np.conj(_f(x, xi))
        s = None if self.samples is None else np.conj(self.samples)
        return Symbol(self.dim, f, s, self.grid)


@dataclass
class KernelFunction:
    """Function on X x X, first slot position, second slot the kernel "w" variable.

    Samples live on (position grid) x (w grid) with the same tensor layout as
    Symbol.
    """

    dim: int
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    samples: np.ndarray | None = None
    grid: PhaseGrid | None = field(default=None, repr=False)

    @classmethod
    def from_callable(cls, dim: int, func) -> "KernelFunction":
        return cls(dim=dim, func=func)

    @classmethod
    def from_samples(cls, samples: np.ndarray, grid: PhaseGrid, func=None) -> "KernelFunction":
        return cls(dim=grid.dim, func=func, samples=np.asarray(samples, dtype=complex), grid=grid)

    def eval(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self.func is None:
            raise ValueError("kernel has no closure; only grid samples are available")
        return np.asarray(self.func(np.asarray(x, dtype=float), np.asarray(w, dtype=float)), dtype=complex)

    def on_grid(self, grid: PhaseGrid) -> np.ndarray:
        if self.samples is not None and self.grid == grid:
            return self.samples
        if self.func is None:
            raise ValueError("kernel has no closure and no samples on this grid")
        pos = grid.box.points
        wpts = grid.w_points
        vals = self.eval(pos[:, None, :], wpts[None, :, :]).reshape(grid.box.tensor_shape * 2)
        if self.grid is None or self.grid == grid:
            self.samples = vals
            self.grid = grid
        return vals

    def conj_reflect(self) -> "KernelFunction":
        """(x, w) -> conj(F(x, -w)); the kernel-side involution."""
        f = None
        if self.func is not None:
            f = lambda x, w, _f=self.func: np.conj(_f(x, -np.asarray(w)))
        return KernelFunction(self.dim, f)


def _axis_signs(M: int) -> np.ndarray:
    k = np.arange(M) - M // 2
    return np.where(k % 2 == 0, 1.0, -1.0)


def _fwd_axis(vals: np.ndarray, axis: int, M: int, dw: float) -> np.ndarray:
    """One-axis kernel->symbol transform: dw * (-1)^k~ * M * ifft, reordered ascending."""
    g = M * np.fft.ifft(vals, axis=axis)
    g = np.fft.fftshift(g, axes=axis)
    shape = [1] * vals.ndim
    shape[axis] = M
    return dw * g * _axis_signs(M).reshape(shape)


def _inv_axis(vals: np.ndarray, axis: int, M: int, deta: float) -> np.ndarray:
    """One-axis symbol->kernel transform: (2 pi)^-1 * deta * fft of sign-corrected input."""
    shape = [1] * vals.ndim
    shape[axis] = M
    g = vals * _axis_signs(M).reshape(shape)
    g = np.fft.ifftshift(g, axes=axis)
    return (deta / (2.0 * np.pi)) * np.fft.fft(g, axis=axis)


def partial_fourier(F: KernelFunction, grid: PhaseGrid) -> Symbol:
    """Transform the second slot of a kernel to momentum; exact FFT on the dual axes."""
    N = grid.dim
    M = grid.box.points_per_axis
    vals = F.on_grid(grid)
    out = vals
    for j in range(N):
        out = _fwd_axis(out, axis=N + j, M=M, dw=grid.w_spacing)
    func = None
    if F.func is not None:
        func = _symbol_closure_from_kernel(F, grid)
    return Symbol.from_samples(out, grid, func=func)


def inverse_partial_fourier(f: Symbol, grid: PhaseGrid) -> KernelFunction:
    """Inverse transform, momentum slot back to the kernel w variable."""
    N = grid.dim
    M = grid.box.points_per_axis
    vals = f.on_grid(grid)
    out = vals
    for j in range(N):
        out = _inv_axis(out, axis=N + j, M=M, deta=grid.momentum_spacing)
    return KernelFunction.from_samples(out, grid, func=_kernel_closure_from_symbol(f, grid))


def _symbol_closure_from_kernel(F: KernelFunction, grid: PhaseGrid):
    wpts = grid.w_points
    dwN = grid.w_spacing ** grid.dim

    def func(x, eta):
        x = np.asarray(x, dtype=float)
        eta = np.asarray(eta, dtype=float)
        base = np.broadcast_shapes(x.shape[:-1], eta.shape[:-1])
        xb = np.broadcast_to(x, base + (grid.dim,)).reshape(-1, grid.dim)
        eb = np.broadcast_to(eta, base + (grid.dim,)).reshape(-1, grid.dim)
        out = np.empty(xb.shape[0], dtype=complex)
        step = max(1, _CHUNK // max(wpts.shape[0], 1))
        for i in range(0, xb.shape[0], step):
            xs = xb[i:i + step]
            es = eb[i:i + step]
            fv = F.eval(xs[:, None, :], wpts[None, :, :])
            ph = np.exp(1j * (wpts[None, :, :] * es[:, None, :]).sum(-1))
            out[i:i + step] = dwN * (fv * ph).sum(axis=1)
        return out.reshape(base)

    return func


def _kernel_closure_from_symbol(f: Symbol, grid: PhaseGrid, refine: int = 2):
    # With a closure the momentum quadrature is refined (same box, spacing / refine),
    # which pushes the kernel's w-alias period from 2L/hbar to 2L*refine/hbar: the
    # operator corners across the box seam then see the true decayed kernel instead
    # of an aliased copy.  On the w-grid this agrees with the FFT samples up to the
    # symbol's momentum tail.
    if f.func is not None and refine > 1:
        M = grid.box.points_per_axis
        k = (np.arange(refine * M) - (refine * M) // 2) / refine
        axis = grid.momentum_spacing * k
        grids_ = np.meshgrid(*([axis] * grid.dim), indexing="ij")
        mom = np.stack([g.ravel() for g in grids_], axis=-1)
        detaN = (grid.momentum_spacing / refine) ** grid.dim
    else:
        mom = grid.momentum_points
        detaN = grid.momentum_spacing ** grid.dim
    pref = detaN / (2.0 * np.pi) ** grid.dim

    if f.func is not None:
        def func(x, w):
            x = np.asarray(x, dtype=float)
            w = np.asarray(w, dtype=float)
            base = np.broadcast_shapes(x.shape[:-1], w.shape[:-1])
            xb = np.broadcast_to(x, base + (grid.dim,)).reshape(-1, grid.dim)
            wb = np.broadcast_to(w, base + (grid.dim,)).reshape(-1, grid.dim)
            out = np.empty(xb.shape[0], dtype=complex)
            step = max(1, _CHUNK // max(mom.shape[0], 1))
            for i in range(0, xb.shape[0], step):
                fv = f.eval(xb[i:i + step, None, :], mom[None, :, :])
                ph = np.exp(-1j * (mom[None, :, :] * wb[i:i + step, None, :]).sum(-1))
                out[i:i + step] = pref * (fv * ph).sum(axis=1)
            return out.reshape(base)

        return func

    # samples-only symbols: closure valid at on-grid positions, arbitrary w
    vals = f.on_grid(grid).reshape(grid.box.size, grid.box.size)
    pos = grid.box.points

    def func(x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        base = np.broadcast_shapes(x.shape[:-1], w.shape[:-1])
        xb = np.broadcast_to(x, base + (grid.dim,)).reshape(-1, grid.dim)
        wb = np.broadcast_to(w, base + (grid.dim,)).reshape(-1, grid.dim)
        idx = np.rint((xb + grid.box.half_width) / grid.box.spacing).astype(int)
        if np.max(np.abs(idx * grid.box.spacing - grid.box.half_width - xb)) > 1e-9 * grid.box.spacing:
            raise ValueError("samples-only symbol: position arguments must lie on the grid")
        flat = np.zeros(xb.shape[0], dtype=int)
        for d in range(grid.dim):
            flat = flat * grid.box.points_per_axis + idx[:, d]
        ph = np.exp(-1j * wb @ mom.T)
        out = pref * (vals[flat, :] * ph).sum(axis=1)
        return out.reshape(base)

    return func


def norm_1_inf(F: KernelFunction, grid: PhaseGrid) -> float:
    """Mixed norm sum_w max_x |F(x, w)| * dw^N on the sampling grid."""
    N = grid.dim
    vals = np.abs(F.on_grid(grid))
    sup_x = vals.reshape(grid.box.size, grid.box.size).max(axis=0)
    return float(sup_x.sum() * grid.w_spacing ** N)


def spectral_derivative(vals: np.ndarray, axis: int, M: int, freq_scale: float) -> np.ndarray:
    """FFT derivative along one axis of uniformly sampled periodic data.

    ``freq_scale`` is the physical frequency per integer FFT mode (pi/L for
    position axes, w_spacing for momentum axes); the unpaired Nyquist mode is
    dropped.
    """
    k = np.fft.fftfreq(M, d=1.0) * M
    k[M // 2] = 0.0
    shape = [1] * vals.ndim
    shape[axis] = M
    hat = np.fft.fft(vals, axis=axis)
    hat *= (1j * freq_scale * k).reshape(shape)
    return np.fft.ifft(hat, axis=axis)


def _tail_fraction(vals: np.ndarray, axis: int, M: int) -> float:
    hat = np.abs(np.fft.fft(vals, axis=axis)) ** 2
    k = np.abs(np.fft.fftfreq(M, d=1.0) * M)
    band = k >= M // 2 - max(M // 8, 1)
    shape = [1] * vals.ndim
    shape[axis] = M
    total = hat.sum()
    if total == 0.0:
        return 0.0
    return float((hat * band.reshape(shape)).sum() / total)


def _seam_jump(arr: np.ndarray) -> float:
    return sum(float(np.max(np.abs(np.take(arr, -1, axis=a) - np.take(arr, 0, axis=a))))
               for a in range(arr.ndim))


def _affine_fit(samples: np.ndarray, grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """Split off the least-squares affine part when that improves periodizability.

    Coordinate-type symbols cannot be periodized (O(L) seam jump); their exact
    affine part is projected out and differentiated analytically.  Decaying
    symbols are left untouched: subtracting their small fitted slope would
    itself create a seam.  Returns (gradient coefficients, samples to FFT).
    """
    N = grid.dim
    M = grid.box.points_per_axis
    samples = np.asarray(samples, dtype=complex)
    axes_vals = [grid.box.axis] * N + [grid.momentum_axis] * N
    grads = np.empty(2 * N, dtype=complex)
    resid = samples - samples.mean()
    for a in range(2 * N):
        t = axes_vals[a] - axes_vals[a].mean()
        shape = [1] * (2 * N)
        shape[a] = M
        tt = t.reshape(shape)
        c = (resid * tt).sum() / ((t ** 2).sum() * M ** (2 * N - 1))
        grads[a] = c
        resid = resid - c * tt
    if _seam_jump(resid) < 0.5 * _seam_jump(samples):
        return grads, resid
    return np.zeros(2 * N, dtype=complex), samples


def poisson_bracket(B: MagneticField, f: Symbol, g: Symbol, grid: PhaseGrid) -> Symbol:
    """Magnetic Poisson bracket on grid samples, by spectral differentiation.

    {f, g} = sum_j (d_xj f d_xij g - d_xij f d_xj g)
             + sum_jk B_jk(x) d_xij f d_xik g

    The affine part of each symbol cannot be periodized, so it is split off by
    an exact projection and differentiated analytically; the remainder goes
    through the FFT.  The canonical-term orientation is fixed so that
    {q_j, p_j} = +1, matching the commutation relations of the quantized pair
    (see decisions ledger).
    """
    N = grid.dim
    M = grid.box.points_per_axis
    fgrad, fs = _affine_fit(f.on_grid(grid), grid)
    ggrad, gs = _affine_fit(g.on_grid(grid), grid)
    for name, arr in (("f", fs), ("g", gs)):
        tails = max(max(_tail_fraction(arr, ax, M) for ax in range(N)),
                    max(_tail_fraction(arr, N + ax, M) for ax in range(N)))
        if tails > 1e-8:
            warnings.warn(f"symbol {name} has spectral tail fraction {tails:.1e}; "
                          "bracket may be aliased", AliasingWarning)

    xscale = np.pi / grid.box.half_width
    escale = grid.w_spacing
    dxf = [spectral_derivative(fs, j, M, xscale) + fgrad[j] for j in range(N)]
    dxg = [spectral_derivative(gs, j, M, xscale) + ggrad[j] for j in range(N)]
    def_ = [spectral_derivative(fs, N + j, M, escale) + fgrad[N + j] for j in range(N)]
    deg = [spectral_derivative(gs, N + j, M, escale) + ggrad[N + j] for j in range(N)]

    out = np.zeros_like(fs)
    for j in range(N):
        out += dxf[j] * deg[j] - def_[j] * dxg[j]
    if not B.is_zero:
        pos = grid.box.points.reshape(grid.box.tensor_shape + (N,))
        for j in range(N):
            for k in range(j + 1, N):
                bjk = B.component(j, k, pos).reshape(grid.box.tensor_shape + (1,) * N)
                out += bjk * (def_[j] * deg[k] - def_[k] * deg[j])
    return Symbol.from_samples(out, grid)


def symplectic_form(B: MagneticField, X, Y, Z):
    """Magnetic symplectic form at base point X applied to tangent vectors Y, Z.

    Points are phase-space vectors (position components first, momentum last).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    N = B.dim
    for P in (X, Y, Z):
        if P.shape[-1] != 2 * N:
            raise ValueError(f"phase points must have {2 * N} components")
    y, eta = Y[..., :N], Y[..., N:]
    z, zeta = Z[..., :N], Z[..., N:]
    out = np.sum(z * eta - y * zeta, axis=-1)
    if not B.is_zero:
        out = out + B.pairing(X[..., :N], y, z)
    return float(out) if np.ndim(out) == 0 else out
