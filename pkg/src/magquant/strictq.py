"""Semiclassical verification harness: hbar sweeps for the three quantization axioms,
the classical kernel product, the kernel-side Poisson bracket, and the pentagon phases.

Verdict rules quantify the qualitative hbar -> 0 limits at desk scale:
Rieffel needs a Cauchy-like norm sequence landing within 5% of sup|f|; the
von Neumann / Dirac / semiclassical defects must decrease strictly with final
to initial ratios 0.1 / 0.2 / (1/3).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .berezin import CoherentFrame, FiducialVector, berezin_op, sigma_map
from .fields import MagneticField, SimplexRule, VectorPotential, pentagon_flux
from .grids import BoxGrid, PhaseGrid
from .phasespace import KernelFunction, Symbol, norm_1_inf, poisson_bracket, spectral_derivative
from .weyl import OperatorMatrix, operator_norm, rep_operator, weyl_op

__all__ = [
    "SweepRecord",
    "SweepReport",
    "PhaseLemmaReport",
    "classical_product",
    "kernel_bracket",
    "phase_w",
    "phase_lemma_check",
    "rieffel_sweep",
    "vonneumann_sweep",
    "dirac_sweep",
    "semiclassical_sweep",
    "sigma_sweep",
    "sweep_grids",
    "momentum_coverage_points",
]


def classical_product(F: KernelFunction, G: KernelFunction, grid: PhaseGrid) -> KernelFunction:
    """Commutative hbar = 0 limit product: convolution in the second slot.

    (F o G)(x, y) = int dz F(x, z) G(x, y - z), with no (2 pi) prefactor; this
    normalization is forced by the hbar -> 0 limit of the twisted product and
    by transport of the pointwise symbol product (see decisions ledger).
    """
    N = grid.dim
    M = grid.box.points_per_axis
    Fv = F.on_grid(grid)
    Gv = G.on_grid(grid)
    waxes = tuple(range(N, 2 * N))
    raw = np.fft.ifftn(np.fft.fftn(Fv, axes=waxes) * np.fft.fftn(Gv, axes=waxes), axes=waxes)
    # the w axis origin sits at index M/2, so the plain circular convolution is rolled
    out = np.roll(raw, -(M // 2), axis=waxes) * grid.w_spacing ** N

    func = None
    if F.func is not None and G.func is not None:
        znodes = grid.w_points
        zw = grid.w_spacing ** N

        def func(x, y, _F=F, _G=G):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            base = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
            xb = np.broadcast_to(x, base + (N,)).reshape(-1, N)
            yb = np.broadcast_to(y, base + (N,)).reshape(-1, N)
            vals = np.zeros(xb.shape[0], dtype=complex)
            step = max(1, (1 << 21) // znodes.shape[0])
            for i in range(0, xb.shape[0], step):
                xs = xb[i:i + step, None, :]
                ys = yb[i:i + step, None, :]
                fv = _F.eval(np.broadcast_to(xs, (xs.shape[0],) + znodes.shape), znodes[None, :, :])
                gv = _G.eval(np.broadcast_to(xs, (xs.shape[0],) + znodes.shape), ys - znodes[None, :, :])
                vals[i:i + step] = zw * (fv * gv).sum(axis=1)
            return vals.reshape(base)

    return KernelFunction.from_samples(out, grid, func=func)


def _convolve_samples(P: np.ndarray, Q: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    N = grid.dim
    M = grid.box.points_per_axis
    waxes = tuple(range(N, 2 * N))
    raw = np.fft.ifftn(np.fft.fftn(P, axes=waxes) * np.fft.fftn(Q, axes=waxes), axes=waxes)
    return np.roll(raw, -(M // 2), axis=waxes) * grid.w_spacing ** N


def kernel_bracket(B: MagneticField, F: KernelFunction, G: KernelFunction,
                   grid: PhaseGrid) -> KernelFunction:
    """Kernel-side Poisson bracket, the partial-Fourier transport of the symbol bracket.

    {{F, G}} = sum_j [ (Y_j F) o ((1/i) d_xj G) - ((1/i) d_xj F) o (Y_j G) ]
               - sum_jk B_jk(x) (Y_j F) o (Y_k G)

    with o the hbar = 0 convolution above and [Y_j F](x, y) = y_j F(x, y).
    """
    N = grid.dim
    M = grid.box.points_per_axis
    Fv = F.on_grid(grid)
    Gv = G.on_grid(grid)
    wvals = [grid.w_axis.reshape((1,) * N + tuple(M if a == j else 1 for a in range(N)))
             for j in range(N)]
    xscale = np.pi / grid.box.half_width
    out = np.zeros_like(Fv)
    YF = [wvals[j] * Fv for j in range(N)]
    YG = [wvals[j] * Gv for j in range(N)]
    for j in range(N):
        dG = spectral_derivative(Gv, j, M, xscale) / 1j
        dF = spectral_derivative(Fv, j, M, xscale) / 1j
        out += _convolve_samples(YF[j], dG, grid) - _convolve_samples(dF, YG[j], grid)
    if not B.is_zero:
        pos = grid.box.points.reshape(grid.box.tensor_shape + (N,))
        for j in range(N):
            for k in range(N):
                if j == k:
                    continue
                bjk = B.component(j, k, pos).reshape(grid.box.tensor_shape + (1,) * N)
                out -= bjk * _convolve_samples(YF[j], YG[k], grid)
    return KernelFunction.from_samples(out, grid)


def phase_w(B: MagneticField, which: int, x, y, z, a, b, hbar: float,
            rule: SimplexRule | None = None) -> complex:
    """Unimodular pentagon-flux phase w_1 or w_2 from the commutator expansion."""
    x, y, z, a, b = (np.asarray(p, dtype=float) for p in (x, y, z, a, b))
    h = hbar
    if which == 1:
        verts = (x - 0.5 * h * y,
                 x - np.sqrt(h) * a - 0.5 * h * (y - z),
                 x - 0.5 * h * y + h * z,
                 x - np.sqrt(h) * b + 0.5 * h * z,
                 x + 0.5 * h * y)
    elif which == 2:
        verts = (x - 0.5 * h * y,
                 x - np.sqrt(h) * b - 0.5 * h * z,
                 x + 0.5 * h * y - h * z,
                 x - np.sqrt(h) * a + 0.5 * h * (y - z),
                 x + 0.5 * h * y)
    else:
        raise ValueError("which must be 1 or 2")
    flux = pentagon_flux(B, *verts, rule=rule)
    return complex(np.exp(-1j / h * flux))


@dataclass(frozen=True)
class PhaseLemmaReport:
    hbar_list: list[float]
    values: list[complex]
    limit: complex
    target: float
    tol: float
    passed: bool


def phase_lemma_check(B: MagneticField, x, y, z, a, b, hbar_list,
                      rule: SimplexRule | None = None, tol: float = 1e-3) -> PhaseLemmaReport:
    """Richardson limit of (w_1 - w_2) / (i hbar) against its closed-form target."""
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    hbars = sorted((float(h) for h in hbar_list), reverse=True)
    vals = []
    for h in hbars:
        w1 = phase_w(B, 1, x, y, z, a, b, h, rule)
        w2 = phase_w(B, 2, x, y, z, a, b, h, rule)
        vals.append((w1 - w2) / (1j * h))
    target = 0.0
    if not B.is_zero:
        for j in range(B.dim):
            for k in range(B.dim):
                if j == k:
                    continue
                target -= z[j] * (y[k] - z[k]) * float(B.component(j, k, x))
    limit = _richardson(vals)
    passed = abs(limit - target) <= tol
    return PhaseLemmaReport(hbar_list=hbars, values=vals, limit=limit, target=target,
                            tol=tol, passed=passed)


def _richardson(vals: list[complex]) -> complex:
    if len(vals) < 2:
        return vals[-1]
    tail = np.array(vals[-3:])
    if np.max(np.abs(tail)) < 1e-14:
        return 0.0 + 0.0j
    if len(vals) >= 3:
        num = tail[-3] - tail[-2]
        den = tail[-2] - tail[-1]
        if abs(den) > 1e-15 * max(1.0, abs(num)):
            ratio = num / den
            if abs(ratio - 1.0) > 1e-6:
                return complex(tail[-1] + (tail[-1] - tail[-2]) / (ratio - 1.0))
    return complex(2 * vals[-1] - vals[-2])


@dataclass
class SweepRecord:
    hbar: float
    norm: float
    defect: float
    runtime_ms: float
    grid: dict
    warnings: list[str] = dc_field(default_factory=list)


@dataclass
class SweepReport:
    axiom: str
    records: list[SweepRecord]
    verdict: bool
    rule: str
    field_preset: str = "custom"
    gauge: str = "custom"
    fiducial: str = "custom"

    def rows(self) -> list[dict]:
        return [
            {
                "axiom": self.axiom,
                "field_preset": self.field_preset,
                "gauge": self.gauge,
                "fiducial": self.fiducial,
                "hbar": r.hbar,
                "norm": r.norm,
                "defect": r.defect,
                "verdict": "pass" if self.verdict else "fail",
                "runtime_ms": r.runtime_ms,
            }
            for r in self.records
        ]

    @property
    def defects(self) -> list[float]:
        return [r.defect for r in self.records]

    @property
    def norms(self) -> list[float]:
        return [r.norm for r in self.records]


def sweep_grids(dim: int, half_width: float, points_per_axis: int, hbar_list) -> dict[float, PhaseGrid]:
    box = BoxGrid(dim, half_width, points_per_axis)
    return {float(h): PhaseGrid(box, float(h)) for h in hbar_list}


def momentum_coverage_points(half_width: float, hbar_min: float, eta_max: float) -> int:
    """Even M so the momentum box at hbar_min reaches at least eta_max."""
    M = int(np.ceil(2.0 * half_width * eta_max / (np.pi * hbar_min)))
    return M + (M % 2)


def _grid_summary(grid: PhaseGrid) -> dict:
    return {"dim": grid.dim, "points_per_axis": grid.box.points_per_axis,
            "half_width": grid.box.half_width, "hbar": grid.hbar}


def _strictly_decreasing(vals) -> bool:
    return all(b < a for a, b in zip(vals, vals[1:]))


def _run_sweep(axiom, rule_text, hbar_list, grids, per_hbar, verdict_fn, labels) -> SweepReport:
    hbars = sorted((float(h) for h in hbar_list), reverse=True)
    records = []
    for h in hbars:
        grid = grids[h]
        t0 = time.perf_counter()
        norm, defect = per_hbar(h, grid)
        dt = (time.perf_counter() - t0) * 1e3
        records.append(SweepRecord(hbar=h, norm=norm, defect=defect,
                                   runtime_ms=dt, grid=_grid_summary(grid)))
    verdict = verdict_fn(records)
    report = SweepReport(axiom=axiom, records=records, verdict=verdict, rule=rule_text, **labels)
    return report


def rieffel_sweep(A: VectorPotential, B: MagneticField, v: FiducialVector, f: Symbol,
                  hbar_list, grids: dict[float, PhaseGrid], **labels) -> SweepReport:
    """Norm continuity: ||B(f)|| must approach sup|f| along the sweep."""
    sup_f = None

    def per_hbar(h, grid):
        nonlocal sup_f
        vals = f.on_grid(grid)
        sup_f = float(np.max(np.abs(vals)))
        op = berezin_op(A, v, h, vals, grid)
        n = operator_norm(op)
        return n, abs(n - sup_f)

    def verdict(records):
        norms = [r.norm for r in records]
        gaps = [abs(b - a) for a, b in zip(norms, norms[1:])]
        cauchy = all(g2 <= g1 * 1.0 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))
        return cauchy and abs(norms[-1] - sup_f) <= 0.05 * sup_f

    return _run_sweep("rieffel", "cauchy gaps + final within 5% of sup|f|",
                      hbar_list, grids, per_hbar, verdict, labels)


def vonneumann_sweep(A: VectorPotential, B: MagneticField, v: FiducialVector,
                     f: Symbol, g: Symbol, hbar_list, grids, **labels) -> SweepReport:
    """Symmetrized products must converge to the quantized pointwise product."""

    def per_hbar(h, grid):
        frame = CoherentFrame(A, v, h, grid)
        fv = f.on_grid(grid)
        gv = g.on_grid(grid)
        Bf = frame.berezin(fv.reshape(grid.box.size, grid.box.size))
        Bg = frame.berezin(gv.reshape(grid.box.size, grid.box.size))
        Bfg = frame.berezin((fv * gv).reshape(grid.box.size, grid.box.size))
        sym = 0.5 * (Bf.compose(Bg) + Bg.compose(Bf))
        return operator_norm(Bf), operator_norm(sym - Bfg)

    def verdict(records):
        d = [r.defect for r in records]
        return _strictly_decreasing(d) and d[-1] < 0.1 * d[0]

    return _run_sweep("vonneumann", "strictly decreasing, final < 0.1 initial",
                      hbar_list, grids, per_hbar, verdict, labels)


def dirac_sweep(A: VectorPotential, B: MagneticField, v: FiducialVector,
                f: Symbol, g: Symbol, hbar_list, grids, **labels) -> SweepReport:
    """Scaled commutators must converge to the quantized magnetic Poisson bracket."""

    def per_hbar(h, grid):
        frame = CoherentFrame(A, v, h, grid)
        fv = f.on_grid(grid)
        gv = g.on_grid(grid)
        Bf = frame.berezin(fv.reshape(grid.box.size, grid.box.size))
        Bg = frame.berezin(gv.reshape(grid.box.size, grid.box.size))
        pb = poisson_bracket(B, f, g, grid).on_grid(grid)
        Bpb = frame.berezin(pb.reshape(grid.box.size, grid.box.size))
        comm = (1.0 / (1j * h)) * (Bf.compose(Bg) - Bg.compose(Bf))
        return operator_norm(Bf), operator_norm(comm - Bpb)

    def verdict(records):
        d = [r.defect for r in records]
        return _strictly_decreasing(d) and d[-1] < 0.2 * d[0]

    return _run_sweep("dirac", "strictly decreasing, final < 0.2 initial",
                      hbar_list, grids, per_hbar, verdict, labels)


def semiclassical_sweep(A: VectorPotential, B: MagneticField, v: FiducialVector,
                        f: Symbol, hbar_list, grids, **labels) -> SweepReport:
    """Berezin and Weyl quantizations of the same symbol must merge as hbar -> 0."""

    def per_hbar(h, grid):
        Bop = berezin_op(A, v, h, f, grid)
        Wop = weyl_op(A, h, f, grid)
        return operator_norm(Bop), operator_norm(Bop - Wop)

    def verdict(records):
        d = [r.defect for r in records]
        return _strictly_decreasing(d) and d[-1] <= d[0] / 3.0

    return _run_sweep("semiclassical", "strictly decreasing, final <= initial/3",
                      hbar_list, grids, per_hbar, verdict, labels)


def sigma_sweep(B: MagneticField, v: FiducialVector, F: KernelFunction,
                hbar_list, grids, **labels) -> SweepReport:
    """Strong continuity of the kernel-side smoothing map at hbar = 0."""

    def per_hbar(h, grid):
        SF = sigma_map(B, v, h, F, grid)
        diff = KernelFunction.from_callable(
            grid.dim, lambda x, y: SF.eval(x, y) - F.eval(x, y))
        base = norm_1_inf(F, grid)
        return base, norm_1_inf(diff, grid)

    def verdict(records):
        d = [r.defect for r in records]
        return _strictly_decreasing(d) and d[-1] < 0.05 * records[0].norm

    return _run_sweep("sigma", "strictly decreasing, final < 0.05 ||F||",
                      hbar_list, grids, per_hbar, verdict, labels)
