"""Magnetic fields, vector potentials, gauge changes, and flux/circulation quadratures.

Every scalar component function (``B_jk``, ``A_j``, ``rho``, gradients) follows one
calling convention: it receives an array of points of shape ``(..., dim)`` and
returns values of shape ``(...)``.  All phase "twisting" in the operator calculus
is generated by the two line/surface integrals implemented here:

* ``circulation``  -- line integral of a 1-form along a straight segment,
* ``flux_triangle`` -- integral of a 2-form over a flat 2-simplex.

Both are evaluated by Gauss-Legendre rules; the defaults refine themselves until
two successive orders agree to ``REFINE_TOL``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._warnings import QuadratureWarning

ScalarField = Callable[[np.ndarray], np.ndarray]

REFINE_TOL = 1e-10
_MAX_RULE_ORDER = 128
_PROBE_SEED = 20260

__all__ = [
    "SegmentRule",
    "SimplexRule",
    "MagneticField",
    "VectorPotential",
    "GaugeFunction",
    "PotentialReport",
    "flux_triangle",
    "circulation",
    "pentagon_flux",
    "gauge_transform",
    "poincare_potential",
    "verify_potential",
]


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights transplanted from [-1, 1] to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class SegmentRule:
    """Quadrature rule on the unit interval [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if self.nodes.size == 0:
            raise ValueError("empty segment rule")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("segment rule weights must sum to 1")

    @classmethod
    def gauss(cls, order: int = 32) -> "SegmentRule":
        t, w = _gauss01(order)
        return cls(nodes=t, weights=w, order=order)


@dataclass(frozen=True)
class SimplexRule:
    """Tensorized rule on the reference triangle chart (mu, nu) in [0,1]^2.

    The flux parametrization carries a Jacobian factor ``mu``; the stored
    weights already include it, so they sum to 1/2 (the weighted reference
    measure).
    """

    nodes: np.ndarray  # (Q, 2) columns (mu, nu)
    weights: np.ndarray  # (Q,), include the mu factor
    order: int

    def __post_init__(self):
        if self.nodes.size == 0:
            raise ValueError("empty simplex rule")
        if abs(self.weights.sum() - 0.5) > 1e-12:
            raise ValueError("simplex rule weights (with mu factor) must sum to 1/2")

    @classmethod
    def gauss(cls, order: int = 16) -> "SimplexRule":
        t, w = _gauss01(order)
        mu, nu = np.meshgrid(t, t, indexing="ij")
        wmu, wnu = np.meshgrid(w, w, indexing="ij")
        nodes = np.stack([mu.ravel(), nu.ravel()], axis=-1)
        weights = (wmu * wnu * mu).ravel()
        return cls(nodes=nodes, weights=weights, order=order)


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1:] != (dim,):
        raise ValueError(f"expected points with last axis {dim}, got shape {pts.shape}")
    return pts


def _probe_points(dim: int, n: int = 12, scale: float = 3.0) -> np.ndarray:
    rng = np.random.default_rng(_PROBE_SEED)
    return scale * rng.uniform(-1.0, 1.0, size=(n, dim))


class MagneticField:
    """Closed antisymmetric 2-form on R^N given by component functions B_jk.

    Only the strictly upper-triangular components are stored; antisymmetry is
    built in and additionally checked at random probe points when explicit
    lower components are supplied.
    """

    def __init__(
        self,
        dim: int,
        components: Sequence[Sequence[ScalarField | None]] | None,
        derivative_bound_hint: float | None = None,
        name: str = "custom",
    ):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.derivative_bound_hint = derivative_bound_hint
        self.name = name
        self._upper: dict[tuple[int, int], ScalarField] = {}
        if components is not None:
            for j in range(dim):
                for k in range(dim):
                    fjk = components[j][k]
                    if fjk is None or j == k:
                        continue
                    if j < k:
                        self._upper[(j, k)] = fjk
            # antisymmetry check against explicit lower components
            probes = _probe_points(dim)
            for j in range(dim):
                for k in range(dim):
                    fjk = components[j][k]
                    if fjk is None or j >= k:
                        continue
                    fkj = components[k][j] if components[k][j] is not None else None
                    if fkj is not None:
                        defect = np.max(np.abs(np.asarray(fjk(probes)) + np.asarray(fkj(probes))))
                        if defect > 1e-9:
                            raise ValueError(f"components B[{j}][{k}] and B[{k}][{j}] are not antisymmetric")
            for j in range(dim):
                if components[j][j] is not None:
                    diag = np.max(np.abs(np.asarray(components[j][j](_probe_points(dim)))))
                    if diag > 1e-12:
                        raise ValueError("diagonal components of a 2-form must vanish")
        if dim == 1 and self._upper:
            raise ValueError("a 2-form on R^1 has no independent component; use MagneticField.zero(1)")

    @classmethod
    def zero(cls, dim: int) -> "MagneticField":
        return cls(dim, None, derivative_bound_hint=0.0, name="zero")

    @classmethod
    def constant(cls, b: float, dim: int = 2) -> "MagneticField":
        if dim < 2 and b != 0.0:
            raise ValueError("constant field needs dim >= 2")
        f = cls(dim, None, derivative_bound_hint=0.0, name=f"constant:{b}")
        if b != 0.0:
            f._upper[(0, 1)] = lambda pts, _b=b: np.full(np.asarray(pts).shape[:-1], float(_b))
        return f

    @classmethod
    def from_b12(cls, b12: ScalarField, dim: int = 2, derivative_bound_hint: float | None = None,
                 name: str = "custom") -> "MagneticField":
        if dim < 2:
            raise ValueError("need dim >= 2 for a nonzero 2-form")
        f = cls(dim, None, derivative_bound_hint=derivative_bound_hint, name=name)
        f._upper[(0, 1)] = b12
        return f

    @property
    def is_zero(self) -> bool:
        return not self._upper

    def component(self, j: int, k: int, pts: np.ndarray) -> np.ndarray:
        """Evaluate B_jk at points of shape (..., dim)."""
        pts = np.asarray(pts, dtype=float)
        base = pts.shape[:-1]
        if j == k:
            return np.zeros(base)
        sign = 1.0
        if j > k:
            j, k, sign = k, j, -1.0
        fjk = self._upper.get((j, k))
        if fjk is None:
            return np.zeros(base)
        return sign * np.asarray(fjk(pts), dtype=float)

    def pairing(self, pts: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """B(x)(u, v) = sum_jk B_jk(x) u_j v_k for broadcastable point/vector arrays."""
        pts = np.asarray(pts, dtype=float)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        out = np.zeros(np.broadcast_shapes(pts.shape[:-1], u.shape[:-1], v.shape[:-1]))
        for (j, k), fjk in self._upper.items():
            bjk = np.asarray(fjk(pts), dtype=float)
            out = out + bjk * (u[..., j] * v[..., k] - u[..., k] * v[..., j])
        return out

    def sup_on_box(self, half_width: float, samples: int = 48) -> float:
        """Max of |B_jk| over a sampled box; used for failure reporting."""
        if self.is_zero:
            return 0.0
        ax = np.linspace(-half_width, half_width, samples)
        grids = np.meshgrid(*([ax] * self.dim), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return max(np.max(np.abs(fjk(pts))) for fjk in self._upper.values())


@dataclass
class VectorPotential:
    """1-form A with A = (A_1, ..., A_N); dA is meant to reproduce a MagneticField."""

    dim: int
    components: list[ScalarField]
    name: str = "custom"

    def __post_init__(self):
        if len(self.components) != self.dim:
            raise ValueError("need one component per dimension")

    @classmethod
    def zero(cls, dim: int) -> "VectorPotential":
        return cls(dim, [(lambda pts: np.zeros(np.asarray(pts).shape[:-1])) for _ in range(dim)], name="zero")

    def eval(self, pts: np.ndarray) -> np.ndarray:
        """All components at once; returns shape (..., dim)."""
        pts = np.asarray(pts, dtype=float)
        return np.stack([np.asarray(c(pts), dtype=float) for c in self.components], axis=-1)


@dataclass
class GaugeFunction:
    """Scalar gauge function rho with user-supplied exact gradient components."""

    dim: int
    rho: ScalarField
    grad: list[ScalarField]

    def __post_init__(self):
        if len(self.grad) != self.dim:
            raise ValueError("need one gradient component per dimension")
        # gradient consistency at probe points
        probes = _probe_points(self.dim)
        h = 1e-5
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = h
            fd = (np.asarray(self.rho(probes + e)) - np.asarray(self.rho(probes - e))) / (2 * h)
            defect = np.max(np.abs(fd - np.asarray(self.grad[j](probes))))
            if defect > 1e-6:
                raise ValueError(f"grad[{j}] disagrees with finite differences of rho (defect {defect:.2e})")


def flux_triangle(B: MagneticField, a, b, c, rule: SimplexRule | None = None):
    """Flux of the 2-form B through the oriented triangle with vertices a, b, c.

    Uses the chart x(mu, nu) = a + mu (b - a) + mu nu (c - b) with Jacobian
    weight mu.  Accepts batched vertices of shape (..., dim).  With
    ``rule=None`` the order is doubled from 16 until two successive
    evaluations agree to ``REFINE_TOL``.
    """
    a = _as_points(a, B.dim)
    b = _as_points(b, B.dim)
    c = _as_points(c, B.dim)
    if rule is not None:
        return _flux_fixed(B, a, b, c, rule)
    order = 16
    prev = _flux_fixed(B, a, b, c, SimplexRule.gauss(order))
    while order < _MAX_RULE_ORDER:
        order *= 2
        cur = _flux_fixed(B, a, b, c, SimplexRule.gauss(order))
        if np.max(np.abs(cur - prev)) <= REFINE_TOL:
            return cur
        prev = cur
    warnings.warn("triangle flux did not converge to refinement tolerance", QuadratureWarning)
    return prev


def _flux_fixed(B: MagneticField, a, b, c, rule: SimplexRule):
    if B.is_zero:
        out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1], c.shape[:-1]))
        return float(out) if out.ndim == 0 else out
    mu = rule.nodes[:, 0].reshape((-1,) + (1,) * max(a.ndim - 1, b.ndim - 1, c.ndim - 1))
    nu = rule.nodes[:, 1].reshape(mu.shape)
    pts = a[None, ...] + mu[..., None] * (b - a)[None, ...] + (mu * nu)[..., None] * (c - b)[None, ...]
    vals = B.pairing(pts, (b - a)[None, ...], (c - b)[None, ...])
    out = np.tensordot(rule.weights, vals, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def circulation(A: VectorPotential, x, y, rule: SegmentRule | None = None):
    """Line integral of A along the straight segment from x to y (batched)."""
    x = _as_points(x, A.dim)
    y = _as_points(y, A.dim)
    if rule is not None:
        return _circulation_fixed(A, x, y, rule)
    order = 32
    prev = _circulation_fixed(A, x, y, SegmentRule.gauss(order))
    while order < _MAX_RULE_ORDER:
        order *= 2
        cur = _circulation_fixed(A, x, y, SegmentRule.gauss(order))
        if np.max(np.abs(cur - prev)) <= REFINE_TOL:
            return cur
        prev = cur
    warnings.warn("circulation did not converge to refinement tolerance", QuadratureWarning)
    return prev


def _circulation_fixed(A: VectorPotential, x, y, rule: SegmentRule):
    base = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    t = rule.nodes.reshape((-1,) + (1,) * len(base))
    pts = x[None, ...] + t[..., None] * (y - x)[None, ...]
    acc = np.zeros((rule.nodes.size,) + base)
    diff = y - x
    for j, comp in enumerate(A.components):
        acc = acc + np.asarray(comp(pts), dtype=float) * diff[..., j][None, ...]
    out = np.tensordot(rule.weights, acc, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def pentagon_flux(B: MagneticField, a, b, c, d, e, rule: SimplexRule | None = None):
    """Flux through the pentagon (a, b, c, d, e), fan-triangulated from the first vertex."""
    return (
        flux_triangle(B, a, b, c, rule)
        + flux_triangle(B, a, c, d, rule)
        + flux_triangle(B, a, d, e, rule)
    )


def gauge_transform(A: VectorPotential, rho: GaugeFunction) -> VectorPotential:
    """Return A' = A + d(rho); generates the same magnetic field."""
    if A.dim != rho.dim:
        raise ValueError("dimension mismatch between potential and gauge function")

    def make(j):
        aj, gj = A.components[j], rho.grad[j]
        return lambda pts: np.asarray(aj(pts), dtype=float) + np.asarray(gj(pts), dtype=float)

    return VectorPotential(A.dim, [make(j) for j in range(A.dim)], name=f"{A.name}+grad")


def poincare_potential(B: MagneticField, rule: SegmentRule | None = None) -> VectorPotential:
    """Transversal-gauge potential A_j(x) = -sum_k x_k * int_0^1 s B_jk(s x) ds."""
    rule = rule or SegmentRule.gauss(32)

    def make(j):
        def comp(pts, _j=j):
            pts = np.asarray(pts, dtype=float)
            base = pts.shape[:-1]
            s = rule.nodes.reshape((-1,) + (1,) * len(base))
            spts = s[..., None] * pts[None, ...]
            out = np.zeros(base)
            for k in range(B.dim):
                if k == _j:
                    continue
                vals = B.component(_j, k, spts)  # (Q,) + base
                integ = np.tensordot(rule.weights * rule.nodes, vals, axes=(0, 0))
                out = out - pts[..., k] * integ
            return out

        return comp

    return VectorPotential(B.dim, [make(j) for j in range(B.dim)], name="poincare")


@dataclass(frozen=True)
class PotentialReport:
    """Curl-defect report for a (potential, field) pair; failure is data."""

    max_defect: float
    tol: float
    passed: bool
    probes: np.ndarray = field(repr=False)


def verify_potential(A: VectorPotential, B: MagneticField, probes, tol: float = 1e-8,
                     fd_step: float = 1e-5) -> PotentialReport:
    """Check dA = B at probe points with central finite differences."""
    probes = _as_points(probes, A.dim)
    if probes.ndim == 1:
        probes = probes[None, :]
    if probes.shape[0] == 0:
        raise ValueError("need at least one probe point")
    worst = 0.0
    for j in range(A.dim):
        for k in range(j + 1, A.dim):
            ej = np.zeros(A.dim)
            ek = np.zeros(A.dim)
            ej[j] = fd_step
            ek[k] = fd_step
            dj_ak = (np.asarray(A.components[k](probes + ej)) - np.asarray(A.components[k](probes - ej))) / (2 * fd_step)
            dk_aj = (np.asarray(A.components[j](probes + ek)) - np.asarray(A.components[j](probes - ek))) / (2 * fd_step)
            defect = np.max(np.abs(dj_ak - dk_aj - B.component(j, k, probes)))
            worst = max(worst, float(defect))
    return PotentialReport(max_defect=worst, tol=tol, passed=worst <= tol, probes=probes)
