"""Named presets for fields, gauges, symbols, and fiducial vectors.

Preset strings are the config-file vocabulary:

* fields:   "zero", "constant:b", "sinusoidal:b0,eps"  (B_12 = b0 + eps sin x_1)
* gauges:   "zero", "symmetric", "landau", "poincare"
* symbols:  "gaussian:center,width", "coordinate:q_j", "coordinate:p_j",
            "harmonic", "random_bandlimited:seed"
* fiducials: "gaussian", "odd_perturbed[:eps]"
"""

from __future__ import annotations

import numpy as np

from .berezin import FiducialVector
from .fields import MagneticField, VectorPotential, poincare_potential
from .phasespace import Symbol

__all__ = ["parse_field", "make_potential", "parse_symbol", "parse_fiducial"]


def _split(spec: str) -> tuple[str, list[str]]:
    name, _, rest = spec.partition(":")
    args = [a for a in rest.split(",") if a] if rest else []
    return name.strip(), args


def parse_field(spec: str, dim: int) -> MagneticField:
    name, args = _split(spec)
    if name == "zero":
        return MagneticField.zero(dim)
    if name == "constant":
        b = float(args[0]) if args else 1.0
        return MagneticField.constant(b, dim)
    if name == "sinusoidal":
        if dim < 2:
            raise ValueError("sinusoidal field needs dim >= 2")
        b0 = float(args[0]) if args else 1.0
        eps = float(args[1]) if len(args) > 1 else 0.5
        fld = MagneticField.from_b12(
            lambda pts: b0 + eps * np.sin(np.asarray(pts)[..., 0]),
            dim=dim, derivative_bound_hint=abs(eps), name=spec)
        return fld
    raise ValueError(f"unknown field preset {spec!r}")


def make_potential(field_spec: str, gauge: str, dim: int) -> VectorPotential:
    name, args = _split(field_spec)
    gauge = gauge.strip()
    if gauge == "zero":
        return VectorPotential.zero(dim)
    if name == "zero":
        return VectorPotential.zero(dim)
    if name == "constant":
        b = float(args[0]) if args else 1.0
        if gauge == "symmetric":
            comps = [lambda p, _b=b: -0.5 * _b * np.asarray(p)[..., 1],
                     lambda p, _b=b: 0.5 * _b * np.asarray(p)[..., 0]]
            comps += [(lambda p: np.zeros(np.asarray(p).shape[:-1]))] * (dim - 2)
            return VectorPotential(dim, comps, name="symmetric")
        if gauge == "landau":
            comps = [lambda p: np.zeros(np.asarray(p).shape[:-1]),
                     lambda p, _b=b: _b * np.asarray(p)[..., 0]]
            comps += [(lambda p: np.zeros(np.asarray(p).shape[:-1]))] * (dim - 2)
            return VectorPotential(dim, comps, name="landau")
        if gauge == "poincare":
            return poincare_potential(parse_field(field_spec, dim))
        raise ValueError(f"unknown gauge {gauge!r}")
    if name == "sinusoidal":
        b0 = float(args[0]) if args else 1.0
        eps = float(args[1]) if len(args) > 1 else 0.5
        if gauge == "landau":
            comps = [lambda p: np.zeros(np.asarray(p).shape[:-1]),
                     lambda p, _b=b0, _e=eps: _b * np.asarray(p)[..., 0] - _e * np.cos(np.asarray(p)[..., 0])]
            comps += [(lambda p: np.zeros(np.asarray(p).shape[:-1]))] * (dim - 2)
            return VectorPotential(dim, comps, name="landau")
        if gauge in ("poincare", "symmetric"):
            # no closed symmetric form for a variable field; transversal gauge is the analogue
            return poincare_potential(parse_field(field_spec, dim))
        raise ValueError(f"unknown gauge {gauge!r}")
    raise ValueError(f"unknown field preset {field_spec!r}")


def parse_symbol(spec: str, dim: int) -> Symbol:
    name, args = _split(spec)
    if name == "gaussian":
        c = float(args[0]) if args else 0.0
        w = float(args[1]) if len(args) > 1 else 1.0

        def f(x, xi, _c=c, _w=w):
            x = np.asarray(x, dtype=float)
            xi = np.asarray(xi, dtype=float)
            x0 = x.copy()
            x0[..., 0] -= _c
            return np.exp(-(np.sum(x0 ** 2, -1) + np.sum(xi ** 2, -1)) / (2.0 * _w ** 2))

        return Symbol.from_callable(dim, f)
    if name == "coordinate":
        if not args or args[0][0] not in "qp" or "_" not in args[0]:
            raise ValueError("coordinate symbol needs q_j or p_j")
        kind, idx = args[0].split("_")
        j = int(idx) - 1
        if not 0 <= j < dim:
            raise ValueError("coordinate index out of range")
        if kind == "q":
            return Symbol.from_callable(dim, lambda x, xi, _j=j: np.asarray(x, dtype=float)[..., _j]
                                        + 0.0 * np.sum(np.asarray(xi), -1))
        return Symbol.from_callable(dim, lambda x, xi, _j=j: np.asarray(xi, dtype=float)[..., _j]
                                    + 0.0 * np.sum(np.asarray(x), -1))
    if name == "harmonic":
        return Symbol.from_callable(dim, lambda x, xi: np.sum(np.asarray(x, dtype=float) ** 2, -1)
                                    + np.sum(np.asarray(xi, dtype=float) ** 2, -1))
    if name == "random_bandlimited":
        seed = int(args[0]) if args else 0
        rng = np.random.default_rng(seed)
        n_modes = 6
        kx = rng.integers(-3, 4, size=(n_modes, dim))
        kxi = rng.integers(-3, 4, size=(n_modes, dim))
        coef = rng.normal(size=n_modes) * 3.0 ** (-np.abs(kx).sum(1) - np.abs(kxi).sum(1))
        phase0 = rng.uniform(0, 2 * np.pi, size=n_modes)

        def f(x, xi):
            x = np.asarray(x, dtype=float)
            xi = np.asarray(xi, dtype=float)
            env = np.exp(-(np.sum(x ** 2, -1) + np.sum(xi ** 2, -1)) / 8.0)
            acc = np.zeros(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]))
            for m in range(n_modes):
                acc = acc + coef[m] * np.cos(x @ kx[m] * 0.7 + xi @ kxi[m] * 0.7 + phase0[m])
            return acc * env

        return Symbol.from_callable(dim, f)
    raise ValueError(f"unknown symbol preset {spec!r}")


def parse_fiducial(spec: str, dim: int) -> FiducialVector:
    name, args = _split(spec)
    if name == "gaussian":
        return FiducialVector.gaussian(dim)
    if name == "odd_perturbed":
        eps = float(args[0]) if args else 0.3
        return FiducialVector.odd_perturbed(dim, eps)
    raise ValueError(f"unknown fiducial preset {spec!r}")
