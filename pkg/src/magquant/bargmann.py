"""Bargmann transform, reproducing-kernel projection, and Toeplitz operators.

The Bargmann space is realized concretely as the range of the projection P on
the discretized phase space (no holomorphic model is attempted; a variable
field rules it out).  Phase-space vectors carry the inner product
<Phi, Psi> = sum_Y conj(Phi) Psi w_Y with the uniform frame weight w.
"""

from __future__ import annotations

import numpy as np

from .berezin import CoherentFrame
from .grids import PhaseGrid
from .phasespace import Symbol
from .weyl import OperatorMatrix

__all__ = ["BargmannSpace", "bargmann_transform", "bargmann_adjoint", "toeplitz_op",
           "covariant_symbol", "berezin_transform"]

DENSE_PHASE_LIMIT = 4096


class BargmannSpace:
    """Dense realization of the coherent-state isometry and its range projection."""

    def __init__(self, frame: CoherentFrame, dense_limit: int = DENSE_PHASE_LIMIT):
        P = frame.grid.size
        if P > dense_limit:
            raise ValueError(
                f"phase grid has {P} points, above the dense Bargmann cap {dense_limit}; "
                "shrink the grid or raise dense_limit explicitly")
        self.frame = frame
        self.grid = frame.grid
        V = frame.matrix()  # (D, P) columns = coherent vectors
        w = frame.grid.frame_weight
        hN = frame.grid.box.weight
        # isometry in flat coordinates: L2(h^N) -> l2(w); U_flat = sqrt(w h^N) V^H
        self.u_flat = np.sqrt(w * hN) * V.conj().T
        self.projection = self.u_flat @ self.u_flat.conj().T

    @property
    def weight(self) -> float:
        return self.grid.frame_weight

    def kernel(self) -> np.ndarray:
        """Reproducing kernel K(Y, Z) = <v(Y), v(Z)>; the projection is w K."""
        return self.projection / self.weight

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Bargmann transform Phi(Y) = <v(Y), u>, returned on the phase grid."""
        return self.frame.analysis(np.asarray(u, dtype=complex)).ravel()

    def adjoint(self, phi: np.ndarray) -> np.ndarray:
        """sum_Y w phi(Y) v(Y); left inverse of the transform on its range."""
        return self.frame.synthesis(np.asarray(phi, dtype=complex))

    def phase_norm(self, phi: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(phi) ** 2) * self.weight))

    def phase_inner(self, phi: np.ndarray, psi: np.ndarray) -> complex:
        return complex(np.vdot(phi, psi) * self.weight)


def bargmann_transform(space: BargmannSpace, u: np.ndarray) -> np.ndarray:
    return space.transform(u)


def bargmann_adjoint(space: BargmannSpace, phi: np.ndarray) -> np.ndarray:
    return space.adjoint(phi)


def _phase_values(space: BargmannSpace, f) -> np.ndarray:
    if isinstance(f, Symbol):
        return f.on_grid(space.grid).reshape(space.grid.size)
    if callable(f):
        return Symbol.from_callable(space.grid.dim, f).on_grid(space.grid).reshape(space.grid.size)
    return np.asarray(f, dtype=complex).reshape(space.grid.size)


def toeplitz_op(space: BargmannSpace, f) -> np.ndarray:
    """Compression P M_f P of multiplication by f to the Bargmann space (flat matrix)."""
    vals = _phase_values(space, f)
    P = space.projection
    return P @ (vals[:, None] * P)


def covariant_symbol(space: BargmannSpace, S) -> np.ndarray:
    """Diagonal coherent-state expectations of an operator.

    Accepts an OperatorMatrix on the position grid (uses the coherent vectors
    directly) or a flat phase-grid matrix (uses the transformed coherent
    family).
    """
    if isinstance(S, OperatorMatrix):
        if S.grid != space.grid.box:
            raise ValueError("operator grid does not match the Bargmann space")
        frame = space.frame
        pts = space.grid.box.points
        mom = space.grid.momentum_points
        out = np.empty(space.grid.size, dtype=complex)
        act = S.action
        for zi in range(pts.shape[0]):
            cols = np.exp(1j / frame.hbar * ((pts[:, None, :] - 0.5 * pts[zi]) * mom[None, :, :]).sum(-1))
            cols = cols * frame.momentumless[zi][:, None]
            out[zi * mom.shape[0]:(zi + 1) * mom.shape[0]] = space.grid.box.weight * np.einsum(
                "xk,xy,yk->k", np.conj(cols), act, cols, optimize=True)
        return out
    S = np.asarray(S, dtype=complex)
    if S.shape != (space.grid.size, space.grid.size):
        raise ValueError("matrix size does not match the phase grid")
    # coherent family seen in the Bargmann space: flat Psi(X) = projection[:, X] / sqrt(w)
    out = np.empty(space.grid.size, dtype=complex)
    for xi in range(space.grid.size):
        col = space.projection[:, xi] / np.sqrt(space.weight)
        out[xi] = np.vdot(col, S @ col)
    return out


def berezin_transform(space: BargmannSpace, f) -> np.ndarray:
    """Smoothing f -> sum_Y w f(Y) |K(X, Y)|^2; converges pointwise to f as hbar -> 0."""
    vals = _phase_values(space, f)
    K = space.kernel()
    return (np.abs(K) ** 2) @ (vals * space.weight)
