"""Uniform box and phase-space grids with hbar-scaled momentum axes.

The momentum axis of a ``PhaseGrid`` is the FFT dual of the position axis
scaled by hbar: eta_k = (pi hbar / L) k, k = -M/2 .. M/2-1.  With this choice
the plane-wave phases exp(i (x - y) . eta / hbar) are exactly periodic on the
box, which makes the discrete coherent-state resolution of identity exact up
to fiducial normalization.  Kernel second slots ("w" variables) live on the
dual axis w_m = x_m / hbar.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["BoxGrid", "PhaseGrid"]


@dataclass(frozen=True)
class BoxGrid:
    """Uniform periodic-type grid on [-L, L)^N with M points per axis (M even, >= 4)."""

    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.points_per_axis < 4 or self.points_per_axis % 2 != 0:
            raise ValueError("points_per_axis must be an even integer >= 4")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def weight(self) -> float:
        """Quadrature weight per node, spacing^N."""
        return self.spacing ** self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        m = np.arange(self.points_per_axis)
        return -self.half_width + m * self.spacing

    @cached_property
    def points(self) -> np.ndarray:
        """All nodes, row-major over axes; shape (size, dim)."""
        grids = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    def wrap(self, delta: np.ndarray) -> np.ndarray:
        """Reduce displacements to the fundamental domain [-L, L)."""
        L = self.half_width
        return (np.asarray(delta) + L) % (2.0 * L) - L

    def interior_mask(self, margin: float) -> np.ndarray:
        """Boolean mask over nodes at distance >= margin from the boundary."""
        return np.all(np.abs(self.points) <= self.half_width - margin, axis=-1)


@dataclass(frozen=True)
class PhaseGrid:
    """Discretized phase space: a BoxGrid plus hbar-scaled dual momentum axes."""

    box: BoxGrid
    hbar: float

    def __post_init__(self):
        if not (0.0 < self.hbar <= 1.0):
            raise ValueError("hbar must lie in (0, 1]")

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def momentum_spacing(self) -> float:
        return np.pi * self.hbar / self.box.half_width

    @cached_property
    def momentum_axis(self) -> np.ndarray:
        M = self.box.points_per_axis
        k = np.arange(M) - M // 2
        return self.momentum_spacing * k

    @cached_property
    def momentum_points(self) -> np.ndarray:
        grids = np.meshgrid(*([self.momentum_axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @property
    def w_spacing(self) -> float:
        return self.box.spacing / self.hbar

    @cached_property
    def w_axis(self) -> np.ndarray:
        """Kernel second-slot axis, dual to the momentum axis: x_m / hbar."""
        return self.box.axis / self.hbar

    @cached_property
    def w_points(self) -> np.ndarray:
        grids = np.meshgrid(*([self.w_axis] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @property
    def size(self) -> int:
        """Number of phase-space nodes (positions x momenta)."""
        return self.box.size ** 2

    @property
    def cell_volume(self) -> float:
        """Phase-space cell, (spacing * momentum_spacing)^N = (2 pi hbar / M)^N."""
        return (self.box.spacing * self.momentum_spacing) ** self.dim

    @property
    def frame_weight(self) -> float:
        """cell_volume / (2 pi hbar)^N; the discrete dY/(2 pi hbar)^N measure."""
        return float(self.box.points_per_axis) ** (-self.dim)

    @cached_property
    def phase_points(self) -> np.ndarray:
        """All (z, zeta) pairs, position-major; shape (size, 2*dim)."""
        pos = np.repeat(self.box.points, self.box.size, axis=0)
        mom = np.tile(self.momentum_points, (self.box.size, 1))
        return np.concatenate([pos, mom], axis=-1)

    def with_hbar(self, hbar: float) -> "PhaseGrid":
        return PhaseGrid(self.box, hbar)
