"""Spatial grid, Cole-Hopf initial data, velocity reconstruction, and diagnostics.

The viscous Burgers field u(x,t) lives on a uniform grid over [0, 1].  The
Cole-Hopf substitution u = -2 nu * phi_x / phi turns the nonlinear problem
into a linear diffusion of phi; everything downstream (classical propagation,
quantum amplitude encoding) works on phi and maps back to u through
``reconstruct_velocity``.

All operations here are pure functions on immutable value objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_EPSILON = 1e-10


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_points`` samples of [0, 1], spacing 1/(N-1)."""

    n_points: int
    dx: float
    points: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _frozen(self.points))


@dataclass(frozen=True)
class VelocityField:
    """Discrete velocity samples with pinned boundary values."""

    values: np.ndarray
    u_left: float
    u_right: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("velocity field contains non-finite entries")


@dataclass(frozen=True)
class ColeHopfField:
    """Nonnegative Cole-Hopf samples, normalized to unit Euclidean norm."""

    phi: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", _frozen(self.phi))


@dataclass(frozen=True)
class Diagnostics:
    """Per-snapshot physics diagnostics."""

    shock_position: float
    dissipation: float
    l2_error: Optional[float] = None


def build_grid(n_points: int) -> Grid:
    """Build the uniform grid x_j = j/(N-1) on [0, 1].

    Requires ``n_points >= 3`` so the interior stencil has at least one point.
    """
    if n_points < 3:
        raise ValueError(f"n_points must be >= 3, got {n_points}")
    dx = 1.0 / (n_points - 1)
    points = np.arange(n_points) * dx
    return Grid(n_points=n_points, dx=dx, points=points)


def initial_velocity(grid: Grid, u_left: float, u_right: float) -> VelocityField:
    """Sine hump initial profile sin(pi x) with boundary values overwritten."""
    values = np.sin(np.pi * grid.points)
    values[0] = u_left
    values[-1] = u_right
    return VelocityField(values=values, u_left=u_left, u_right=u_right)


def cole_hopf_initial(grid: Grid, u0: VelocityField, nu: float) -> ColeHopfField:
    """Map an initial velocity to the unit-norm Cole-Hopf field.

    The cumulative integral I_j of u0 is taken with the trapezoidal rule and
    phi_j = exp(-I_j / (2 nu)) is normalized to unit Euclidean norm.  The
    normalization is a free gauge: the reconstructed velocity depends only on
    amplitude ratios.
    """
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    u = u0.values
    increments = 0.5 * grid.dx * (u[1:] + u[:-1])
    cumulative = np.concatenate([[0.0], np.cumsum(increments)])
    phi = np.exp(-cumulative / (2.0 * nu))
    phi = phi / np.linalg.norm(phi)
    return ColeHopfField(phi=phi)


def reconstruct_velocity(
    phi_like: np.ndarray,
    nu: float,
    grid: Grid,
    u_left: float,
    u_right: float,
    epsilon: float = DEFAULT_EPSILON,
) -> VelocityField:
    """Centred-difference Cole-Hopf inversion u = -2 nu phi_x / phi.

    Accepts any real array of grid length (e.g. measured quantum amplitudes).
    The denominator is regularized as max(phi_j, epsilon); boundary entries
    are set to the prescribed u_left/u_right.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    phi = np.asarray(phi_like, dtype=float)
    if phi.shape != (grid.n_points,):
        raise ValueError(
            f"phi length {phi.shape} does not match grid size {grid.n_points}"
        )
    values = np.empty(grid.n_points)
    denom = 2.0 * grid.dx * np.maximum(phi[1:-1], epsilon)
    values[1:-1] = -2.0 * nu * (phi[2:] - phi[:-2]) / denom
    values[0] = u_left
    values[-1] = u_right
    return VelocityField(values=values, u_left=u_left, u_right=u_right)


def l2_error(u_a: VelocityField, u_b: VelocityField, grid: Grid) -> float:
    """Discrete L2 distance sqrt(dx * sum (a_j - b_j)^2)."""
    a, b = u_a.values, u_b.values
    if a.shape != b.shape or a.shape != (grid.n_points,):
        raise ValueError("field lengths do not match the grid")
    return float(np.sqrt(grid.dx * np.sum((a - b) ** 2)))


def shock_position(u: VelocityField, grid: Grid) -> float:
    """Grid point of the steepest discrete gradient.

    Scans forward differences over j = 0..N-2; ties resolve to the smallest
    index so the result is deterministic.
    """
    gradients = np.abs(np.diff(u.values)) / grid.dx
    k_star = int(np.argmax(gradients))  # argmax takes the first maximum
    return float(grid.points[k_star])


def dissipation_rate(u: VelocityField, grid: Grid, nu: float) -> float:
    """Viscous dissipation proxy nu * sum_j ((u_{j+1}-u_j)/dx)^2 * dx."""
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    gradients = np.diff(u.values) / grid.dx
    return float(nu * np.sum(gradients**2) * grid.dx)
