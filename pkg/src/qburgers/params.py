"""Experiment parameter bundle shared across the classical and quantum paths."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ExperimentParams:
    """One point of the (nu, dt, N, u_L) parameter space, with fixed u_R.

    The default sweep draws nu from {0.01, 0.05, 0.10, 0.15, 0.20}, dt from
    {5e-4, 1e-3, 1.5e-3, 2e-3}, n_grid from {8, 16, 32, 64} and u_left from
    {1, 2, 4, 6}; custom runs may use arbitrary values.
    """

    nu: float
    dt: float
    n_grid: int
    u_left: float
    u_right: float = 0.0

    def __post_init__(self) -> None:
        if self.nu <= 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_grid < 3:
            raise ValueError(f"n_grid must be >= 3, got {self.n_grid}")

    def tag(self) -> str:
        """Stable experiment tag, e.g. ``nu0.05_dt0.001_N16_uL2``."""
        return (
            f"nu{self.nu:g}_dt{self.dt:g}_N{self.n_grid}_uL{self.u_left:g}"
        )
