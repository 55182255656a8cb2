"""Classical reference path: discrete Laplacian and Krylov matrix exponentials.

The heat-equation generator is the central-difference Laplacian with its
first and last rows zeroed, so the boundary entries of phi are frozen in
time while interior rows still read the boundary columns.  The action of
exp(nu t L) on the Cole-Hopf state is evaluated with an Arnoldi projection
(the operator is non-symmetric once the rows are zeroed) using adaptive
substepping on the standard residual estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .params import ExperimentParams
from .pde_core import (
    DEFAULT_EPSILON,
    ColeHopfField,
    Diagnostics,
    Grid,
    VelocityField,
    build_grid,
    cole_hopf_initial,
    dissipation_rate,
    initial_velocity,
    reconstruct_velocity,
    shock_position,
)

_BREAKDOWN_TOL = 1e-14


class KrylovConvergenceError(RuntimeError):
    """Propagation did not reach the target time within the restart budget."""

    def __init__(self, message: str, residual_estimate: float):
        super().__init__(message)
        self.residual_estimate = residual_estimate


@dataclass(frozen=True)
class KrylovConfig:
    max_subspace_dim: int = 30
    tolerance: float = 1e-10
    max_restarts: int = 50

    def __post_init__(self) -> None:
        if self.max_subspace_dim < 1 or self.max_restarts < 1 or self.tolerance <= 0:
            raise ValueError("KrylovConfig fields must all be positive")


@dataclass(frozen=True)
class LaplacianOp:
    """Tridiagonal second-difference operator with zeroed boundary rows."""

    size: int
    dx: float
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.sub[1:] * x[:-1]
        y[:-1] += self.sup[:-1] * x[1:]
        return y

    def dense(self) -> np.ndarray:
        mat = np.diag(self.diag)
        mat[np.arange(1, self.size), np.arange(self.size - 1)] = self.sub[1:]
        mat[np.arange(self.size - 1), np.arange(1, self.size)] = self.sup[:-1]
        return mat


def build_laplacian(grid: Grid) -> LaplacianOp:
    """Central-difference Laplacian; rows 0 and N-1 are identically zero."""
    n = grid.n_points
    inv_dx2 = 1.0 / grid.dx**2
    sub = np.full(n, inv_dx2)
    diag = np.full(n, -2.0 * inv_dx2)
    sup = np.full(n, inv_dx2)
    for boundary in (0, n - 1):
        sub[boundary] = diag[boundary] = sup[boundary] = 0.0
    return LaplacianOp(size=n, dx=grid.dx, sub=sub, diag=diag, sup=sup)


def _expm_hessenberg(mat: np.ndarray) -> np.ndarray:
    """Dense matrix exponential of a small matrix via scaling and squaring.

    Taylor series on the scaled matrix; only used on Krylov projections of
    modest dimension, where O(m^3) per term is negligible.
    """
    norm = np.linalg.norm(mat, 1)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5))) if norm > 0.5 else 0)
    scaled = mat / (2.0**squarings)
    result = np.eye(mat.shape[0])
    term = np.eye(mat.shape[0])
    for k in range(1, 30):
        term = term @ scaled / k
        result = result + term
        if np.linalg.norm(term, 1) < 1e-18 * np.linalg.norm(result, 1):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def krylov_expm_apply(
    op: LaplacianOp,
    nu: float,
    phi0: ColeHopfField,
    t: float,
    cfg: KrylovConfig = KrylovConfig(),
) -> np.ndarray:
    """Evaluate exp(nu t L) phi0 by restarted Arnoldi projection.

    Each substep projects the generator onto a Krylov subspace, exponentiates
    the Hessenberg block, and accepts the step only when the residual
    estimate ``beta * h_{m+1,m} * |exp(tau H)_{m,1}|`` is below tolerance;
    otherwise the substep is halved.  Raises ``KrylovConvergenceError`` when
    the restart budget is exhausted.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    phi = np.asarray(phi0.phi, dtype=float)
    if phi.shape != (op.size,):
        raise ValueError("phi0 length does not match the operator size")
    w = phi.copy()
    if t == 0.0 or nu == 0.0:
        return w

    def apply_a(v: np.ndarray) -> np.ndarray:
        return nu * op.matvec(v)

    t_done = 0.0
    tau = t
    restarts = 0
    last_err = np.inf
    while t_done < t:
        if restarts >= cfg.max_restarts:
            raise KrylovConvergenceError(
                f"no convergence after {cfg.max_restarts} restarts "
                f"(t_done={t_done:.3e} of {t:.3e})",
                residual_estimate=last_err,
            )
        restarts += 1
        beta = float(np.linalg.norm(w))
        if beta == 0.0:
            return w

        m_max = min(cfg.max_subspace_dim, op.size)
        basis = np.zeros((op.size, m_max + 1))
        hess = np.zeros((m_max + 1, m_max))
        basis[:, 0] = w / beta
        happy = False
        m_eff = m_max
        for j in range(m_max):
            candidate = apply_a(basis[:, j])
            # Classical Gram-Schmidt with one reorthogonalization pass.
            for _ in range(2):
                coeffs = basis[:, : j + 1].T @ candidate
                hess[: j + 1, j] += coeffs
                candidate = candidate - basis[:, : j + 1] @ coeffs
            h_next = float(np.linalg.norm(candidate))
            hess[j + 1, j] = h_next
            if h_next < _BREAKDOWN_TOL:
                happy = True
                m_eff = j + 1
                break
            basis[:, j + 1] = candidate / h_next

        h_block = hess[:m_eff, :m_eff]
        h_tail = hess[m_eff, m_eff - 1]
        while True:
            small_exp = _expm_hessenberg(tau * h_block)
            if happy:
                err = 0.0
            else:
                err = beta * abs(h_tail * tau) * abs(small_exp[m_eff - 1, 0])
            last_err = err
            if err <= cfg.tolerance:
                break
            tau *= 0.5
            restarts += 1
            if restarts >= cfg.max_restarts:
                raise KrylovConvergenceError(
                    f"substep halving exhausted {cfg.max_restarts} restarts",
                    residual_estimate=err,
                )

        w = beta * (basis[:, :m_eff] @ small_exp[:, 0])
        t_done += tau
        tau = t - t_done
    return w


@dataclass(frozen=True)
class ClassicalSnapshot:
    t: float
    u: VelocityField
    diagnostics: Diagnostics


def classical_reference(
    params: ExperimentParams,
    times: Sequence[float],
    cfg: KrylovConfig = KrylovConfig(),
    epsilon: float = DEFAULT_EPSILON,
) -> List[ClassicalSnapshot]:
    """Propagate the Cole-Hopf state to each requested time and reconstruct u.

    Every snapshot is propagated independently from t=0 (no chaining), so a
    single failed time aborts the whole parameter combination by raising.
    """
    if list(times) != sorted(times) or (times and times[0] < 0):
        raise ValueError("times must be sorted ascending and nonnegative")
    grid = build_grid(params.n_grid)
    u0 = initial_velocity(grid, params.u_left, params.u_right)
    phi0 = cole_hopf_initial(grid, u0, params.nu)
    op = build_laplacian(grid)
    snapshots: List[ClassicalSnapshot] = []
    for t in times:
        phi_t = krylov_expm_apply(op, params.nu, phi0, t, cfg)
        u = reconstruct_velocity(
            phi_t, params.nu, grid, params.u_left, params.u_right, epsilon
        )
        diag = Diagnostics(
            shock_position=shock_position(u, grid),
            dissipation=dissipation_rate(u, grid, params.nu),
        )
        snapshots.append(ClassicalSnapshot(t=t, u=u, diagnostics=diag))
    return snapshots
