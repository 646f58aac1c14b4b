"""Lemke complementary pivoting and the reduced contact time-stepping loop.

The solver finds ``lambda >= 0`` with ``w = B + A lambda >= 0`` and
``lambda^T w = 0``.  For symmetric positive definite ``A`` (the class
produced by the contact discretization) the method always terminates with a
solution; ray termination signals a modeling error upstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from .errors import LcpFailure, NumericalError, ValidationError
from .timestep import Trajectory

if TYPE_CHECKING:
    from .model import ForceSignal, ReducedModel

STATUS_SOLVED = "solved"
STATUS_RAY = "ray_termination"
STATUS_CAP = "iteration_cap"

# Incremented by every reduced-operator factorization; lets tests assert that
# a contact run factors (M_hat + h^2 K_hat) exactly once.
_FACTORIZATION_COUNT = 0


def factorization_count() -> int:
    return _FACTORIZATION_COUNT


@dataclass(frozen=True)
class LcpProblem:
    a_matrix: np.ndarray
    b_vector: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_matrix, dtype=float)
        b = np.asarray(self.b_vector, dtype=float).ravel()
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "b_vector", b)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValidationError("LCP matrix must be square with at least one row")
        if b.shape[0] != a.shape[0]:
            raise ValidationError("LCP vector length must match the matrix size")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValidationError("LCP data must be finite")

    @property
    def m(self) -> int:
        return self.a_matrix.shape[0]


@dataclass(frozen=True)
class LcpSolution:
    multipliers: np.ndarray
    slack: np.ndarray
    status: str
    pivot_count: int


def _lexico_min(rows: np.ndarray, candidates: np.ndarray) -> int:
    """Index (into ``candidates``) of the lexicographically smallest row."""
    best = candidates[0]
    for i in candidates[1:]:
        diff = rows[i] - rows[best]
        nz = np.nonzero(diff)[0]
        if nz.size and diff[nz[0]] < 0.0:
            best = i
    return int(best)


def lemke_solve(problem: LcpProblem) -> LcpSolution:
    """Complementary pivoting with a covering vector of ones.

    Degenerate ratio ties are broken lexicographically (the w-block of the
    tableau tracks the basis inverse), which guarantees termination for the
    SPD class.  The pivot zero-threshold scales with ``||A||`` so the
    solution set is invariant under a positive rescaling of (A, B).
    """
    a = problem.a_matrix
    b = problem.b_vector
    m = problem.m
    if np.all(b >= 0.0):
        return LcpSolution(multipliers=np.zeros(m), slack=b.copy(),
                           status=STATUS_SOLVED, pivot_count=0)

    tol = 1e-12 * np.abs(a).max()
    max_pivots = 50 * m
    z0 = 2 * m

    # Tableau columns: [w_0..w_{m-1} | lambda_0..lambda_{m-1} | z0 | rhs]
    tableau = np.empty((m, 2 * m + 2))
    tableau[:, :m] = np.eye(m)
    tableau[:, m:2 * m] = -a
    tableau[:, z0] = -1.0
    tableau[:, 2 * m + 1] = b
    basis = list(range(m))

    def pivot(row: int, col: int):
        tableau[row] /= tableau[row, col]
        for i in range(m):
            if i != row and tableau[i, col] != 0.0:
                tableau[i] -= tableau[i, col] * tableau[row]

    # Phase start: z0 enters at the most negative rhs (lexicographic ties).
    ratio_rows = np.hstack([tableau[:, [2 * m + 1]], tableau[:, :m]])
    row = _lexico_min(ratio_rows, np.arange(m))
    pivot(row, z0)
    entering = m + basis[row]
    basis[row] = z0
    pivots = 1

    while pivots < max_pivots:
        col_vals = tableau[:, entering]
        candidates = np.nonzero(col_vals > tol)[0]
        if candidates.size == 0:
            return _extract(tableau, basis, a, b, STATUS_RAY, pivots)
        ratio_rows = np.full((m, m + 1), np.inf)
        ratio_rows[candidates] = (
            np.hstack([tableau[:, [2 * m + 1]], tableau[:, :m]])[candidates]
            / col_vals[candidates, None]
        )
        row = _lexico_min(ratio_rows, candidates)
        leaving = basis[row]
        pivot(row, entering)
        basis[row] = entering
        pivots += 1
        if leaving == z0:
            return _extract(tableau, basis, a, b, STATUS_SOLVED, pivots)
        entering = leaving + m if leaving < m else leaving - m

    return _extract(tableau, basis, a, b, STATUS_CAP, pivots)


def _extract(tableau, basis, a, b, status, pivots) -> LcpSolution:
    m = a.shape[0]
    lam = np.zeros(m)
    rhs = tableau[:, 2 * m + 1]
    for row, var in enumerate(basis):
        if m <= var < 2 * m:
            lam[var - m] = max(rhs[row], 0.0)
    slack = b + a @ lam
    return LcpSolution(multipliers=lam, slack=slack, status=status, pivot_count=pivots)


def complementarity_residual(multipliers: np.ndarray, gaps: np.ndarray) -> float:
    """Scaled complementarity defect ``|lambda^T g| / max(1, ||lambda|| ||g||)``."""
    lam = np.asarray(multipliers, dtype=float)
    g = np.asarray(gaps, dtype=float)
    scale = max(1.0, float(la.norm(lam) * la.norm(g)))
    return float(abs(lam @ g)) / scale


def _pad_constraints(c_b: np.ndarray, dim: int) -> np.ndarray:
    m, nb = c_b.shape
    padded = np.zeros((m, dim))
    padded[:, :nb] = c_b
    return padded


def _factor_reduced(m_hat: np.ndarray, k_hat: np.ndarray, h: float):
    global _FACTORIZATION_COUNT
    lhs = m_hat + h * h * k_hat
    try:
        factor = la.cho_factor(lhs)
    except la.LinAlgError as exc:
        raise NumericalError(
            f"reduced iteration matrix M + h^2 K is not positive definite: {exc}"
        ) from exc
    _FACTORIZATION_COUNT += 1
    return factor


def assemble_lcp_matrix(m_hat: np.ndarray, k_hat: np.ndarray,
                        c_b: np.ndarray, h: float) -> np.ndarray:
    """LCP matrix ``A = h^2 C_B (M + h^2 K)^{-1} C_B^T`` (boundary block only)."""
    m_hat = np.asarray(m_hat, dtype=float)
    k_hat = np.asarray(k_hat, dtype=float)
    c_b = np.atleast_2d(np.asarray(c_b, dtype=float))
    factor = _factor_reduced(m_hat, k_hat, h)
    padded = _pad_constraints(c_b, m_hat.shape[0])
    x = la.cho_solve(factor, padded.T)
    a = h * h * (padded @ x)
    a = 0.5 * (a + a.T)
    if np.linalg.matrix_rank(c_b) < c_b.shape[0]:
        warnings.warn("constraint matrix is rank deficient; the LCP matrix is "
                      "only positive semidefinite", stacklevel=2)
    return a


def assemble_lcp_rhs(model: ReducedModel, h: float, f_hat: np.ndarray,
                     q_prev: np.ndarray, q_prev2: np.ndarray) -> np.ndarray:
    """LCP vector ``B_i = C_B (M + h^2 K)^{-1} (h^2 f_i + 2 M q_{i-1} - M q_{i-2}) + b``."""
    if model.constraints is None:
        raise ValidationError("reduced model carries no contact constraints")
    factor = _factor_reduced(model.m_hat, model.k_hat, h)
    return _lcp_rhs(model, factor, h, f_hat, q_prev, q_prev2)


def _lcp_rhs(model, factor, h, f_hat, q_prev, q_prev2) -> np.ndarray:
    rhs = h * h * np.asarray(f_hat, dtype=float) \
        + model.m_hat @ (2.0 * np.asarray(q_prev, dtype=float)
                         - np.asarray(q_prev2, dtype=float))
    u = la.cho_solve(factor, rhs)
    c_b = model.constraints.c_matrix
    return c_b @ u[:model.n_boundary] + model.constraints.offsets


def step_reduced(model: ReducedModel, h: float, f_hat: np.ndarray,
                 q_prev: np.ndarray, q_prev2: np.ndarray,
                 multipliers: np.ndarray) -> np.ndarray:
    """One implicit-Euler step of the reduced system with known contact forces."""
    lam = np.asarray(multipliers, dtype=float)
    if np.any(lam < 0.0):
        raise ValidationError("contact multipliers must be nonnegative")
    factor = _factor_reduced(model.m_hat, model.k_hat, h)
    return _step(model, factor, h, f_hat, q_prev, q_prev2, lam)


def _step(model, factor, h, f_hat, q_prev, q_prev2, lam) -> np.ndarray:
    padded = _pad_constraints(model.constraints.c_matrix, model.dim)
    rhs = h * h * np.asarray(f_hat, dtype=float) \
        + h * h * (padded.T @ lam) \
        + model.m_hat @ (2.0 * np.asarray(q_prev, dtype=float)
                         - np.asarray(q_prev2, dtype=float))
    return la.cho_solve(factor, rhs)


@dataclass
class ContactRunDiagnostics:
    """Per-run bookkeeping for a reduced contact simulation."""

    pivot_counts: np.ndarray
    max_complementarity: float
    max_gap_violation: float
    factorizations: int
    lcp_dim: int

    def as_dict(self) -> dict:
        return {
            "lcp_dim": self.lcp_dim,
            "factorizations": self.factorizations,
            "max_complementarity": self.max_complementarity,
            "max_gap_violation": self.max_gap_violation,
            "total_pivots": int(self.pivot_counts.sum()),
            "max_pivots_per_step": int(self.pivot_counts.max()),
        }


def simulate_contact_rom(
    model: ReducedModel,
    force: ForceSignal,
    q0: np.ndarray,
    v0: np.ndarray,
    h: float,
    steps: int,
    t0: float = 0.0,
) -> tuple[Trajectory, Trajectory, ContactRunDiagnostics]:
    """Reduced dynamic contact simulation with per-step LCP solves.

    ``q0`` and ``v0`` are full-order vectors; the reduced initial state uses
    the consistent inverse of the lifting relation and forces are reduced as
    ``f_hat = V^T f``.  The LCP matrix is assembled from a single
    factorization; each step solves the LCP by Lemke's method and advances
    the displacement with the resolved update.  Returns the reduced
    trajectory (with full-dimension multipliers), the lifted full-order
    trajectory, and run diagnostics.
    """
    if model.constraints is None:
        raise ValidationError("reduced model carries no contact constraints")
    if h <= 0.0 or steps < 2:
        raise ValidationError("need a positive step size and at least two steps")
    q0 = np.asarray(q0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    n_full = model.global_basis.shape[0]
    if q0.shape != (n_full,) or v0.shape != (n_full,):
        raise ValidationError(f"initial data must be full-order vectors of length {n_full}")

    dim = model.dim
    m = model.constraints.m
    k = steps + 1
    basis = model.global_basis

    factor = _factor_reduced(model.m_hat, model.k_hat, h)
    padded = _pad_constraints(model.constraints.c_matrix, dim)
    x_cols = la.cho_solve(factor, padded.T)
    a_lcp = h * h * (padded @ x_cols)
    a_lcp = 0.5 * (a_lcp + a_lcp.T)

    states = np.empty((dim, k))
    forces_hat = np.empty((dim, k))
    forces_full = np.empty((n_full, k))
    multipliers = np.zeros((m, k))
    pivot_counts = np.zeros(k, dtype=int)

    states[:, 0] = model.reduce_state(q0)
    states[:, 1] = states[:, 0] + h * model.reduce_state(v0)
    for i in (0, 1):
        f = force(t0 + i * h)
        forces_full[:, i] = f
        forces_hat[:, i] = basis.T @ f

    max_comp = 0.0
    min_gap = np.inf
    b = model.constraints.offsets
    c_b = model.constraints.c_matrix
    for i in range(2, k):
        t = t0 + i * h
        f = force(t)
        forces_full[:, i] = f
        f_hat = basis.T @ f
        forces_hat[:, i] = f_hat

        rhs_free = h * h * f_hat + model.m_hat @ (2.0 * states[:, i - 1] - states[:, i - 2])
        u = la.cho_solve(factor, rhs_free)
        b_lcp = c_b @ u[:model.n_boundary] + b
        solution = lemke_solve(LcpProblem(a_lcp, b_lcp))
        if solution.status != STATUS_SOLVED:
            raise LcpFailure(
                f"LCP solve failed with status '{solution.status}' at step {i}",
                status=solution.status, step=i,
            )
        lam = solution.multipliers
        multipliers[:, i] = lam
        pivot_counts[i] = solution.pivot_count
        states[:, i] = u + h * h * (x_cols @ lam)

        gap = c_b @ states[:model.n_boundary, i] + b
        min_gap = min(min_gap, float(gap.min()))
        max_comp = max(max_comp, complementarity_residual(lam, gap))

    lifted_states = basis @ states
    reduced = Trajectory(t0=t0, h=h, states=states, forces=forces_hat,
                         multipliers=multipliers)
    lifted = Trajectory(t0=t0, h=h, states=lifted_states, forces=forces_full,
                        multipliers=multipliers)
    diagnostics = ContactRunDiagnostics(
        pivot_counts=pivot_counts,
        max_complementarity=max_comp,
        max_gap_violation=max(0.0, -min_gap) if np.isfinite(min_gap) else 0.0,
        factorizations=1,
        lcp_dim=m,
    )
    return reduced, lifted, diagnostics
