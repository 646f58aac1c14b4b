"""Two-step implicit-Euler time integration for the full-order problems.

The scheme replaces the acceleration by the backward finite difference,
so each step solves ``(M + h^2 K) q_{i} = h^2 f_i + 2 M q_{i-1} - M q_{i-2}``
with a Cholesky factorization computed once per run.  Startup uses one
explicit Euler step: ``q_1 = q_0 + h v_0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import LcpFailure, NumericalError, ValidationError
from .model import ContactConstraints, ForceSignal, PartitionedSystem

GAP_TOLERANCE = 1e-9  # meters, absolute
COMPLEMENTARITY_TOLERANCE = 1e-8  # scaled


@dataclass(frozen=True)
class Trajectory:
    """Equidistant time series of states, force samples and optional multipliers."""

    t0: float
    h: float
    states: np.ndarray
    forces: np.ndarray | None = None
    multipliers: np.ndarray | None = None

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        object.__setattr__(self, "states", states)
        if self.h <= 0.0:
            raise ValidationError("step size must be positive")
        if states.shape[1] < 3:
            raise ValidationError("a two-step scheme needs at least three columns")
        if self.forces is not None:
            forces = np.atleast_2d(np.asarray(self.forces, dtype=float))
            object.__setattr__(self, "forces", forces)
            if forces.shape != states.shape:
                raise ValidationError("force samples must match the state shape")
        if self.multipliers is not None:
            lam = np.atleast_2d(np.asarray(self.multipliers, dtype=float))
            object.__setattr__(self, "multipliers", lam)
            if lam.shape[1] != states.shape[1]:
                raise ValidationError("multiplier column count must match the states")

    @property
    def n_dof(self) -> int:
        return self.states.shape[0]

    @property
    def n_steps(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps)


def _check_initial(name: str, vec: np.ndarray, n: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=float).ravel()
    if vec.shape != (n,):
        raise ValidationError(f"{name} must have length {n}, got {vec.shape}")
    return vec


def _two_step_run(mass, stiffness, sample, q0, v0, h, steps, t0):
    if h <= 0.0:
        raise ValidationError("step size must be positive")
    if steps < 2:
        raise ValidationError("need at least two steps")
    n = mass.shape[0]
    try:
        factor = la.cho_factor(mass + h * h * stiffness)
    except la.LinAlgError as exc:  # impossible for SPD inputs, reported defensively
        raise NumericalError(f"iteration matrix M + h^2 K is singular: {exc}") from exc

    k = steps + 1
    states = np.empty((n, k))
    forces = np.empty((n, k))
    states[:, 0] = q0
    states[:, 1] = q0 + h * v0
    forces[:, 0] = sample(t0)
    forces[:, 1] = sample(t0 + h)
    for i in range(2, k):
        f = sample(t0 + i * h)
        forces[:, i] = f
        rhs = h * h * f + mass @ (2.0 * states[:, i - 1] - states[:, i - 2])
        states[:, i] = la.cho_solve(factor, rhs)
    return states, forces


def simulate_free(system: PartitionedSystem, force: ForceSignal,
                  q0, v0, h: float, steps: int, t0: float = 0.0) -> Trajectory:
    """Integrate the contact-free full-order system."""
    q0 = _check_initial("q0", q0, system.n)
    v0 = _check_initial("v0", v0, system.n)
    states, forces = _two_step_run(system.mass, system.stiffness, force,
                                   q0, v0, h, steps, t0)
    return Trajectory(t0=t0, h=h, states=states, forces=forces)


def simulate_fixed_boundary(system: PartitionedSystem, force: ForceSignal,
                            q0_interior, v0_interior, h: float, steps: int,
                            t0: float = 0.0) -> Trajectory:
    """Integrate the interior subsystem with the boundary DOFs held fixed.

    The force signal is the full-order one; only its interior block drives
    the run.  The returned states are interior-only.
    """
    nb = system.n_boundary
    q0 = _check_initial("q0_interior", q0_interior, system.n_interior)
    v0 = _check_initial("v0_interior", v0_interior, system.n_interior)
    _, _, _, m_ii = system.mass_blocks()
    _, _, _, k_ii = system.stiffness_blocks()

    def interior_sample(t):
        return force(t)[nb:]

    states, forces = _two_step_run(m_ii, k_ii, interior_sample, q0, v0, h, steps, t0)
    return Trajectory(t0=t0, h=h, states=states, forces=forces)


def solve_contact_fom(system: PartitionedSystem, constraints: ContactConstraints,
                      force: ForceSignal, q0, v0, h: float, steps: int,
                      t0: float = 0.0) -> Trajectory:
    """Reference full-order contact solution via the per-step LCP.

    The LCP matrix ``A = h^2 C (M + h^2 K)^{-1} C^T`` is assembled from one
    factorization; each step solves the complementarity problem for the
    contact forces and applies the resolved displacement update.  The output
    satisfies ``gap >= -1e-9``, ``lambda >= 0`` and a scaled complementarity
    residual below 1e-8 at every step.
    """
    # Imported here: the lcp module imports Trajectory from this module.
    from .lcp import LcpProblem, complementarity_residual, lemke_solve

    if constraints.n_boundary != system.n_boundary:
        raise ValidationError(
            f"constraints act on {constraints.n_boundary} boundary DOFs but the "
            f"system has {system.n_boundary}"
        )
    q0 = _check_initial("q0", q0, system.n)
    v0 = _check_initial("v0", v0, system.n)
    if h <= 0.0 or steps < 2:
        raise ValidationError("need a positive step size and at least two steps")

    n = system.n
    m = constraints.m
    c_full = np.zeros((m, n))
    c_full[:, :system.n_boundary] = constraints.c_matrix
    b = constraints.offsets

    factor = la.cho_factor(system.mass + h * h * system.stiffness)
    x_cols = la.cho_solve(factor, c_full.T)
    a_lcp = h * h * (c_full @ x_cols)
    a_lcp = 0.5 * (a_lcp + a_lcp.T)

    k = steps + 1
    states = np.empty((n, k))
    forces = np.empty((n, k))
    multipliers = np.zeros((m, k))
    states[:, 0] = q0
    states[:, 1] = q0 + h * v0
    forces[:, 0] = force(t0)
    forces[:, 1] = force(t0 + h)

    for i in range(2, k):
        t = t0 + i * h
        f = force(t)
        forces[:, i] = f
        rhs_free = h * h * f + system.mass @ (2.0 * states[:, i - 1] - states[:, i - 2])
        u = la.cho_solve(factor, rhs_free)
        b_lcp = c_full @ u + b
        solution = lemke_solve(LcpProblem(a_lcp, b_lcp))
        if solution.status != "solved":
            raise LcpFailure(
                f"full-order LCP failed with status '{solution.status}' at step {i}",
                status=solution.status, step=i,
            )
        lam = solution.multipliers
        multipliers[:, i] = lam
        states[:, i] = u + h * h * (x_cols @ lam)

        gap = c_full @ states[:, i] + b
        if gap.min() < -GAP_TOLERANCE:
            raise NumericalError(
                f"gap violation {gap.min():.3e} m at step {i} exceeds {GAP_TOLERANCE:.0e}"
            )
        if complementarity_residual(lam, gap) > COMPLEMENTARITY_TOLERANCE:
            raise NumericalError(f"complementarity residual too large at step {i}")

    return Trajectory(t0=t0, h=h, states=states, forces=forces, multipliers=multipliers)
