"""Snapshot assembly, numerical differentiation and POD bases.

The training data comes from two runs under the same load: one free and one
with the boundary DOFs fixed.  Second derivatives use central differences,
so the first and last column of every companion matrix are trimmed together.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from .errors import ValidationError
from .timestep import Trajectory

if TYPE_CHECKING:
    from .coupling import CouplingMatrix


@dataclass(frozen=True)
class SnapshotSet:
    """Displacement and force snapshots of the two training simulations.

    ``q_b``/``q_i``/``f_b``/``f_i`` come from the free run split at the
    boundary/interior divide; ``q1``/``f1_i`` from the fixed-boundary run.
    Both runs share the load, so ``f_i`` and ``f1_i`` agree exactly.
    """

    q_b: np.ndarray
    q_i: np.ndarray
    f_b: np.ndarray
    f_i: np.ndarray
    q1: np.ndarray
    f1_i: np.ndarray
    h: float

    def __post_init__(self):
        for name in ("q_b", "q_i", "f_b", "f_i", "q1", "f1_i"):
            object.__setattr__(self, name,
                               np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        if self.h <= 0.0:
            raise ValidationError("snapshot step size must be positive")
        k = self.q_b.shape[1]
        for name in ("q_i", "f_b", "f_i", "q1", "f1_i"):
            if getattr(self, name).shape[1] != k:
                raise ValidationError(f"snapshot matrix {name} has a mismatched column count")
        if self.q_i.shape[0] != self.q1.shape[0]:
            raise ValidationError("free-run interior rows and fixed-run rows differ")
        if self.f_i.shape != self.f1_i.shape or not np.array_equal(self.f_i, self.f1_i):
            raise ValidationError(
                "interior force snapshots of the two runs must agree exactly; "
                "both simulations must use the same load"
            )

    @property
    def n_boundary(self) -> int:
        return self.q_b.shape[0]

    @property
    def n_interior(self) -> int:
        return self.q_i.shape[0]

    @property
    def n_samples(self) -> int:
        return self.q_b.shape[1]


@dataclass(frozen=True)
class PodBasis:
    """Truncated left singular vectors with the full singular value vector."""

    basis: np.ndarray
    singular_values: np.ndarray
    rank: int

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        sv = np.asarray(self.singular_values, dtype=float).ravel()
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "singular_values", sv)
        if basis.shape[1] != self.rank:
            raise ValidationError("basis column count must equal the rank")
        gram = basis.T @ basis
        if la.norm(gram - np.eye(self.rank)) > 1e-12:
            raise ValidationError("POD basis columns must be orthonormal")
        if np.any(sv < 0.0) or np.any(np.diff(sv) > 0.0):
            raise ValidationError("singular values must be nonnegative and nonincreasing")


@dataclass(frozen=True)
class ReducedTrainingData:
    """Trimmed reduced snapshots for the operator inference problem."""

    q_hat: np.ndarray
    q_ddot_hat: np.ndarray
    f_hat: np.ndarray
    h: float

    def __post_init__(self):
        for name in ("q_hat", "q_ddot_hat", "f_hat"):
            object.__setattr__(self, name,
                               np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        k = self.q_hat.shape[1]
        if k < 1:
            raise ValidationError("reduced training data must keep at least one column")
        if self.q_ddot_hat.shape != self.q_hat.shape or self.f_hat.shape != self.q_hat.shape:
            raise ValidationError("reduced training matrices must share one shape")
        if self.h <= 0.0:
            raise ValidationError("step size must be positive")

    @property
    def dim(self) -> int:
        return self.q_hat.shape[0]


def collect(free_run: Trajectory, fixed_run: Trajectory, n_boundary: int) -> SnapshotSet:
    """Split the free run at the boundary/interior divide and attach the fixed run."""
    if free_run.h != fixed_run.h:
        raise ValidationError("the two training runs must share the time step")
    if free_run.n_steps != fixed_run.n_steps:
        raise ValidationError("the two training runs must share the grid length")
    if free_run.forces is None or fixed_run.forces is None:
        raise ValidationError("training runs must carry force samples")
    if not 1 <= n_boundary < free_run.n_dof:
        raise ValidationError("boundary size must leave at least one interior DOF")
    if fixed_run.n_dof != free_run.n_dof - n_boundary:
        raise ValidationError(
            f"fixed-boundary run has {fixed_run.n_dof} DOFs, expected "
            f"{free_run.n_dof - n_boundary} interior DOFs"
        )
    return SnapshotSet(
        q_b=free_run.states[:n_boundary].copy(),
        q_i=free_run.states[n_boundary:].copy(),
        f_b=free_run.forces[:n_boundary].copy(),
        f_i=free_run.forces[n_boundary:].copy(),
        q1=fixed_run.states.copy(),
        f1_i=fixed_run.forces.copy(),
        h=free_run.h,
    )


def second_derivatives(states: np.ndarray, h: float) -> np.ndarray:
    """Central-difference second derivatives; drops the first and last column.

    Callers must trim companion snapshot matrices to the same interior
    columns ``1 .. k-2``.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[1] < 3:
        raise ValidationError("need at least three columns for central differences")
    if h <= 0.0:
        raise ValidationError("step size must be positive")
    return (states[:, 2:] - 2.0 * states[:, 1:-1] + states[:, :-2]) / (h * h)


def pod(data: np.ndarray, rank_or_tolerance) -> PodBasis:
    """Truncated POD of a snapshot matrix.

    An integer argument requests that many modes; a float in (0, 1) is a
    relative singular value tolerance, keeping the smallest ``r`` with
    ``sigma_{r+1} / sigma_1 <= tol``.  Basis columns are sign-fixed.
    """
    from .model import fix_signs

    data = np.atleast_2d(np.asarray(data, dtype=float))
    if la.norm(data) == 0.0:
        raise ValidationError("cannot build a POD basis from all-zero data")
    u, s, _ = la.svd(data, full_matrices=False)
    cutoff = max(data.shape) * np.finfo(float).eps * s[0]
    effective_rank = int(np.count_nonzero(s > cutoff))

    if isinstance(rank_or_tolerance, (int, np.integer)) and not isinstance(rank_or_tolerance, bool):
        rank = int(rank_or_tolerance)
        if rank < 1:
            raise ValidationError("requested rank must be at least 1")
        if rank > effective_rank:
            raise ValidationError(
                f"requested rank {rank} exceeds the effective rank {effective_rank}"
            )
    else:
        tol = float(rank_or_tolerance)
        if not 0.0 < tol < 1.0:
            raise ValidationError("singular value tolerance must lie in (0, 1)")
        rel = s / s[0]
        rank = 1
        while rank < rel.size and rel[rank] > tol:
            rank += 1
    return PodBasis(basis=fix_signs(u[:, :rank]), singular_values=s, rank=rank)


def reduce_interior_training_data(
    snapshots: SnapshotSet, interior_basis: PodBasis,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projected fixed-boundary data ``(Q1_hat, Q1_ddot_hat, F1_hat)``, trimmed."""
    v_i = interior_basis.basis
    if v_i.shape[0] != snapshots.n_interior:
        raise ValidationError("interior basis rows must match the interior DOF count")
    q1_hat = v_i.T @ snapshots.q1
    f1_hat = v_i.T @ snapshots.f1_i
    q1_ddot = second_derivatives(q1_hat, snapshots.h)
    return q1_hat[:, 1:-1], q1_ddot, f1_hat[:, 1:-1]


def reduce_training_data(
    snapshots: SnapshotSet,
    interior_basis: PodBasis,
    coupling: "CouplingMatrix",
) -> ReducedTrainingData:
    """Reduced global training data for the final inference problem.

    The lifting basis is not orthogonal, so the reduced displacements come
    from the direct relation (boundary rows pass through, interior rows from
    the fixed-boundary run), while forces project as ``V^T F``:

        Q_hat = [Q_B ; V_I^T Q1],   F_hat = [F_B + Phi^T F_I ; V_I^T F_I].
    """
    v_i = interior_basis.basis
    phi = np.atleast_2d(np.asarray(coupling.phi, dtype=float))
    if v_i.shape[0] != snapshots.n_interior or phi.shape[0] != snapshots.n_interior:
        raise ValidationError("interior basis and coupling rows must match n_interior")
    if phi.shape[1] != snapshots.n_boundary:
        raise ValidationError("coupling column count must match n_boundary")
    q_hat = np.vstack([snapshots.q_b, v_i.T @ snapshots.q1])
    f_hat = np.vstack([snapshots.f_b + phi.T @ snapshots.f_i, v_i.T @ snapshots.f_i])
    q_ddot = second_derivatives(q_hat, snapshots.h)
    return ReducedTrainingData(
        q_hat=q_hat[:, 1:-1],
        q_ddot_hat=q_ddot,
        f_hat=f_hat[:, 1:-1],
        h=snapshots.h,
    )
