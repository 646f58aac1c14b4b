"""Non-intrusive approximations of the boundary-to-interior coupling matrix.

Three routes are available: a least-squares fit in the full interior space,
the same fit in a POD-reduced space, and exact recovery from static modes.
All residuals are reported in the full interior space so the methods are
directly comparable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ValidationError
from .snapshots import SnapshotSet, pod

METHODS = ("full_lsq", "reduced_lsq", "static_modes")


@dataclass(frozen=True)
class CouplingMatrix:
    """Coupling block with its provenance and fit residual (0 for static modes)."""

    phi: np.ndarray
    method: str
    residual: float

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "phi", phi)
        if not np.all(np.isfinite(phi)):
            raise ValidationError("coupling matrix entries must be finite")
        if self.method not in METHODS:
            raise ValidationError(f"unknown coupling method '{self.method}'")
        if self.residual < 0.0:
            raise ValidationError("fit residual cannot be negative")

    @property
    def n_interior(self) -> int:
        return self.phi.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.phi.shape[1]


def _lsq_fit(target: np.ndarray, q_b: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of ``min || target - Phi Q_B ||_F`` via SVD."""
    sol, _, rank, _ = np.linalg.lstsq(q_b.T, target.T, rcond=None)
    if rank < q_b.shape[0]:
        warnings.warn(
            "boundary snapshot matrix is rank deficient; returning the "
            "minimum-norm coupling fit", stacklevel=3,
        )
    return sol.T


def coupling_full_lsq(snapshots: SnapshotSet) -> CouplingMatrix:
    """Fit ``Q_I - Q1 = Phi Q_B`` over the full interior space."""
    if snapshots.n_samples < snapshots.n_boundary:
        warnings.warn(
            "fewer snapshot columns than boundary DOFs; the coupling fit is "
            "underdetermined", stacklevel=2,
        )
    target = snapshots.q_i - snapshots.q1
    phi = _lsq_fit(target, snapshots.q_b)
    residual = la.norm(target - phi @ snapshots.q_b)
    return CouplingMatrix(phi=phi, method="full_lsq", residual=float(residual))


def coupling_reduced_lsq(snapshots: SnapshotSet, r2: int) -> CouplingMatrix:
    """Fit the coupling in the ``r2``-dimensional POD space of ``Q_I``.

    The projected fit ``min || V2^T (Q_I - Q1) - Phi_tilde Q_B ||`` is lifted
    back as ``Phi = V2 Phi_tilde``; because ``V2`` has orthonormal columns
    this also minimizes the full-space residual over range-restricted
    candidates.
    """
    v2 = pod(snapshots.q_i, int(r2)).basis
    target = snapshots.q_i - snapshots.q1
    phi_tilde = _lsq_fit(v2.T @ target, snapshots.q_b)
    phi = v2 @ phi_tilde
    residual = la.norm(target - phi @ snapshots.q_b)
    return CouplingMatrix(phi=phi, method="reduced_lsq", residual=float(residual))


def coupling_from_static_modes(modes: np.ndarray) -> CouplingMatrix:
    """Exact coupling from constrained-mode data (unit boundary displacements)."""
    modes = np.atleast_2d(np.asarray(modes, dtype=float))
    if modes.ndim != 2 or modes.size == 0:
        raise ValidationError("static mode matrix must be a nonempty 2-D array")
    return CouplingMatrix(phi=modes.copy(), method="static_modes", residual=0.0)
