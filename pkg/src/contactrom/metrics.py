"""Relative error curves and contact-solution quality diagnostics.

The canonical error convention divides the squared Euclidean norm of the
pointwise difference by the maximum squared norm of the reference over the
whole horizon, which keeps the curve finite near zero crossings.  An
unsquared variant is available for comparison with other conventions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import ValidationError
from .lcp import complementarity_residual
from .model import ContactConstraints
from .timestep import Trajectory


@dataclass(frozen=True)
class ErrorCurve:
    times: np.ndarray
    values: np.ndarray
    kind: str
    norm_convention: str = "squared"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape:
            raise ValidationError("times and values must have equal length")
        if np.any(values < 0.0):
            raise ValidationError("error values cannot be negative")
        if self.kind not in ("displacement", "multiplier"):
            raise ValidationError(f"unknown error kind '{self.kind}'")
        if self.norm_convention not in ("squared", "unsquared"):
            raise ValidationError(f"unknown norm convention '{self.norm_convention}'")

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def _check_grids(reference: Trajectory, approx: Trajectory):
    if (reference.h != approx.h or reference.t0 != approx.t0
            or reference.n_steps != approx.n_steps):
        raise ValidationError("reference and approximation live on different grids")
    if reference.n_dof != approx.n_dof:
        raise ValidationError("reference and approximation have different dimensions")


def _relative_curve(ref: np.ndarray, app: np.ndarray, times, kind, squared) -> ErrorCurve:
    denom = float((ref * ref).sum(axis=0).max())
    if denom == 0.0:
        raise ValidationError(f"all-zero reference {kind} trajectory; the "
                              "relative error is undefined")
    diff = ref - app
    values = (diff * diff).sum(axis=0) / denom
    convention = "squared"
    if not squared:
        values = np.sqrt(values)
        convention = "unsquared"
    return ErrorCurve(times=times, values=values, kind=kind,
                      norm_convention=convention)


def relative_error_curves(
    reference: Trajectory,
    approx: Trajectory,
    rows=None,
    squared: bool = True,
) -> tuple[ErrorCurve, ErrorCurve | None]:
    """Displacement (and, when present, multiplier) error curves.

    ``rows`` restricts the displacement comparison to a row subset, e.g. the
    boundary block or the interior block of the lifted approximation.
    """
    _check_grids(reference, approx)
    ref_states = reference.states
    app_states = approx.states
    if rows is not None:
        rows = np.asarray(rows, dtype=int)
        ref_states = ref_states[rows]
        app_states = app_states[rows]
    displacement = _relative_curve(ref_states, app_states, reference.times,
                                   "displacement", squared)
    multiplier = None
    if reference.multipliers is not None and approx.multipliers is not None:
        if reference.multipliers.shape != approx.multipliers.shape:
            raise ValidationError("multiplier dimensions differ between the runs")
        multiplier = _relative_curve(reference.multipliers, approx.multipliers,
                                     reference.times, "multiplier", squared)
    return displacement, multiplier


@dataclass
class ContactReport:
    """Post-hoc check of the discrete contact conditions along a trajectory."""

    max_gap_violation: float
    max_negative_multiplier: float
    max_complementarity: float
    onsets: list = field(default_factory=list)
    releases: list = field(default_factory=list)

    @property
    def events(self) -> list:
        return sorted([(i, "onset") for i in self.onsets]
                      + [(i, "release") for i in self.releases])

    def as_dict(self) -> dict:
        return {
            "max_gap_violation": self.max_gap_violation,
            "max_negative_multiplier": self.max_negative_multiplier,
            "max_complementarity": self.max_complementarity,
            "onsets": self.onsets,
            "releases": self.releases,
        }


def contact_diagnostics(trajectory: Trajectory,
                        constraints: ContactConstraints) -> ContactReport:
    """Evaluate gap, sign and complementarity conditions on a contact run.

    Contact events are the steps where any multiplier becomes positive
    (onset) or the active set returns to empty (release).
    """
    if trajectory.multipliers is None:
        raise ValidationError("trajectory carries no multipliers to diagnose")
    nb = constraints.n_boundary
    if trajectory.n_dof < nb:
        raise ValidationError("trajectory has fewer DOFs than the constraint width")
    lam = trajectory.multipliers
    gaps = constraints.c_matrix @ trajectory.states[:nb] + constraints.offsets[:, None]

    max_gap_violation = max(0.0, float(-gaps.min()))
    max_negative = max(0.0, float(-lam.min()))
    max_comp = max(
        (complementarity_residual(lam[:, i], gaps[:, i])
         for i in range(lam.shape[1])),
        default=0.0,
    )

    active = np.any(lam > 0.0, axis=0)
    onsets = [int(i) for i in range(active.size)
              if active[i] and (i == 0 or not active[i - 1])]
    releases = [int(i) for i in range(1, active.size)
                if not active[i] and active[i - 1]]
    return ContactReport(
        max_gap_violation=max_gap_violation,
        max_negative_multiplier=max_negative,
        max_complementarity=float(max_comp),
        onsets=onsets,
        releases=releases,
    )
