"""SPD-constrained operator inference and global basis assembly.

The core solver minimizes ``|| M Qdd + K Q - F ||_F^2`` over symmetric
matrices with ``M >= eps I`` and ``K >= eps I``, optionally holding a shared
diagonal block of both operators fixed.  Fixed blocks are handled by
elimination, so the equality constraints are satisfied exactly.

The solver is a deterministic log-barrier path-following method on the free
matrix entries.  The iteration starts from the symmetrized unconstrained
least-squares solution with its eigenvalues clipped at the margin (pushed
slightly inside the cone); when that least-squares solution is already
feasible it is returned directly, being the exact constrained optimum.  The
final barrier weight certifies the returned objective through the duality
gap of the logarithmic barrier.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from .errors import SolverConvergenceError, ValidationError
from .snapshots import ReducedTrainingData, SnapshotSet

if TYPE_CHECKING:
    from .coupling import CouplingMatrix
    from .model import ContactConstraints, ReducedModel
    from .snapshots import PodBasis

MAX_ITERATIONS = 10_000
MU_SHRINK = 0.1
NEWTON_STAGE_TOL = 0.1
MAX_BACKTRACKS = 60
# Weight of the mass block in the least-squares tie-breaking geometry.
# Training data from slow structural loading pins the stiffness well but
# leaves mass directions nearly unobserved; pricing mass deviations higher
# resolves those directions toward a small mass operator instead of letting
# them absorb the discretization residual.  Well-conditioned data determines
# both operators uniquely, so the weight only acts on weak directions.
MASS_SHRINK_WEIGHT = 1e2
# Relative singular value cutoff of the least-squares solve.  Directions
# this weak carry data at the level of the time-discretization residual;
# fitting them would trade a below-tolerance objective gain for operator
# entries of arbitrary size.  The discarded objective mass stays within the
# solver's optimality tolerance of 1e-8 * ||F||^2.
LSQ_RCOND = 1e-4
# Unobserved (truncated) directions are completed toward a light-mass /
# stiff-stiffness anchor: spurious modes then sit far above the data's
# frequency band, where the implicit-Euler integrator damps them out.  The
# stiffness anchor floors the eigenvalues at this fraction of the observed
# spectral norm.
NULL_STIFFNESS_FLOOR = 0.1


def default_margin(data_matrix: np.ndarray) -> float:
    """Default strict-positivity margin: 1e-8 at the data-matrix scale."""
    data_matrix = np.atleast_2d(np.asarray(data_matrix, dtype=float))
    scale = float(la.norm(data_matrix, 2)) if data_matrix.size else 0.0
    return 1e-8 * max(1.0, scale)


@dataclass(frozen=True)
class SpdLsqProblem:
    """Stacked least-squares data with SPD margins and optional fixed blocks.

    ``data`` is ``[Qdd^T, Q^T]`` (one row per snapshot column), ``rhs`` is
    ``F^T``.  ``equality_span`` names a half-open index range whose diagonal
    block is fixed to ``mass_target`` / ``stiffness_target`` in the two
    operators.
    """

    data: np.ndarray
    rhs: np.ndarray
    epsilon: float
    equality_span: tuple[int, int] | None = None
    mass_target: np.ndarray | None = None
    stiffness_target: np.ndarray | None = None

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        rhs = np.atleast_2d(np.asarray(self.rhs, dtype=float))
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "rhs", rhs)
        if not (np.all(np.isfinite(data)) and np.all(np.isfinite(rhs))):
            raise ValidationError("inference data must be finite")
        if data.shape[1] % 2 != 0:
            raise ValidationError("data matrix must stack [Qdd^T, Q^T] side by side")
        d = data.shape[1] // 2
        if rhs.shape != (data.shape[0], d):
            raise ValidationError(
                f"rhs must be {data.shape[0]}x{d}, got {rhs.shape}"
            )
        if self.epsilon <= 0.0:
            raise ValidationError("SPD margin must be positive")
        if self.equality_span is not None:
            lo, hi = self.equality_span
            if not 0 <= lo < hi <= d:
                raise ValidationError(f"equality span {self.equality_span} out of range")
            size = hi - lo
            for name, target in (("mass", self.mass_target),
                                 ("stiffness", self.stiffness_target)):
                if target is None:
                    raise ValidationError("equality span requires both target blocks")
                target = np.asarray(target, dtype=float)
                object.__setattr__(self, f"{name}_target", target)
                if target.shape != (size, size):
                    raise ValidationError(f"{name} target block must be {size}x{size}")
                if la.norm(target - target.T) > 1e-10 * max(1.0, la.norm(target)):
                    raise ValidationError(f"{name} target block must be symmetric")
                lam = float(la.eigvalsh(target)[0])
                if lam < self.epsilon - 1e-8 * la.norm(target, 2) - 1e-14:
                    raise ValidationError(
                        f"{name} target block is infeasible: smallest eigenvalue "
                        f"{lam:.6e} lies below the margin {self.epsilon:.6e}"
                    )

    @property
    def dim(self) -> int:
        return self.data.shape[1] // 2


@dataclass
class SpdDiagnostics:
    """Solver report: objective, optimality certificate and iteration count."""

    objective: float
    initial_objective: float
    duality_gap: float
    kkt_residual: float
    iterations: int
    epsilon: float
    data_rank: int
    converged: bool
    used_fast_path: bool

    def as_dict(self) -> dict:
        return {
            "objective": self.objective,
            "initial_objective": self.initial_objective,
            "duality_gap": self.duality_gap,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "epsilon": self.epsilon,
            "data_rank": self.data_rank,
            "converged": self.converged,
            "used_fast_path": self.used_fast_path,
        }


def _free_pairs(d: int, span: tuple[int, int] | None):
    """Upper-triangular index pairs outside the fixed diagonal block."""
    pairs = []
    for a in range(d):
        for b in range(a, d):
            if span is not None and span[0] <= a < span[1] and span[0] <= b < span[1]:
                continue
            pairs.append((a, b))
    ia = np.array([p[0] for p in pairs], dtype=int)
    ib = np.array([p[1] for p in pairs], dtype=int)
    weights = np.where(ia == ib, 1.0, 2.0)
    return ia, ib, weights


def _basis_columns(ia, ib, data: np.ndarray) -> np.ndarray:
    """Columns ``vec(S_ab @ data)`` for the symmetric basis matrices."""
    d, k = data.shape[0], data.shape[1]
    cols = np.zeros((d * k, ia.size))
    for idx in range(ia.size):
        a, b = ia[idx], ib[idx]
        block = np.zeros((d, k))
        block[a] += data[b]
        if a != b:
            block[b] += data[a]
        cols[:, idx] = block.ravel()
    return cols


def _materialize(theta, ia, ib, base: np.ndarray) -> np.ndarray:
    out = base.copy()
    out[ia, ib] = theta
    out[ib, ia] = theta
    return out


def _clip_spd(a: np.ndarray, floor: float) -> np.ndarray:
    vals, vecs = la.eigh(a)
    return (vecs * np.maximum(vals, floor)) @ vecs.T


def _vec_basis(ia, ib, d: int) -> np.ndarray:
    """Rows ``vec(S_ab)`` of the symmetric basis matrices (p x d^2)."""
    p = ia.size
    rows = np.zeros((p, d * d))
    for i in range(p):
        a, b = ia[i], ib[i]
        rows[i, a * d + b] = 1.0
        rows[i, b * d + a] = 1.0
    return rows


def solve_spd_lsq(problem: SpdLsqProblem):
    """Solve the SPD-constrained least-squares problem.

    Returns ``((M, K), diagnostics)``.  The result is deterministic for
    identical inputs; the total Newton iteration count is capped at 10 000
    and :class:`SolverConvergenceError` (carrying the diagnostics) is raised
    beyond that.
    """
    d = problem.dim
    eps = problem.epsilon
    qdd = problem.data[:, :d].T.copy()
    q = problem.data[:, d:].T.copy()
    f = problem.rhs.T.copy()

    data_rank = int(np.linalg.matrix_rank(problem.data)) if problem.data.size else 0
    if data_rank < 2 * d:
        warnings.warn(
            f"data matrix rank {data_rank} is below 2 x dim = {2 * d}; the "
            "inference problem is underdetermined", stacklevel=2,
        )

    # Internal scaling: the objective is unchanged under (M/s)(s A) = M A.
    # The stiffness block is normalized to unit spectral norm; the mass
    # block additionally carries the shrinkage weight (see above).
    alpha = float(la.norm(qdd, 2)) if la.norm(qdd) > 0 else 1.0
    alpha *= MASS_SHRINK_WEIGHT
    beta = float(la.norm(q, 2)) if la.norm(q) > 0 else 1.0
    qdd_s = qdd / alpha
    q_s = q / beta
    eps_m = alpha * eps
    eps_k = beta * eps

    span = problem.equality_span
    base_m = np.zeros((d, d))
    base_k = np.zeros((d, d))
    if span is not None:
        lo, hi = span
        base_m[lo:hi, lo:hi] = alpha * problem.mass_target
        base_k[lo:hi, lo:hi] = beta * problem.stiffness_target

    ia, ib, wts = _free_pairs(d, span)
    p = ia.size
    jac = np.hstack([_basis_columns(ia, ib, qdd_s), _basis_columns(ia, ib, q_s)])
    c = (f - base_m @ qdd_s - base_k @ q_s).ravel()

    # Noise-floor truncation: directions below LSQ_RCOND carry only the
    # discretization residual of the training data.  All solver stages work
    # on the truncated operator so the weak directions stay at their
    # anchored values instead of absorbing that residual.
    if jac.size and la.norm(jac) > 0.0:
        u_j, s_j, vt_j = la.svd(jac, full_matrices=False)
        keep = s_j > LSQ_RCOND * s_j[0]
        jac = (u_j[:, keep] * s_j[keep]) @ vt_j[keep]
        sigma_max = float(s_j[0])
        v_keep = vt_j[keep].T  # observed directions in parameter space
    else:
        sigma_max = 0.0
        v_keep = np.zeros((2 * p, 0))

    def objective(m_s, k_s):
        return float(la.norm(m_s @ qdd_s + k_s @ q_s - f) ** 2)

    def min_eig(a):
        return float(la.eigvalsh(a)[0])

    def split(theta):
        return (_materialize(theta[:p], ia, ib, base_m),
                _materialize(theta[p:], ia, ib, base_k))

    theta_ls = np.linalg.lstsq(jac, c, rcond=None)[0]
    m_raw, k_raw = split(theta_ls)

    # Stiffness completion on the unseen state directions: any symmetric
    # term that annihilates the displacement data span leaves the objective
    # untouched, so stiffening those directions is free.  It keeps spurious
    # modes of the inferred pair far above the data's frequency band, where
    # the implicit-Euler integrator damps them.  The minimum-norm mass stays
    # small by the shrink weight, so no mass completion is needed.
    free_idx = np.array([i for i in range(d)
                         if span is None or not span[0] <= i < span[1]])

    def unseen_projector(data_s):
        f = data_s.shape[0]
        if data_s.size == 0 or la.norm(data_s) == 0.0:
            return np.eye(f)
        u_d, s_d, _ = la.svd(data_s, full_matrices=True)
        rank = int(np.count_nonzero(s_d > LSQ_RCOND * s_d[0]))
        observed = u_d[:, :rank]
        return np.eye(f) - observed @ observed.T

    k_floor = max(eps_k, NULL_STIFFNESS_FLOOR * la.norm(k_raw, 2))
    stiffener = np.zeros((d, d))
    stiffener[np.ix_(free_idx, free_idx)] = k_floor * unseen_projector(q_s[free_idx])
    k_c = k_raw + stiffener
    theta_c = np.concatenate([m_raw[ia, ib], k_c[ia, ib]])
    m_ls, k_ls = split(theta_c)

    feas_tol_m = 1e-12 * max(1.0, la.norm(m_ls, 2))
    feas_tol_k = 1e-12 * max(1.0, la.norm(k_ls, 2))
    if min_eig(m_ls) >= eps_m - feas_tol_m and min_eig(k_ls) >= eps_k - feas_tol_k:
        obj = objective(m_ls, k_ls)
        diagnostics = SpdDiagnostics(
            objective=obj, initial_objective=obj, duality_gap=0.0,
            kkt_residual=0.0, iterations=0, epsilon=eps, data_rank=data_rank,
            converged=True, used_fast_path=True,
        )
        return (m_ls / alpha, k_ls / beta), diagnostics

    # Barrier margins may be pulled in marginally when a fixed block sits
    # exactly on the cone boundary; the pull stays far inside the
    # eps - 1e-8 ||.|| feasibility contract.
    eps_m_eff = eps_m
    eps_k_eff = eps_k
    if span is not None:
        lam_tm = min_eig(base_m[span[0]:span[1], span[0]:span[1]])
        lam_tk = min_eig(base_k[span[0]:span[1], span[0]:span[1]])
        eps_m_eff = min(eps_m, lam_tm - 1e-9 * max(abs(lam_tm), eps_m))
        eps_k_eff = min(eps_k, lam_tk - 1e-9 * max(abs(lam_tk), eps_k))

    # Strictly feasible start: clip the least-squares solution slightly
    # inside the cone; with fixed blocks, zero the cross coupling so the
    # smallest eigenvalue is controlled blockwise.
    push_m = 1e-2 * max(la.norm(m_ls, 2), eps_m, 1e-30)
    push_k = 1e-2 * max(la.norm(k_ls, 2), eps_k, 1e-30)
    if span is None:
        m0 = _clip_spd(m_ls, eps_m_eff + push_m)
        k0 = _clip_spd(k_ls, eps_k_eff + push_k)
        initial_objective = objective(_clip_spd(m_ls, eps_m), _clip_spd(k_ls, eps_k))
    else:
        lo, hi = span
        m0 = base_m.copy()
        k0 = base_k.copy()
        free = [i for i in range(d) if not lo <= i < hi]
        idx = np.ix_(free, free)
        m0[idx] = _clip_spd(m_ls[idx], eps_m_eff + push_m)
        k0[idx] = _clip_spd(k_ls[idx], eps_k_eff + push_k)
        initial_objective = objective(m0, k0)
    theta = np.concatenate([m0[ia, ib], k0[ia, ib]])

    # Two anchoring terms shape the barrier stage without biasing the data
    # fit: a vanishing Tikhonov term keeps the subproblems bounded, and a
    # null-space anchor pins the truncated directions (where the objective
    # is flat) to the completion point.
    reg = 1e-10 * (sigma_max ** 2 + 1.0)
    reg_null = 1e-2 * (sigma_max ** 2 + 1.0)
    theta_ref = theta_c.copy()
    weights = np.concatenate([wts, wts])
    null_proj = np.eye(2 * p) - v_keep @ v_keep.T
    gram2 = (2.0 * (jac.T @ jac) + 2.0 * reg * np.diag(weights)
             + 2.0 * reg_null * null_proj)
    b_smooth = (2.0 * (jac.T @ c) + 2.0 * reg * (weights * theta_ref)
                + 2.0 * reg_null * (null_proj @ theta_ref))
    p_rows = _vec_basis(ia, ib, d)

    def smooth_value(theta):
        resid = jac @ theta - c
        dtheta = theta - theta_ref
        null_part = null_proj @ dtheta
        return float(resid @ resid + reg * (weights * dtheta) @ dtheta
                     + reg_null * null_part @ null_part)

    def smooth_grad(theta):
        return gram2 @ theta - b_smooth

    def barrier_state(theta):
        m_x, k_x = split(theta)
        s_m = m_x - eps_m_eff * np.eye(d)
        s_k = k_x - eps_k_eff * np.eye(d)
        lam_m = min_eig(s_m)
        lam_k = min_eig(s_k)
        if lam_m <= 0.0 or lam_k <= 0.0:
            return None
        (sign_m, logdet_m) = np.linalg.slogdet(s_m)
        (sign_k, logdet_k) = np.linalg.slogdet(s_k)
        return s_m, s_k, logdet_m + logdet_k

    nu = 2 * d  # total barrier parameter of the two SPD cones
    norm_f2 = float(la.norm(f) ** 2)
    target_gap = 1e-10 * max(norm_f2, 1e-6)
    mu = (smooth_value(theta) + 1e-2 * (norm_f2 + 1.0)) / (2.0 * nu)
    mu_final = target_gap / (2.0 * nu)
    iterations = 0
    converged = False
    kkt_norm = np.inf

    state = barrier_state(theta)
    while state is None:  # defensive: shrink the push until strictly feasible
        push_m *= 0.5
        push_k *= 0.5
        if span is None:
            m0 = _clip_spd(m_ls, eps_m_eff + push_m)
            k0 = _clip_spd(k_ls, eps_k_eff + push_k)
        else:
            m0[idx] = _clip_spd(m_ls[idx], eps_m_eff + push_m)
            k0[idx] = _clip_spd(k_ls[idx], eps_k_eff + push_k)
        theta = np.concatenate([m0[ia, ib], k0[ia, ib]])
        state = barrier_state(theta)
        if push_m < 1e-200:
            raise SolverConvergenceError(
                "no strictly feasible starting point found; the fixed blocks "
                "leave the feasible set without interior")

    while True:
        # Newton iterations for the current barrier weight
        for _ in range(200):
            if iterations >= MAX_ITERATIONS:
                break
            s_m, s_k, _ = state
            w_m = la.inv(s_m)
            w_k = la.inv(s_k)
            w_m = 0.5 * (w_m + w_m.T)
            w_k = 0.5 * (w_k + w_k.T)
            grad_bar = np.concatenate([-wts * w_m[ia, ib], -wts * w_k[ia, ib]])
            grad = smooth_grad(theta) + mu * grad_bar
            hess_m = p_rows @ np.kron(w_m, w_m) @ p_rows.T
            hess_k = p_rows @ np.kron(w_k, w_k) @ p_rows.T
            hess = gram2.copy()
            hess[:p, :p] += mu * hess_m
            hess[p:, p:] += mu * hess_k
            try:
                step = -la.cho_solve(la.cho_factor(hess), grad)
            except la.LinAlgError:
                step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            decrement2 = float(-grad @ step)
            if decrement2 <= 0.0:
                break
            iterations += 1

            # Backtracking: stay strictly feasible, then Armijo on the
            # barrier objective.
            phi0 = smooth_value(theta) - mu * state[2]
            t = 1.0
            accepted = False
            for _ in range(MAX_BACKTRACKS):
                trial = theta + t * step
                trial_state = barrier_state(trial)
                if trial_state is not None:
                    phi_t = smooth_value(trial) - mu * trial_state[2]
                    if phi_t <= phi0 - 0.25 * t * decrement2:
                        theta = trial
                        state = trial_state
                        accepted = True
                        break
                t *= 0.5
            if not accepted:
                break
            if decrement2 / 2.0 <= NEWTON_STAGE_TOL * mu:
                break
        kkt_norm = float(la.norm(grad))
        if mu <= mu_final or iterations >= MAX_ITERATIONS:
            converged = mu <= mu_final
            break
        mu = max(mu * MU_SHRINK, mu_final)

    m_x, k_x = split(theta)
    obj = objective(m_x, k_x)
    gap = 2.0 * mu * nu
    if span is None and initial_objective <= obj:
        # The clipped initializer is feasible when no blocks are fixed; never
        # return anything worse than it (ties prefer the initializer).
        m_x, k_x = _clip_spd(m_ls, eps_m), _clip_spd(k_ls, eps_k)
        obj = initial_objective

    diagnostics = SpdDiagnostics(
        objective=obj, initial_objective=initial_objective,
        duality_gap=gap, kkt_residual=kkt_norm, iterations=iterations,
        epsilon=eps, data_rank=data_rank, converged=converged,
        used_fast_path=False,
    )
    if not converged:
        raise SolverConvergenceError(
            f"SPD-constrained solver hit the {MAX_ITERATIONS}-iteration cap "
            f"(barrier weight {mu:.3e}, KKT residual {kkt_norm:.3e})",
            diagnostics=diagnostics,
        )
    return (m_x / alpha, k_x / beta), diagnostics


def interior_problem(q1_hat: np.ndarray, q1_ddot_hat: np.ndarray,
                     f1_hat: np.ndarray, epsilon: float | None = None) -> SpdLsqProblem:
    """Inference problem for the fixed-boundary interior subsystem."""
    q1_hat = np.atleast_2d(np.asarray(q1_hat, dtype=float))
    q1_ddot_hat = np.atleast_2d(np.asarray(q1_ddot_hat, dtype=float))
    f1_hat = np.atleast_2d(np.asarray(f1_hat, dtype=float))
    if q1_hat.shape != q1_ddot_hat.shape or q1_hat.shape != f1_hat.shape:
        raise ValidationError("interior training matrices must share one shape")
    data = np.hstack([q1_ddot_hat.T, q1_hat.T])
    if epsilon is None:
        epsilon = default_margin(data)
    return SpdLsqProblem(data=data, rhs=f1_hat.T, epsilon=epsilon)


def infer_interior(q1_hat: np.ndarray, q1_ddot_hat: np.ndarray,
                   f1_hat: np.ndarray, epsilon: float | None = None):
    """Infer the auxiliary interior operators ``(M_II, K_II)``."""
    (m_ii, k_ii), _ = solve_spd_lsq(interior_problem(q1_hat, q1_ddot_hat,
                                                     f1_hat, epsilon))
    return m_ii, k_ii


def global_problem(training: ReducedTrainingData, interior_targets,
                   epsilon: float | None = None) -> SpdLsqProblem:
    """Final inference problem with the interior blocks pinned to the targets."""
    m_target, k_target = interior_targets
    m_target = np.atleast_2d(np.asarray(m_target, dtype=float))
    k_target = np.atleast_2d(np.asarray(k_target, dtype=float))
    r = m_target.shape[0]
    d = training.dim
    if m_target.shape != (r, r) or k_target.shape != (r, r):
        raise ValidationError("interior target blocks must be square and equally sized")
    if r >= d:
        raise ValidationError("interior block must leave at least one boundary DOF")
    data = np.hstack([training.q_ddot_hat.T, training.q_hat.T])
    if epsilon is None:
        epsilon = default_margin(data)
    return SpdLsqProblem(
        data=data, rhs=training.f_hat.T, epsilon=epsilon,
        equality_span=(d - r, d),
        mass_target=m_target, stiffness_target=k_target,
    )


def infer_global(training: ReducedTrainingData, interior_targets,
                 epsilon: float | None = None):
    """Infer the final reduced operators ``(M_hat, K_hat)``."""
    (m_hat, k_hat), _ = solve_spd_lsq(global_problem(training, interior_targets,
                                                     epsilon))
    return m_hat, k_hat


def assemble_basis(coupling, interior_basis) -> np.ndarray:
    """Exact block assembly of the lifting basis ``[[I, 0], [Phi, V_I]]``."""
    phi = coupling.phi if hasattr(coupling, "phi") else np.asarray(coupling, dtype=float)
    v_i = interior_basis.basis if hasattr(interior_basis, "basis") \
        else np.asarray(interior_basis, dtype=float)
    phi = np.atleast_2d(phi)
    v_i = np.atleast_2d(v_i)
    if phi.shape[0] != v_i.shape[0]:
        raise ValidationError("coupling and interior basis row counts differ")
    nb = phi.shape[1]
    r = v_i.shape[1]
    return np.block([
        [np.eye(nb), np.zeros((nb, r))],
        [phi, v_i],
    ])


def infer_reduced_model(
    snapshots: SnapshotSet,
    r: int,
    coupling: "CouplingMatrix",
    epsilon: float | None = None,
    constraints: "ContactConstraints | None" = None,
) -> "ReducedModel":
    """Run the full inference pipeline on one snapshot set.

    Builds the interior POD basis from the fixed-boundary run, infers the
    auxiliary interior operators, assembles the reduced global training data
    and solves the final constrained problem with the interior blocks pinned.
    """
    from .model import ReducedModel
    from .snapshots import pod, reduce_interior_training_data, reduce_training_data

    interior_basis = pod(snapshots.q1, int(r))
    training = reduce_training_data(snapshots, interior_basis, coupling)
    if epsilon is None:
        epsilon = default_margin(np.hstack([training.q_ddot_hat.T, training.q_hat.T]))

    q1_hat, q1_ddot, f1_hat = reduce_interior_training_data(snapshots, interior_basis)
    (m_ii, k_ii), interior_diag = solve_spd_lsq(
        interior_problem(q1_hat, q1_ddot, f1_hat, epsilon))
    (m_hat, k_hat), global_diag = solve_spd_lsq(
        global_problem(training, (m_ii, k_ii), epsilon))

    basis = assemble_basis(coupling, interior_basis)
    provenance = {
        "method": "operator_inference",
        "coupling_method": coupling.method,
        "coupling_residual": coupling.residual,
        "r": int(r),
        "interior": interior_diag.as_dict(),
        "global": global_diag.as_dict(),
    }
    return ReducedModel(
        m_hat=m_hat,
        k_hat=k_hat,
        interior_basis=interior_basis.basis,
        coupling=coupling.phi,
        global_basis=basis,
        constraints=constraints,
        spd_margin=epsilon,
        provenance=provenance,
    )
