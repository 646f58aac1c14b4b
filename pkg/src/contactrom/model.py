"""Full-order partitioned structural models and contact constraints.

Everything here owns the full-order mass/stiffness pair.  The data-driven
pipeline (snapshots, coupling, operator inference) must consume these models
only through simulation outputs; direct access to the matrices is reserved
for this module and for oracle-style tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la

from .errors import NumericalError, ValidationError

SYMMETRY_RTOL = 1e-12


def symmetry_error(a: np.ndarray) -> float:
    """Relative Frobenius asymmetry ||A - A^T|| / ||A|| (0 for the zero matrix)."""
    denom = la.norm(a)
    if denom == 0.0:
        return 0.0
    return la.norm(a - a.T) / denom


def smallest_eigenvalue(a: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(la.eigvalsh(a)[0])


def fix_signs(basis: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry of each column is positive.

    Ties resolve to the first occurrence, which makes the convention
    deterministic across platforms.
    """
    out = basis.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0.0:
            out[:, j] = -col
    return out


@dataclass(frozen=True)
class PartitionedSystem:
    """Symmetric positive-definite mass/stiffness pair in boundary-first order.

    Parameters
    ----------
    mass, stiffness : (n, n) ndarray
        Symmetric positive-definite system matrices (kg, N/m).
    n_boundary, n_interior : int
        Sizes of the boundary (potential contact) and interior DOF groups.
        The first ``n_boundary`` rows/columns are the boundary block.
    dof_labels : tuple of (int, str)
        One ``(node id, direction)`` pair per DOF, in boundary-first order.
    """

    mass: np.ndarray
    stiffness: np.ndarray
    n_boundary: int
    n_interior: int
    dof_labels: tuple[tuple[int, str], ...]

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        stiffness = np.asarray(self.stiffness, dtype=float)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "stiffness", stiffness)
        object.__setattr__(self, "dof_labels", tuple(tuple(lbl) for lbl in self.dof_labels))
        n = self.n_boundary + self.n_interior
        if self.n_boundary < 1 or self.n_interior < 1:
            raise ValidationError("need at least one boundary and one interior DOF")
        if self.n_boundary > self.n_interior:
            raise ValidationError(
                f"boundary group ({self.n_boundary}) may not outnumber the interior "
                f"group ({self.n_interior})"
            )
        for name, a in (("mass", mass), ("stiffness", stiffness)):
            if a.shape != (n, n):
                raise ValidationError(f"{name} matrix must be {n}x{n}, got {a.shape}")
            err = symmetry_error(a)
            if err > SYMMETRY_RTOL:
                raise ValidationError(f"{name} matrix asymmetry {err:.3e} exceeds {SYMMETRY_RTOL:.0e}")
            lam = smallest_eigenvalue(a)
            if lam <= 0.0:
                raise ValidationError(
                    f"{name} matrix is not positive definite (smallest eigenvalue {lam:.6e})"
                )
        if len(self.dof_labels) != n:
            raise ValidationError(f"expected {n} DOF labels, got {len(self.dof_labels)}")

    @property
    def n(self) -> int:
        return self.n_boundary + self.n_interior

    def mass_blocks(self):
        """Blocks (M_BB, M_BI, M_IB, M_II) of the mass matrix."""
        return _split(self.mass, self.n_boundary)

    def stiffness_blocks(self):
        """Blocks (K_BB, K_BI, K_IB, K_II) of the stiffness matrix."""
        return _split(self.stiffness, self.n_boundary)


def _split(a: np.ndarray, nb: int):
    return a[:nb, :nb], a[:nb, nb:], a[nb:, :nb], a[nb:, nb:]


@dataclass(frozen=True)
class ContactConstraints:
    """Node-to-node non-penetration constraints ``C_B q_B + b >= 0``.

    ``c_matrix`` is a signed selection matrix (one +-1 per row) acting on the
    boundary DOFs only; ``offsets`` holds the reference gaps in meters.
    """

    c_matrix: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c_matrix, dtype=float)
        b = np.asarray(self.offsets, dtype=float).ravel()
        object.__setattr__(self, "c_matrix", c)
        object.__setattr__(self, "offsets", b)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValidationError("constraint matrix must be 2-D with at least one row")
        if b.shape[0] != c.shape[0]:
            raise ValidationError("offset count must match constraint row count")
        for i, row in enumerate(c):
            nz = np.nonzero(row)[0]
            if nz.size != 1 or abs(row[nz[0]]) != 1.0:
                raise ValidationError(
                    f"constraint row {i} must contain exactly one +-1 entry"
                )
        if np.any(b < 0.0):
            raise ValidationError("reference gaps must be nonnegative")

    @property
    def m(self) -> int:
        return self.c_matrix.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.c_matrix.shape[1]

    def gap(self, q_boundary: np.ndarray) -> np.ndarray:
        """Signed gap ``C_B q_B + b`` for one boundary displacement vector."""
        return self.c_matrix @ np.asarray(q_boundary, dtype=float) + self.offsets


@dataclass(frozen=True)
class ForceSignal:
    """Deterministic time-to-force-vector map."""

    sampler: Callable[[float], np.ndarray]
    description: str = ""

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.sampler(t), dtype=float)


@dataclass(frozen=True)
class BeamSpec:
    """Geometry and material data for the built-in cantilever beam."""

    length: float
    element_count: int
    youngs_modulus: float
    poisson_ratio: float
    density: float
    section_width: float
    section_height: float
    contact_node_count: int
    obstacle_gap: float

    def __post_init__(self):
        if self.element_count < 2:
            raise ValidationError("need at least two beam elements")
        if self.length <= 0.0 or self.section_width <= 0.0 or self.section_height <= 0.0:
            raise ValidationError("beam dimensions must be positive")
        if self.youngs_modulus <= 0.0 or self.density <= 0.0:
            raise ValidationError("material constants must be positive")
        if not 0.0 < self.poisson_ratio < 0.5:
            raise ValidationError("Poisson ratio must lie in (0, 0.5)")
        if self.contact_node_count < 1:
            raise ValidationError("need at least one contact node")
        if self.contact_node_count >= self.element_count:
            raise ValidationError(
                "contact node count must be smaller than the element count"
            )
        if self.obstacle_gap <= 0.0:
            raise ValidationError("obstacle gap must be positive")


@dataclass(frozen=True)
class ReducedModel:
    """Reduced operators plus the lifting data that connects them to the FOM.

    The global basis always has the block form ``[[I, 0], [Phi_IB, V_I]]`` so
    the boundary DOFs survive the reduction unchanged.  ``spd_margin`` is the
    strict-positivity margin the operators were required to satisfy.
    """

    m_hat: np.ndarray
    k_hat: np.ndarray
    interior_basis: np.ndarray
    coupling: np.ndarray
    global_basis: np.ndarray
    constraints: ContactConstraints | None
    spd_margin: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        m_hat = np.asarray(self.m_hat, dtype=float)
        k_hat = np.asarray(self.k_hat, dtype=float)
        v_i = np.asarray(self.interior_basis, dtype=float)
        phi = np.asarray(self.coupling, dtype=float)
        v = np.asarray(self.global_basis, dtype=float)
        for name, val in (("m_hat", m_hat), ("k_hat", k_hat),
                          ("interior_basis", v_i), ("coupling", phi),
                          ("global_basis", v)):
            object.__setattr__(self, name, val)
        nb = phi.shape[1]
        r = v_i.shape[1]
        d = nb + r
        if m_hat.shape != (d, d) or k_hat.shape != (d, d):
            raise ValidationError(f"reduced operators must be {d}x{d}")
        if v_i.shape[0] != phi.shape[0]:
            raise ValidationError("interior basis and coupling row counts differ")
        expected = np.block([
            [np.eye(nb), np.zeros((nb, r))],
            [phi, v_i],
        ])
        if v.shape != expected.shape or not np.array_equal(v, expected):
            raise ValidationError("global basis must be the exact block assembly [[I,0],[Phi,V_I]]")
        if self.spd_margin <= 0.0:
            raise ValidationError("SPD margin must be positive")
        for name, a in (("m_hat", m_hat), ("k_hat", k_hat)):
            err = symmetry_error(a)
            if err > 1e-10:
                raise ValidationError(f"{name} asymmetry {err:.3e} exceeds 1e-10")
            lam = smallest_eigenvalue(a)
            floor = self.spd_margin - 1e-8 * la.norm(a, 2)
            if lam < floor:
                raise ValidationError(
                    f"{name} smallest eigenvalue {lam:.6e} falls below the margin floor {floor:.6e}"
                )
        if self.constraints is not None and self.constraints.n_boundary != nb:
            raise ValidationError("constraint matrix width must equal the boundary DOF count")

    @property
    def n_boundary(self) -> int:
        return self.coupling.shape[1]

    @property
    def n_interior(self) -> int:
        return self.coupling.shape[0]

    @property
    def r(self) -> int:
        return self.interior_basis.shape[1]

    @property
    def dim(self) -> int:
        return self.n_boundary + self.r

    def reduce_force(self, f: np.ndarray) -> np.ndarray:
        """Project a full-order force vector: ``f_hat = V^T f``."""
        return self.global_basis.T @ np.asarray(f, dtype=float)

    def reduce_state(self, q: np.ndarray) -> np.ndarray:
        """Consistent inverse of the lifting relation.

        Boundary displacements pass through; interior coordinates are
        ``V_I^T (q_I - Phi_IB q_B)``.
        """
        q = np.asarray(q, dtype=float)
        nb = self.n_boundary
        q_b = q[:nb]
        q_i = q[nb:]
        return np.concatenate([q_b, self.interior_basis.T @ (q_i - self.coupling @ q_b)])

    def lift(self, q_hat: np.ndarray) -> np.ndarray:
        """Lift reduced coordinates back to the full-order space: ``q = V q_hat``."""
        return self.global_basis @ np.asarray(q_hat, dtype=float)


def build_cantilever_beam(spec: BeamSpec) -> tuple[PartitionedSystem, ContactConstraints]:
    """Assemble an Euler-Bernoulli cantilever with a rigid plane below its tip.

    Two DOFs per free node (deflection ``w``, rotation ``theta``), clamped at
    node 0.  The deflection DOFs of the last ``contact_node_count`` nodes form
    the boundary group; positive deflection points away from the obstacle, so
    the gap of contact node ``j`` is ``w_j + obstacle_gap``.

    Returns the permuted (boundary-first) system together with the
    constraints.  Uses the consistent mass matrix.
    """
    n_el = spec.element_count
    le = spec.length / n_el
    inertia = spec.section_width * spec.section_height ** 3 / 12.0
    ei = spec.youngs_modulus * inertia
    rho_a = spec.density * spec.section_width * spec.section_height

    k_e = (ei / le ** 3) * np.array([
        [12.0, 6.0 * le, -12.0, 6.0 * le],
        [6.0 * le, 4.0 * le ** 2, -6.0 * le, 2.0 * le ** 2],
        [-12.0, -6.0 * le, 12.0, -6.0 * le],
        [6.0 * le, 2.0 * le ** 2, -6.0 * le, 4.0 * le ** 2],
    ])
    m_e = (rho_a * le / 420.0) * np.array([
        [156.0, 22.0 * le, 54.0, -13.0 * le],
        [22.0 * le, 4.0 * le ** 2, 13.0 * le, -3.0 * le ** 2],
        [54.0, 13.0 * le, 156.0, -22.0 * le],
        [-13.0 * le, -3.0 * le ** 2, -22.0 * le, 4.0 * le ** 2],
    ])

    n = 2 * n_el  # free DOFs: nodes 1..n_el, clamped node 0 eliminated
    stiffness = np.zeros((n, n))
    mass = np.zeros((n, n))

    def dof_index(node: int, local: int) -> int | None:
        # local 0 = deflection, 1 = rotation; clamped node 0 has no free DOFs
        if node == 0:
            return None
        return 2 * (node - 1) + local

    for e in range(n_el):
        nodes = (e, e + 1)
        gdofs = [dof_index(nodes[i // 2], i % 2) for i in range(4)]
        for a, ga in enumerate(gdofs):
            if ga is None:
                continue
            for c, gc in enumerate(gdofs):
                if gc is None:
                    continue
                stiffness[ga, gc] += k_e[a, c]
                mass[ga, gc] += m_e[a, c]

    contact_nodes = list(range(n_el - spec.contact_node_count + 1, n_el + 1))
    boundary = [dof_index(node, 0) for node in contact_nodes]
    interior = [i for i in range(n) if i not in set(boundary)]
    order = boundary + interior

    labels = []
    for idx in order:
        node = idx // 2 + 1
        direction = "w" if idx % 2 == 0 else "theta"
        labels.append((node, direction))

    perm = np.ix_(order, order)
    system = PartitionedSystem(
        mass=mass[perm],
        stiffness=stiffness[perm],
        n_boundary=len(boundary),
        n_interior=n - len(boundary),
        dof_labels=tuple(labels),
    )
    m = spec.contact_node_count
    constraints = ContactConstraints(
        c_matrix=np.eye(m, len(boundary)),
        offsets=np.full(m, spec.obstacle_gap),
    )
    return system, constraints


def build_mass_spring_chain(
    masses,
    spring_constants,
    boundary_indices,
    obstacle_gaps,
) -> tuple[PartitionedSystem, ContactConstraints]:
    """Build a grounded mass-spring chain permuted to boundary-first order.

    Mass 0 sits at the free end; spring ``j`` couples masses ``j`` and
    ``j+1`` and the last spring anchors the final mass to ground, so the
    chain needs exactly one spring per mass.  ``obstacle_gaps`` align with
    the boundary indices in ascending order.
    """
    masses = np.asarray(masses, dtype=float).ravel()
    springs = np.asarray(spring_constants, dtype=float).ravel()
    n = masses.size
    if n < 2:
        raise ValidationError("chain needs at least two masses")
    if springs.size != n:
        raise ValidationError(
            f"chain with {n} masses needs {n} springs (the last one anchors it "
            f"to ground), got {springs.size}"
        )
    if np.any(masses <= 0.0) or np.any(springs <= 0.0):
        raise ValidationError("masses and spring constants must be positive")

    boundary = sorted(set(int(i) for i in boundary_indices))
    if not boundary:
        raise ValidationError("need at least one boundary index")
    if boundary[0] < 0 or boundary[-1] >= n:
        raise ValidationError("boundary index out of range")
    gaps = np.asarray(obstacle_gaps, dtype=float).ravel()
    if gaps.size != len(boundary):
        raise ValidationError("need one obstacle gap per boundary index")

    stiffness = np.zeros((n, n))
    for j in range(n):
        stiffness[j, j] += springs[j]
        if j > 0:
            stiffness[j, j] += springs[j - 1]
        if j + 1 < n:
            stiffness[j, j + 1] = -springs[j]
            stiffness[j + 1, j] = -springs[j]
    mass = np.diag(masses)

    interior = [i for i in range(n) if i not in set(boundary)]
    order = boundary + interior
    perm = np.ix_(order, order)
    labels = tuple((idx, "u") for idx in order)
    system = PartitionedSystem(
        mass=mass[perm],
        stiffness=stiffness[perm],
        n_boundary=len(boundary),
        n_interior=len(interior),
        dof_labels=labels,
    )
    m = len(boundary)
    constraints = ContactConstraints(c_matrix=np.eye(m), offsets=gaps)
    return system, constraints


def static_modes(system: PartitionedSystem) -> np.ndarray:
    """Constrained (static) modes: interior response to unit boundary displacements.

    Column ``j`` solves ``K_II x = -K_IB e_j``, i.e. all other boundary DOFs
    held fixed.  Equals ``-K_II^{-1} K_IB``.
    """
    _, _, k_ib, k_ii = system.stiffness_blocks()
    try:
        factor = la.cho_factor(k_ii)
    except la.LinAlgError as exc:
        raise NumericalError(f"interior stiffness block is singular: {exc}") from exc
    return la.cho_solve(factor, -k_ib)


def intrusive_craig_bampton(
    system: PartitionedSystem,
    r: int,
    constraints: ContactConstraints | None = None,
) -> ReducedModel:
    """Projection-based reduction; the oracle the data-driven path is tested against.

    The interior basis holds the first ``r`` generalized eigenvectors of
    ``(K_II, M_II)``, mass-orthonormalized and sign-fixed; the coupling block
    is the static-mode matrix.  Reduced operators are the congruence
    projections ``V^T M V`` and ``V^T K V``.
    """
    if not 1 <= r <= system.n_interior:
        raise ValidationError(f"rank must lie in [1, {system.n_interior}], got {r}")
    _, _, m_ib, m_ii = system.mass_blocks()
    _, _, k_ib, k_ii = system.stiffness_blocks()
    phi = static_modes(system)
    _, vecs = la.eigh(k_ii, m_ii)
    v_i = fix_signs(vecs[:, :r])
    basis = np.block([
        [np.eye(system.n_boundary), np.zeros((system.n_boundary, r))],
        [phi, v_i],
    ])
    m_hat = basis.T @ system.mass @ basis
    k_hat = basis.T @ system.stiffness @ basis
    m_hat = 0.5 * (m_hat + m_hat.T)
    k_hat = 0.5 * (k_hat + k_hat.T)
    margin = min(smallest_eigenvalue(m_hat), smallest_eigenvalue(k_hat))
    return ReducedModel(
        m_hat=m_hat,
        k_hat=k_hat,
        interior_basis=v_i,
        coupling=phi,
        global_basis=basis,
        constraints=constraints,
        spd_margin=margin,
        provenance={"method": "intrusive_craig_bampton", "r": r},
    )


def harmonic_force(
    amplitude: float,
    frequency: float,
    loaded_dofs,
    size: int,
) -> ForceSignal:
    """Sinusoidal point load ``amplitude * sin(2 pi f t)`` on the given DOFs."""
    if frequency <= 0.0:
        raise ValidationError("frequency must be positive")
    dofs = np.asarray(sorted(set(int(i) for i in loaded_dofs)), dtype=int)
    if dofs.size == 0:
        raise ValidationError("need at least one loaded DOF")
    if dofs[0] < 0 or dofs[-1] >= size:
        raise ValidationError("loaded DOF index out of range")
    omega = 2.0 * math.pi * frequency

    def sample(t: float) -> np.ndarray:
        f = np.zeros(size)
        f[dofs] = amplitude * math.sin(omega * t)
        return f

    return ForceSignal(
        sampler=sample,
        description=(
            f"harmonic load, amplitude {amplitude:g} N at {frequency:g} Hz "
            f"on DOFs {dofs.tolist()}"
        ),
    )


def load_system(
    mass_path,
    stiffness_path,
    constraints_path,
    partition_path,
    offsets_path,
) -> tuple[PartitionedSystem, ContactConstraints]:
    """Load a full-order system from Matrix Market / plain-text exports.

    The matrices are stored in their native DOF order; the partition file
    names the boundary DOFs and the loader permutes to boundary-first order.
    Mild asymmetry (relative norm up to 1e-10) is symmetrized by averaging,
    anything larger is rejected.
    """
    from . import io as _io

    mass = _io.read_matrix_market(mass_path)
    stiffness = _io.read_matrix_market(stiffness_path)
    if mass.shape != stiffness.shape or mass.ndim != 2 or mass.shape[0] != mass.shape[1]:
        raise ValidationError(
            f"mass {mass.shape} and stiffness {stiffness.shape} must be square and equally sized"
        )
    n = mass.shape[0]

    def symmetrize(name, a):
        err = symmetry_error(a)
        if err > 1e-10:
            raise ValidationError(
                f"{name} matrix asymmetry {err:.3e} exceeds the 1e-10 load tolerance"
            )
        return 0.5 * (a + a.T)

    mass = symmetrize("mass", mass)
    stiffness = symmetrize("stiffness", stiffness)

    boundary = _io.read_partition(partition_path)
    if any(i < 0 or i >= n for i in boundary):
        raise ValidationError("partition file lists a DOF index out of range")
    if len(set(boundary)) != len(boundary):
        raise ValidationError("partition file repeats a boundary DOF index")
    interior = [i for i in range(n) if i not in set(boundary)]
    order = list(boundary) + interior
    perm = np.ix_(order, order)

    c_matrix = _io.read_matrix_market(constraints_path)
    offsets = _io.read_vector(offsets_path)
    if c_matrix.shape[1] != len(boundary):
        raise ValidationError(
            f"constraint matrix width {c_matrix.shape[1]} does not match the "
            f"{len(boundary)} boundary DOFs"
        )

    labels = tuple((idx, "u") for idx in order)
    system = PartitionedSystem(
        mass=mass[perm],
        stiffness=stiffness[perm],
        n_boundary=len(boundary),
        n_interior=len(interior),
        dof_labels=labels,
    )
    constraints = ContactConstraints(c_matrix=c_matrix, offsets=offsets)
    return system, constraints
