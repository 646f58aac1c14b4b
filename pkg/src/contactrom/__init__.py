"""Substructured operator inference for linear elastodynamic contact problems.

Learns reduced-order models from contact-free training simulations, keeping
the potential contact DOFs unreduced, and solves dynamic contact on the
reduced model through a per-step linear complementarity problem, so both
displacements and contact forces come out of the surrogate.
"""

from .coupling import (
    CouplingMatrix,
    coupling_from_static_modes,
    coupling_full_lsq,
    coupling_reduced_lsq,
)
from .errors import (
    ConfigError,
    ContactRomError,
    IoFormatError,
    LcpFailure,
    NumericalError,
    SolverConvergenceError,
    ValidationError,
)
from .lcp import (
    ContactRunDiagnostics,
    LcpProblem,
    LcpSolution,
    assemble_lcp_matrix,
    assemble_lcp_rhs,
    lemke_solve,
    simulate_contact_rom,
    step_reduced,
)
from .metrics import ContactReport, ErrorCurve, contact_diagnostics, relative_error_curves
from .model import (
    BeamSpec,
    ContactConstraints,
    ForceSignal,
    PartitionedSystem,
    ReducedModel,
    build_cantilever_beam,
    build_mass_spring_chain,
    harmonic_force,
    intrusive_craig_bampton,
    load_system,
    static_modes,
)
from .opinf import (
    SpdDiagnostics,
    SpdLsqProblem,
    assemble_basis,
    infer_global,
    infer_interior,
    infer_reduced_model,
    solve_spd_lsq,
)
from .snapshots import (
    PodBasis,
    ReducedTrainingData,
    SnapshotSet,
    collect,
    pod,
    reduce_interior_training_data,
    reduce_training_data,
    second_derivatives,
)
from .timestep import Trajectory, simulate_fixed_boundary, simulate_free, solve_contact_fom

__version__ = "0.1.0"
