"""On-disk artifact formats: Matrix Market, partition files, trajectory CSVs.

All floating-point text output uses 17 significant digits so that values
round-trip exactly through the decimal representation.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .errors import IoFormatError

FLOAT_FMT = "%.17g"


def write_matrix_market(path, a: np.ndarray, comment: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), np.atleast_2d(np.asarray(a, dtype=float)), comment=comment)
    return path


def read_matrix_market(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise IoFormatError(f"matrix file not found: {path}")
    try:
        a = scipy.io.mmread(str(path))
    except Exception as exc:
        raise IoFormatError(f"malformed Matrix Market file {path}: {exc}") from exc
    if scipy.sparse.issparse(a):
        a = a.toarray()
    return np.asarray(a, dtype=float)


def write_vector(path, v: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for x in np.asarray(v, dtype=float).ravel():
            fh.write(FLOAT_FMT % x + "\n")
    return path


def read_vector(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise IoFormatError(f"vector file not found: {path}")
    try:
        values = [float(line) for line in path.read_text().split()]
    except ValueError as exc:
        raise IoFormatError(f"malformed vector file {path}: {exc}") from exc
    return np.array(values)


def write_partition(path, boundary_indices) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    indices = [int(i) for i in boundary_indices]
    with path.open("w") as fh:
        fh.write(f"n_B {len(indices)}\n")
        for i in indices:
            fh.write(f"{i}\n")
    return path


def read_partition(path) -> list[int]:
    path = Path(path)
    if not path.exists():
        raise IoFormatError(f"partition file not found: {path}")
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n_B"):
        raise IoFormatError(f"partition file {path} must start with 'n_B <int>'")
    try:
        n_b = int(lines[0].split()[1])
        indices = [int(ln) for ln in lines[1:]]
    except (IndexError, ValueError) as exc:
        raise IoFormatError(f"malformed partition file {path}: {exc}") from exc
    if len(indices) != n_b:
        raise IoFormatError(
            f"partition file {path} declares {n_b} boundary DOFs but lists {len(indices)}"
        )
    return indices


def save_system(directory, system, constraints) -> dict[str, Path]:
    """Persist a partitioned system in its boundary-first order.

    The partition file then simply lists the first ``n_B`` indices, so a
    reload reproduces the matrices bit for bit.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "mass": write_matrix_market(directory / "mass.mtx", system.mass),
        "stiffness": write_matrix_market(directory / "stiffness.mtx", system.stiffness),
        "constraints": write_matrix_market(directory / "c_b.mtx", constraints.c_matrix),
        "offsets": write_vector(directory / "offsets.txt", constraints.offsets),
        "partition": write_partition(directory / "partition.txt", range(system.n_boundary)),
    }
    labels = directory / "dof_labels.txt"
    with labels.open("w") as fh:
        for node, direction in system.dof_labels:
            fh.write(f"{node} {direction}\n")
    paths["dof_labels"] = labels
    return paths


def save_trajectory(path, trajectory) -> Path:
    """Trajectory CSV: ``t,q_0,...,q_{n-1}[,lambda_0,...,lambda_{m-1}]``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    states = trajectory.states
    n, k = states.shape
    columns = [f"q_{i}" for i in range(n)]
    blocks = [trajectory.times[None, :], states]
    if trajectory.multipliers is not None:
        columns += [f"lambda_{j}" for j in range(trajectory.multipliers.shape[0])]
        blocks.append(trajectory.multipliers)
    data = np.vstack(blocks).T
    header = ",".join(["t"] + columns)
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")
    return path


def load_trajectory(path):
    """Read a trajectory CSV back; forces are not part of the format."""
    from .timestep import Trajectory

    path = Path(path)
    if not path.exists():
        raise IoFormatError(f"trajectory file not found: {path}")
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "t":
        raise IoFormatError(f"trajectory file {path} must start with a 't,...' header")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise IoFormatError(f"trajectory file {path} row width does not match its header")
    times = data[:, 0]
    if times.size < 3:
        raise IoFormatError(f"trajectory file {path} holds fewer than three steps")
    n_q = sum(1 for c in header if c.startswith("q_"))
    n_l = sum(1 for c in header if c.startswith("lambda_"))
    states = data[:, 1:1 + n_q].T
    multipliers = data[:, 1 + n_q:1 + n_q + n_l].T if n_l else None
    h = float(times[1] - times[0])
    return Trajectory(t0=float(times[0]), h=h, states=states,
                      forces=None, multipliers=multipliers)


def save_snapshots(directory, snapshots) -> dict[str, Path]:
    """Persist a snapshot set as six CSVs with a JSON header comment each."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "h": snapshots.h,
        "k": snapshots.n_samples,
        "n_B": snapshots.n_boundary,
        "n_I": snapshots.n_interior,
    }
    header = "# " + json.dumps(meta)
    matrices = {
        "q_b": snapshots.q_b,
        "q_i": snapshots.q_i,
        "f_b": snapshots.f_b,
        "f_i": snapshots.f_i,
        "q1": snapshots.q1,
        "f1_i": snapshots.f1_i,
    }
    paths = {}
    for name, matrix in matrices.items():
        path = directory / f"{name}.csv"
        np.savetxt(path, matrix, fmt=FLOAT_FMT, delimiter=",",
                   header=header[2:], comments="# ")
        paths[name] = path
    return paths


def load_snapshots(directory):
    from .snapshots import SnapshotSet

    directory = Path(directory)
    matrices = {}
    meta = None
    for name in ("q_b", "q_i", "f_b", "f_i", "q1", "f1_i"):
        path = directory / f"{name}.csv"
        if not path.exists():
            raise IoFormatError(f"snapshot file not found: {path}")
        with path.open() as fh:
            first = fh.readline()
        if not first.startswith("#"):
            raise IoFormatError(f"snapshot file {path} lacks its JSON header comment")
        try:
            this_meta = json.loads(first[1:].strip())
        except json.JSONDecodeError as exc:
            raise IoFormatError(f"snapshot file {path} header is not JSON: {exc}") from exc
        if meta is None:
            meta = this_meta
        elif this_meta != meta:
            raise IoFormatError(f"snapshot file {path} header disagrees with its siblings")
        matrices[name] = np.loadtxt(path, delimiter=",", ndmin=2)
    return SnapshotSet(h=float(meta["h"]), **matrices)


def save_coupling(path, coupling) -> Path:
    """Coupling matrix as Matrix Market plus a one-line method/residual sidecar."""
    path = Path(path)
    write_matrix_market(path, coupling.phi)
    sidecar = path.with_suffix(".info")
    sidecar.write_text(
        f"method={coupling.method} residual={FLOAT_FMT % coupling.residual}\n"
    )
    return path


def load_coupling(path):
    from .coupling import CouplingMatrix

    path = Path(path)
    phi = read_matrix_market(path)
    sidecar = path.with_suffix(".info")
    if not sidecar.exists():
        raise IoFormatError(f"coupling sidecar not found: {sidecar}")
    fields = dict(item.split("=", 1) for item in sidecar.read_text().split())
    return CouplingMatrix(phi=phi, method=fields["method"],
                          residual=float(fields["residual"]))


def save_reduced_model(directory, model) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "m_hat": write_matrix_market(directory / "m_hat.mtx", model.m_hat),
        "k_hat": write_matrix_market(directory / "k_hat.mtx", model.k_hat),
        "interior_basis": write_matrix_market(directory / "interior_basis.mtx",
                                              model.interior_basis),
        "coupling": write_matrix_market(directory / "coupling_phi.mtx", model.coupling),
    }
    info = {
        "spd_margin": model.spd_margin,
        "provenance": model.provenance,
    }
    info_path = directory / "rom.json"
    info_path.write_text(json.dumps(info, indent=2, default=str) + "\n")
    paths["info"] = info_path
    if model.constraints is not None:
        paths["constraints"] = write_matrix_market(directory / "c_b.mtx",
                                                   model.constraints.c_matrix)
        paths["offsets"] = write_vector(directory / "offsets.txt",
                                        model.constraints.offsets)
    return paths


def load_reduced_model(directory):
    from .model import ContactConstraints, ReducedModel

    directory = Path(directory)
    info_path = directory / "rom.json"
    if not info_path.exists():
        raise IoFormatError(f"reduced model metadata not found: {info_path}")
    info = json.loads(info_path.read_text())
    coupling = read_matrix_market(directory / "coupling_phi.mtx")
    interior_basis = read_matrix_market(directory / "interior_basis.mtx")
    nb = coupling.shape[1]
    r = interior_basis.shape[1]
    basis = np.block([
        [np.eye(nb), np.zeros((nb, r))],
        [coupling, interior_basis],
    ])
    constraints = None
    if (directory / "c_b.mtx").exists():
        constraints = ContactConstraints(
            c_matrix=read_matrix_market(directory / "c_b.mtx"),
            offsets=read_vector(directory / "offsets.txt"),
        )
    return ReducedModel(
        m_hat=read_matrix_market(directory / "m_hat.mtx"),
        k_hat=read_matrix_market(directory / "k_hat.mtx"),
        interior_basis=interior_basis,
        coupling=coupling,
        global_basis=basis,
        constraints=constraints,
        spd_margin=float(info["spd_margin"]),
        provenance=info.get("provenance", {}),
    )


def save_error_curve(path, curve) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.vstack([curve.times, curve.values]).T
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header="t,eps", comments="")
    return path


def load_error_curve(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise IoFormatError(f"error-curve file not found: {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_key_values(path, entries: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for key, value in entries.items():
            if isinstance(value, float):
                fh.write(f"{key} = {FLOAT_FMT % value}\n")
            else:
                fh.write(f"{key} = {value}\n")
    return path
