"""Dense linear algebra on small labelled tensor-product registers.

A :class:`StateVector` is an immutable complex amplitude vector paired with
an ordered list of basis labels.  Composite registers additionally carry the
names of their subsystems; their labels are the per-subsystem labels joined
with ``";"`` (``"01;EL"`` is atoms ``01`` with photons ``EL``).

Every register here holds at most :data:`MAX_AMPLITUDES` amplitudes, so
everything is stored densely in numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TOL = 1e-12
MAX_AMPLITUDES = 16
SEPARATOR = ";"


class QuantumCoreError(Exception):
    """Base class for errors raised by the linear-algebra layer."""


class DimensionError(QuantumCoreError):
    pass


class BasisMismatchError(QuantumCoreError):
    pass


class NotNormalizedError(QuantumCoreError):
    pass


class NotUnitaryError(QuantumCoreError):
    pass


class UnknownSubsystemError(QuantumCoreError):
    pass


@lru_cache(maxsize=256)
def _check_labels(labels, subsystems):
    if len(labels) == 0 or len(labels) > MAX_AMPLITUDES:
        raise DimensionError(
            f"register size {len(labels)} outside 1..{MAX_AMPLITUDES}")
    if len(set(labels)) != len(labels):
        raise BasisMismatchError(f"duplicate basis labels in {labels}")
    if subsystems is not None:
        for lab in labels:
            if len(lab.split(SEPARATOR)) != len(subsystems):
                raise BasisMismatchError(
                    f"label {lab!r} does not match subsystems {subsystems}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over an ordered, labelled basis.

    Parameters
    ----------
    labels : sequence of str
        Basis labels, unique, in storage order.
    amplitudes : array_like of complex
        One amplitude per label.
    subsystems : sequence of str, optional
        Subsystem names for a composite register.  When given, each label
        must consist of exactly ``len(subsystems)`` parts joined by ``";"``.
    """

    labels: tuple[str, ...]
    amplitudes: np.ndarray
    subsystems: tuple[str, ...] | None = None

    def __post_init__(self):
        labels = tuple(self.labels)
        subsystems = None if self.subsystems is None else tuple(self.subsystems)
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        amps.setflags(write=False)
        if len(labels) != amps.size:
            raise DimensionError(
                f"{len(labels)} labels for {amps.size} amplitudes")
        _check_labels(labels, subsystems)
        total = amps.sum()
        if not (math.isfinite(total.real) and math.isfinite(total.imag)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "subsystems", subsystems)

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        terms = " + ".join(f"({a:.4g})|{lab}>" for lab, a in
                           zip(self.labels, self.amplitudes) if abs(a) > TOL)
        return f"StateVector({terms or '0'})"

    def norm(self) -> float:
        return math.sqrt(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def normalized(self) -> StateVector:
        n = self.norm()
        if n <= TOL:
            raise NotNormalizedError("cannot normalize a null vector")
        return self.with_amplitudes(self.amplitudes / n)

    def with_amplitudes(self, amplitudes) -> StateVector:
        return StateVector(self.labels, amplitudes, self.subsystems)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.labels.index(label)])

    def as_dict(self) -> dict[str, complex]:
        return {lab: complex(a) for lab, a in zip(self.labels, self.amplitudes)}

    def __mul__(self, scalar) -> StateVector:
        return self.with_amplitudes(self.amplitudes * complex(scalar))

    __rmul__ = __mul__

    def __add__(self, other: StateVector) -> StateVector:
        _check_same_basis(self, other)
        return self.with_amplitudes(self.amplitudes + other.amplitudes)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """A square matrix checked for unitarity on construction."""

    matrix: np.ndarray
    name: str = "U"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"unitary must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if dev >= TOL:
            raise NotUnitaryError(f"{self.name}: max|U^dag U - I| = {dev:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: UnitaryMatrix) -> UnitaryMatrix:
        return UnitaryMatrix(self.matrix @ other.matrix,
                             f"{self.name}*{other.name}")

    def dagger(self) -> UnitaryMatrix:
        return UnitaryMatrix(self.matrix.conj().T, f"{self.name}^dag")


def _check_same_basis(a: StateVector, b: StateVector):
    if a.labels != b.labels:
        raise BasisMismatchError(f"bases differ: {a.labels} vs {b.labels}")


def _require_normalized(s: StateVector, what: str):
    if not s.is_normalized():
        raise NotNormalizedError(f"{what} has norm^2 {s.norm() ** 2!r}")


def basis_state(labels, label: str, subsystems=None) -> StateVector:
    """Computational basis vector ``|label>`` inside the basis ``labels``."""
    labels = tuple(labels)
    amps = np.zeros(len(labels), dtype=np.complex128)
    amps[labels.index(label)] = 1.0
    return StateVector(labels, amps, subsystems)


def random_state(rng: np.random.Generator, labels, subsystems=None) -> StateVector:
    """Haar-distributed pure state from normalized complex Gaussians."""
    n = len(labels)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return StateVector(labels, z / np.linalg.norm(z), subsystems)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product ``a (x) b`` with concatenated labels.

    Registers that both name their subsystems are joined with ``";"`` and
    keep the subsystem names; otherwise labels are concatenated directly
    (``|0> (x) |1> -> |01>``).
    """
    _require_normalized(a, "left factor")
    _require_normalized(b, "right factor")
    if len(a) * len(b) > MAX_AMPLITUDES:
        raise DimensionError(
            f"tensor product of size {len(a) * len(b)} exceeds {MAX_AMPLITUDES}")
    if a.subsystems is not None and b.subsystems is not None:
        sep, subsystems = SEPARATOR, a.subsystems + b.subsystems
    else:
        sep, subsystems = "", None
    labels = [x + sep + y for x in a.labels for y in b.labels]
    return StateVector(labels, np.kron(a.amplitudes, b.amplitudes), subsystems)


def apply(u: UnitaryMatrix, s: StateVector) -> StateVector:
    if u.dim != len(s):
        raise DimensionError(f"{u.name} is {u.dim}x{u.dim}, state has {len(s)}")
    return s.with_amplitudes(u.matrix @ s.amplitudes)


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _check_same_basis(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity_up_to_global_phase(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2``; equals one exactly when ``a`` and ``b`` differ by a phase."""
    return abs(inner(a, b)) ** 2


@lru_cache(maxsize=256)
def _partial_layout(joint_labels, subsystems, index, measured_labels):
    # Index matrix into the joint amplitudes (padded with one trailing zero),
    # rows = remaining-register labels, columns = measured labels.
    parts = [lab.split(SEPARATOR) for lab in joint_labels]
    rest_labels = []
    for p in parts:
        r = SEPARATOR.join(p[:index] + p[index + 1:])
        if r not in rest_labels:
            rest_labels.append(r)
    col = {lab: j for j, lab in enumerate(measured_labels)}
    row = {lab: i for i, lab in enumerate(rest_labels)}
    layout = np.full((len(rest_labels), len(measured_labels)),
                     len(joint_labels), dtype=np.intp)
    for k, p in enumerate(parts):
        if p[index] not in col:
            raise BasisMismatchError(
                f"joint label part {p[index]!r} not in measured basis {measured_labels}")
        layout[row[SEPARATOR.join(p[:index] + p[index + 1:])], col[p[index]]] = k
    rest_subsystems = subsystems[:index] + subsystems[index + 1:]
    return tuple(rest_labels), rest_subsystems, layout


def partial_overlap(measured: StateVector, joint: StateVector,
                    measured_subsystem: str) -> StateVector:
    """Unnormalized ``(<measured| (x) I)|joint>`` on the remaining subsystems."""
    if joint.subsystems is None or measured_subsystem not in joint.subsystems:
        raise UnknownSubsystemError(
            f"{measured_subsystem!r} not among {joint.subsystems}")
    if len(joint.subsystems) < 2:
        raise DimensionError("nothing left after measuring the only subsystem")
    index = joint.subsystems.index(measured_subsystem)
    rest_labels, rest_subsystems, layout = _partial_layout(
        joint.labels, joint.subsystems, index, measured.labels)
    padded = np.append(joint.amplitudes, 0.0)
    amps = padded[layout] @ measured.amplitudes.conj()
    return StateVector(rest_labels, amps, rest_subsystems)


def project_partial(measured: StateVector, joint: StateVector,
                    measured_subsystem: str) -> tuple[StateVector | None, float]:
    """Project one subsystem of ``joint`` onto ``measured``.

    Returns
    -------
    residual : StateVector or None
        Normalized state of the remaining subsystems, or ``None`` when the
        overlap vanishes.
    probability : float
        ``||(<measured| (x) I)|joint>||^2``.
    """
    _require_normalized(measured, "measured state")
    rest = partial_overlap(measured, joint, measured_subsystem)
    probability = rest.norm() ** 2
    if probability <= TOL ** 2:
        return None, 0.0
    return rest.normalized(), probability


def z_phase(phi: float) -> UnitaryMatrix:
    """State-dependent single-qubit phase ``diag(1, exp(-i phi))``."""
    return UnitaryMatrix(np.diag([1.0, np.exp(-1j * phi)]), f"Z({phi:.6g})")


def kron(a: UnitaryMatrix, b: UnitaryMatrix) -> UnitaryMatrix:
    return UnitaryMatrix(np.kron(a.matrix, b.matrix), f"{a.name}(x){b.name}")


def identity(dim: int) -> UnitaryMatrix:
    return UnitaryMatrix(np.eye(dim), f"I{dim}")


QUBIT_LABELS = ("0", "1")
TWO_QUBIT_LABELS = ("00", "01", "10", "11")
CZ = UnitaryMatrix(np.diag([1.0, 1.0, 1.0, -1.0]), "CZ")
