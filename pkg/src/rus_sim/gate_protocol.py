"""Time-bin encoding, mutually unbiased photon-pair bases and RUS corrections.

Each source qubit ``a|0> + b|1>`` is copied onto a photon emitted early (E)
or late (L): ``a|0;E> + b|1;L>``.  Measuring the two photons in a basis that
is mutually unbiased with respect to ``{EE, EL, LE, LL}`` then applies a
diagonal phase gate to the atoms without revealing their amplitudes.  For the
partial Bell basis used here, two outcomes give CZ up to local phases and the
other two return the input up to local phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .quantum_core import (
    CZ, TOL, TWO_QUBIT_LABELS, QUBIT_LABELS, StateVector, UnitaryMatrix,
    identity, inner, kron, z_phase,
)

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-9

PHOTON_LABELS = ("E", "L")
PHOTON_PAIR_LABELS = ("EE", "EL", "LE", "LL")
ATOMS = "atoms"
PHOTONS = "photons"


class PhaseTripleNotInProtocolFamily(ValueError):
    """Phases neither product-like nor maximally entangling."""


class NotEncodedError(ValueError):
    pass


class OutcomeLabel(IntEnum):
    """Index ``i`` of the detected photon-pair state ``|Phi_i>``."""

    PHI1 = 1
    PHI2 = 2
    PHI3 = 3
    PHI4 = 4


OUTCOMES = tuple(OutcomeLabel)


@dataclass(frozen=True)
class PhaseTriple:
    """Relative phases of ``EL``, ``LE`` and ``LL`` in a MUB vector.

    Stored canonically in ``[0, 2*pi)``.
    """

    phi1: float
    phi2: float
    phi3: float

    def __post_init__(self):
        for name in ("phi1", "phi2", "phi3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            value = value % TWO_PI
            if value >= TWO_PI:  # -tiny % 2pi rounds up to 2pi
                value = 0.0
            object.__setattr__(self, name, value)

    def as_tuple(self) -> tuple[float, float, float]:
        return self.phi1, self.phi2, self.phi3


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Four orthonormal photon-pair states plus the single-photon states
    ``x_i``/``y_i`` they were built from (index 0 is source 1)."""

    vectors: tuple[StateVector, ...]
    classification: tuple[str, ...]
    x_states: tuple[StateVector, ...] = field(default=())
    y_states: tuple[StateVector, ...] = field(default=())

    def __post_init__(self):
        if len(self.vectors) != 4 or len(self.classification) != 4:
            raise ValueError("a photon-pair basis has exactly four members")
        if any(c not in ("entangled", "product") for c in self.classification):
            raise ValueError(f"bad classification {self.classification}")
        gram = self.gram()
        if np.max(np.abs(gram - np.eye(4))) >= TOL:
            raise ValueError("basis vectors are not orthonormal")
        if max_unbiasedness_deviation(self.vectors) >= TOL:
            raise ValueError("basis is not mutually unbiased with {EE,EL,LE,LL}")

    def gram(self) -> np.ndarray:
        return np.array([[inner(a, b) for b in self.vectors] for a in self.vectors])

    def __getitem__(self, outcome: int) -> StateVector:
        return self.vectors[OutcomeLabel(outcome) - 1]


def max_unbiasedness_deviation(vectors) -> float:
    """Largest ``| |<b|v>| - 1/2 |`` over computational ``b`` and all ``v``."""
    return max(float(np.max(np.abs(np.abs(v.amplitudes) - 0.5))) for v in vectors)


def two_qubit_state(amplitudes) -> StateVector:
    return StateVector(TWO_QUBIT_LABELS, amplitudes)


def photon_pair_state(amplitudes) -> StateVector:
    return StateVector(PHOTON_PAIR_LABELS, amplitudes)


def encode_single(s: StateVector) -> StateVector:
    """``a|0> + b|1>  ->  a|0;E> + b|1;L>`` over ``{0,1} (x) {E,L}``."""
    if s.labels != QUBIT_LABELS:
        raise ValueError(f"expected a qubit over {QUBIT_LABELS}, got {s.labels}")
    if not s.is_normalized():
        raise ValueError("input qubit must be normalized")
    a, b = s.amplitudes
    labels = tuple(f"{q};{p}" for q in QUBIT_LABELS for p in PHOTON_LABELS)
    return StateVector(labels, [a, 0, 0, b], ("atom", "photon"))


_ENCODED_LABELS = tuple(f"{q};{p}" for q in TWO_QUBIT_LABELS
                        for p in PHOTON_PAIR_LABELS)
# |xy; B(x)B(y)> sits on the diagonal of the 4x4 (atoms, photons) grid
_ENCODED_SLOTS = np.arange(4) * 5
_OFF_SLOTS = np.ones(16, dtype=bool)
_OFF_SLOTS[_ENCODED_SLOTS] = False


def encode_pair(s: StateVector) -> StateVector:
    """Encode both atoms: ``sum c_xy |xy>  ->  sum c_xy |xy; B(x)B(y)>``."""
    if s.labels != TWO_QUBIT_LABELS:
        raise ValueError(f"expected two qubits over {TWO_QUBIT_LABELS}, got {s.labels}")
    if not s.is_normalized():
        raise ValueError("input state must be normalized")
    amps = np.zeros(16, dtype=np.complex128)
    amps[_ENCODED_SLOTS] = s.amplitudes
    return StateVector(_ENCODED_LABELS, amps, (ATOMS, PHOTONS))


def mub_vector(p: PhaseTriple) -> StateVector:
    phases = np.exp(1j * np.array([0.0, p.phi1, p.phi2, p.phi3]))
    return photon_pair_state(phases / 2)


def u_phase(p: PhaseTriple) -> UnitaryMatrix:
    """Gate applied to the atoms when ``mub_vector(p)`` is detected."""
    diag = np.exp(-1j * np.array([0.0, p.phi1, p.phi2, p.phi3]))
    return UnitaryMatrix(np.diag(diag), "U_phase")


def _angle_distance(a: float) -> float:
    a = a % TWO_PI
    return min(a, TWO_PI - a)


def is_entangling(p: PhaseTriple) -> bool:
    """True for maximally entangling phases, False for product phases."""
    excess = p.phi3 - p.phi1 - p.phi2
    if _angle_distance(excess - math.pi) <= ANGLE_TOL:
        return True
    if _angle_distance(excess) <= ANGLE_TOL:
        return False
    raise PhaseTripleNotInProtocolFamily(
        f"phi3 - phi1 - phi2 = {excess % TWO_PI:.12g} is neither 0 nor pi")


def phase_triple_of(v: StateVector) -> PhaseTriple:
    """Read the relative phases off a MUB vector (global phase removed)."""
    if max_unbiasedness_deviation([v]) >= TOL:
        raise ValueError("vector is not of mutually unbiased form")
    rel = v.amplitudes[1:] / v.amplitudes[0]
    return PhaseTriple(*np.angle(rel))


def single_photon_states() -> tuple[tuple[StateVector, ...], tuple[StateVector, ...]]:
    r = 1 / math.sqrt(2)
    x1 = StateVector(PHOTON_LABELS, [r, r])
    y1 = StateVector(PHOTON_LABELS, [r, -r])
    x2 = StateVector(PHOTON_LABELS, [r, r])
    y2 = StateVector(PHOTON_LABELS, [1j * r, -1j * r])
    return (x1, x2), (y1, y2)


def _pair(a: StateVector, b: StateVector) -> np.ndarray:
    return np.kron(a.amplitudes, b.amplitudes)


@lru_cache(maxsize=1)
def partial_bell_basis() -> MeasurementBasis:
    """Two entangled and two product photon-pair states, all unbiased.

    Built as ``(x1 y2 +/- y1 x2)/sqrt2``, ``x1 x2`` and ``y1 y2``.
    """
    (x1, x2), (y1, y2) = single_photon_states()
    r = 1 / math.sqrt(2)
    vectors = (
        photon_pair_state(r * (_pair(x1, y2) + _pair(y1, x2))),
        photon_pair_state(r * (_pair(x1, y2) - _pair(y1, x2))),
        photon_pair_state(_pair(x1, x2)),
        photon_pair_state(_pair(y1, y2)),
    )
    return MeasurementBasis(vectors, ("entangled", "entangled", "product", "product"),
                            (x1, x2), (y1, y2))


class Branch(NamedTuple):
    outcome: OutcomeLabel
    probability: float
    residual: StateVector


def _check_encoded(enc: StateVector):
    if enc.labels != _ENCODED_LABELS:
        raise NotEncodedError("state is not over the atoms (x) photons basis")
    if not enc.is_normalized():
        raise NotEncodedError("encoded state must be normalized")
    if np.abs(enc.amplitudes[_OFF_SLOTS]).max() > TOL:
        raise NotEncodedError("photon time bins do not mirror the atomic state")


def branch_amplitudes(enc: StateVector,
                      basis: MeasurementBasis | None = None) -> np.ndarray:
    """4x4 array whose column ``i-1`` holds ``2 <Phi_i|enc>`` over ``00..11``."""
    _check_encoded(enc)
    basis = basis or partial_bell_basis()
    grid = enc.amplitudes.reshape(4, 4)  # rows: atoms, columns: photons
    return 2 * grid @ basis_matrix(basis).conj().T


def branch_projections(enc: StateVector,
                       basis: MeasurementBasis | None = None) -> list[StateVector]:
    """Unnormalized atomic states ``2 <Phi_i|enc>`` for ``i = 1..4``.

    These carry the global phases of the branch states, so
    ``enc == 1/2 sum_i proj_i (x) Phi_i``.
    """
    cols = branch_amplitudes(enc, basis)
    return [StateVector(TWO_QUBIT_LABELS, cols[:, k]) for k in range(4)]


@lru_cache(maxsize=8)
def basis_matrix(basis: MeasurementBasis) -> np.ndarray:
    """Rows are the basis vectors' amplitudes over ``EE, EL, LE, LL``."""
    return np.array([v.amplitudes for v in basis.vectors])


def branch_probabilities(cols: np.ndarray) -> np.ndarray:
    # the factor 2 in each column is the inverse branch amplitude 1/2
    return np.sum(np.abs(cols) ** 2, axis=0) / 4


def branch_residual(cols: np.ndarray, outcome: int) -> StateVector:
    col = cols[:, outcome - 1]
    return StateVector(TWO_QUBIT_LABELS, col / np.linalg.norm(col))


def decompose(enc: StateVector, basis: MeasurementBasis | None = None) -> list[Branch]:
    """Split an encoded state into its four measurement branches.

    Residuals are normalized and relabelled onto the bare two-qubit basis;
    their global phase is not meaningful.
    """
    cols = branch_amplitudes(enc, basis)
    probs = branch_probabilities(cols)
    return [Branch(o, float(probs[o - 1]), branch_residual(cols, o)) for o in OUTCOMES]


def reconstruct(projections, basis: MeasurementBasis | None = None) -> StateVector:
    """``1/2 sum_i proj_i (x) Phi_i`` over the encoded basis."""
    basis = basis or partial_bell_basis()
    amps = sum(np.kron(p.amplitudes, v.amplitudes)
               for p, v in zip(projections, basis.vectors)) / 2
    return StateVector(_ENCODED_LABELS, amps, (ATOMS, PHOTONS))


def _local_phases(phi1: float, phi2: float, name: str) -> UnitaryMatrix:
    u = kron(z_phase(phi1), z_phase(phi2))
    return UnitaryMatrix(u.matrix, name)


@lru_cache(maxsize=None)
def correction_unitary(o: int) -> tuple[UnitaryMatrix, bool]:
    """Local correction for outcome ``o`` and whether CZ was applied.

    Outcome 1 leaves ``Z1(pi/2) Z2(-pi/2) CZ psi``, outcome 2 the mirror
    image, outcome 3 ``psi`` and outcome 4 ``Z1(pi) Z2(pi) psi`` (all up to
    global phase), where ``Z(phi) = diag(1, exp(-i phi))``.
    """
    o = OutcomeLabel(o)
    half = math.pi / 2
    if o is OutcomeLabel.PHI1:
        return _local_phases(-half, half, "C1"), True
    if o is OutcomeLabel.PHI2:
        return _local_phases(half, -half, "C2"), True
    if o is OutcomeLabel.PHI3:
        return UnitaryMatrix(identity(4).matrix, "C3"), False
    return _local_phases(math.pi, math.pi, "C4"), False


def target_state(psi_in: StateVector) -> StateVector:
    return psi_in.with_amplitudes(CZ.matrix @ psi_in.amplitudes)
