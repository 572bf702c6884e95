"""Two-photon Fock-space models of the partial Bell measurement.

Two realizations are simulated:

* polarization encoding (E -> h, L -> v), local rotations ``U1``/``U2`` and a
  50:50 beam splitter followed by polarization-resolving detectors;
* spatial encoding into the four input ports of a 4x4 Bell multiport.

Mode unitaries act on creation operators as ``a_n^dag -> sum_m U[m, n] b_m^dag``.
Amplitudes are always taken with respect to *normalized* Fock states
``|n_1 .. n_m> = prod (a_k^dag)^{n_k} / sqrt(n_k!) |vac>``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np

from .gate_protocol import (
    PHOTON_PAIR_LABELS, OutcomeLabel, partial_bell_basis,
)
from .quantum_core import StateVector, UnitaryMatrix

# Probabilities below this are treated as exact zeros (rounding residue of
# destructive interference); physical probabilities here are >= 1e-6 or so.
ZERO_PROBABILITY = 1e-20

MULTIPORT_DETECTORS = (1, 2, 3, 4)
FIG2A_DETECTORS = ("A:h", "A:v", "B:h", "B:v")


class PatternError(ValueError):
    pass


class LossyPattern(PatternError):
    """Fewer than two photons were registered."""


class UnreachablePattern(PatternError):
    """Click pattern that no partial Bell state can produce."""


@dataclass(frozen=True, order=True)
class FockState:
    """Occupation numbers, one per optical mode."""

    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        if any(n < 0 for n in occ):
            raise ValueError(f"negative occupation in {occ}")
        object.__setattr__(self, "occupations", occ)

    @classmethod
    def from_modes(cls, modes, m: int) -> FockState:
        """Fock state with one photon per entry of ``modes`` (0-based)."""
        occ = [0] * m
        for k in modes:
            occ[k] += 1
        return cls(tuple(occ))

    @property
    def n_photons(self) -> int:
        return sum(self.occupations)

    @property
    def n_modes(self) -> int:
        return len(self.occupations)

    def modes(self) -> tuple[int, ...]:
        """Mode index of every photon, repeated by occupation."""
        return tuple(k for k, n in enumerate(self.occupations) for _ in range(n))

    def normalization(self) -> float:
        """``sqrt(prod n_k!)``: norm of the raw creation-operator string."""
        return math.sqrt(math.prod(math.factorial(n) for n in self.occupations))


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    matrix: np.ndarray
    name: str = "U"

    def __post_init__(self):
        # reuse the unitarity check of the qubit layer
        u = UnitaryMatrix(self.matrix, self.name)
        object.__setattr__(self, "matrix", u.matrix)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: ModeUnitary) -> ModeUnitary:
        return ModeUnitary(self.matrix @ other.matrix, f"{self.name}*{other.name}")


@dataclass(frozen=True)
class ClickPattern:
    """Detectors that fired together with the photon count inferred for each."""

    counts: tuple[tuple[Hashable, int], ...]

    def __post_init__(self):
        counts = tuple(sorted((d, int(n)) for d, n in self.counts if n > 0))
        if len({d for d, _ in counts}) != len(counts):
            raise ValueError(f"detector listed twice in {counts}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, counts: Mapping[Hashable, int]) -> ClickPattern:
        return cls(tuple(counts.items()))

    @classmethod
    def from_clicks(cls, fired, total_photons: int = 2) -> ClickPattern:
        """Pattern from threshold (non number-resolving) detectors.

        A lone click while ``total_photons`` are known to be present is read
        as all of them landing on that detector.
        """
        fired = sorted(set(fired))
        if len(fired) == 1:
            return cls(((fired[0], total_photons),))
        return cls(tuple((d, 1) for d in fired))

    @classmethod
    def from_fock(cls, state: FockState, detectors) -> ClickPattern:
        return cls(tuple(zip(detectors, state.occupations)))

    @property
    def fired(self) -> frozenset:
        return frozenset(d for d, _ in self.counts)

    @property
    def total(self) -> int:
        return sum(n for _, n in self.counts)

    def __str__(self):
        return " ".join(f"{d}x{n}" if n > 1 else str(d) for d, n in self.counts)


def permanent(a: np.ndarray) -> complex:
    n = a.shape[0]
    return complex(sum(math.prod(a[i, s[i]] for i in range(n))
                       for s in itertools.permutations(range(n))))


def two_photon_configurations(m: int) -> list[FockState]:
    return [FockState.from_modes(pair, m)
            for pair in itertools.combinations_with_replacement(range(m), 2)]


def scatter_two_photons(u: ModeUnitary, input: FockState) -> dict[FockState, complex]:
    """Output amplitudes of a two-photon Fock state through ``u``.

    ``<S|U|T> = perm(U[S, T]) / sqrt(prod s_k! prod t_k!)`` with rows picked
    by the output photons and columns by the input photons.
    """
    if input.n_modes != u.m:
        raise ValueError(f"{input.n_modes}-mode state through {u.m}-mode unitary")
    if input.n_photons != 2:
        raise ValueError(f"expected 2 photons, got {input.n_photons}")
    cols = list(input.modes())
    out = {}
    for s in two_photon_configurations(u.m):
        sub = u.matrix[np.ix_(list(s.modes()), cols)]
        out[s] = permanent(sub) / (s.normalization() * input.normalization())
    return out


def scatter_state(u: ModeUnitary, state: Mapping[FockState, complex]) -> dict[FockState, complex]:
    """Linear extension of :func:`scatter_two_photons` to superpositions."""
    out = {s: 0j for s in two_photon_configurations(u.m)}
    for fock, c in state.items():
        if c == 0:
            continue
        for s, a in scatter_two_photons(u, fock).items():
            out[s] += c * a
    return out


def bell_multiport(n: int = 4) -> ModeUnitary:
    """``U[n, m] = i^((n-1)(m-1)) / 2`` (1-based) for the 4x4 Bell multiport."""
    if n != 4:
        raise ValueError(f"only the 4x4 Bell multiport is supported, got n={n}")
    powers = np.array([1, 1j, -1, -1j])
    k = np.arange(n)
    return ModeUnitary(powers[np.outer(k, k) % 4] / 2, "Bell4")


def beam_splitter() -> ModeUnitary:
    """Symmetric 50:50 splitter: transmission 1/sqrt2, reflection i/sqrt2."""
    r = 1 / math.sqrt(2)
    return ModeUnitary(np.array([[r, 1j * r], [1j * r, r]]), "BS")


_MULTIPORT_INPUT = {
    "EE": (0, 1), "EL": (0, 3), "LE": (1, 2), "LL": (2, 3),
}


def _check_photonic(photonic: StateVector):
    if photonic.labels != PHOTON_PAIR_LABELS:
        raise ValueError(f"expected a state over {PHOTON_PAIR_LABELS}")
    if not photonic.is_normalized():
        raise ValueError("photonic state must be normalized")


def embed_timebin_to_modes(photonic: StateVector) -> dict[FockState, complex]:
    """Route source-1 photons to ports 1 (E) / 3 (L), source-2 to 2 (E) / 4 (L)."""
    _check_photonic(photonic)
    return {FockState.from_modes(_MULTIPORT_INPUT[lab], 4): complex(c)
            for lab, c in zip(photonic.labels, photonic.amplitudes)}


def _distribution(amplitudes: Mapping[FockState, complex], detectors) -> dict[ClickPattern, float]:
    return {ClickPattern.from_fock(s, detectors): abs(a) ** 2
            for s, a in amplitudes.items()}


def simulate_multiport(photonic: StateVector) -> dict[ClickPattern, float]:
    out = scatter_state(bell_multiport(), embed_timebin_to_modes(photonic))
    return _distribution(out, MULTIPORT_DETECTORS)


def classify_multiport(c: ClickPattern) -> OutcomeLabel:
    """Map multiport detector clicks (ports 1..4) to the detected ``Phi_i``."""
    if c.total < 2:
        raise LossyPattern(f"only {c.total} photon(s) registered: {c}")
    if c.total > 2 or not c.fired <= set(MULTIPORT_DETECTORS):
        raise UnreachablePattern(f"not a two-photon multiport pattern: {c}")
    if len(c.fired) == 1:
        (port,) = c.fired
        return OutcomeLabel.PHI3 if port in (1, 3) else OutcomeLabel.PHI4
    fired = c.fired
    if fired in ({1, 4}, {2, 3}):
        return OutcomeLabel.PHI1
    if fired in ({1, 2}, {3, 4}):
        return OutcomeLabel.PHI2
    raise UnreachablePattern(f"ports {sorted(fired)} carry zero amplitude")


def polarization_rotations() -> tuple[ModeUnitary, ModeUnitary]:
    """``U_i = |h><x_i| + |v><y_i|`` in the (h, v) basis, with E -> h, L -> v."""
    basis = partial_bell_basis()
    rotations = []
    for i, (x, y) in enumerate(zip(basis.x_states, basis.y_states), start=1):
        rotations.append(ModeUnitary(np.vstack([x.amplitudes.conj(),
                                                y.amplitudes.conj()]), f"U{i}"))
    return rotations[0], rotations[1]


def fig2a_network() -> ModeUnitary:
    """Rotations then beam splitter on modes ordered (A:h, A:v, B:h, B:v)."""
    u1, u2 = polarization_rotations()
    rot = np.zeros((4, 4), dtype=np.complex128)
    rot[:2, :2] = u1.matrix
    rot[2:, 2:] = u2.matrix
    bs = np.kron(beam_splitter().matrix, np.eye(2))
    return ModeUnitary(bs @ rot, "BS*U1U2")


_POL_MODE = {"E": 0, "L": 1}


def embed_timebin_to_polarization(photonic: StateVector) -> dict[FockState, complex]:
    """Source 1 enters port A, source 2 port B; E becomes h, L becomes v."""
    _check_photonic(photonic)
    out = {}
    for lab, c in zip(photonic.labels, photonic.amplitudes):
        modes = (_POL_MODE[lab[0]], 2 + _POL_MODE[lab[1]])
        out[FockState.from_modes(modes, 4)] = complex(c)
    return out


def simulate_fig2a(photonic: StateVector) -> dict[ClickPattern, float]:
    out = scatter_state(fig2a_network(), embed_timebin_to_polarization(photonic))
    return _distribution(out, FIG2A_DETECTORS)


def classify_fig2a(c: ClickPattern) -> OutcomeLabel:
    """Map polarization-resolved clicks (``"A:h"`` etc.) to ``Phi_i``."""
    if c.total < 2:
        raise LossyPattern(f"only {c.total} photon(s) registered: {c}")
    if c.total > 2 or not c.fired <= set(FIG2A_DETECTORS):
        raise UnreachablePattern(f"not a two-photon polarization pattern: {c}")
    photons = [d.split(":") for d, n in c.counts for _ in range(n)]
    (port1, pol1), (port2, pol2) = photons
    if pol1 == pol2:
        return OutcomeLabel.PHI3 if pol1 == "h" else OutcomeLabel.PHI4
    return OutcomeLabel.PHI1 if port1 == port2 else OutcomeLabel.PHI2


def outcome_distribution(patterns: Mapping[ClickPattern, float], classify) -> dict[OutcomeLabel, float]:
    """Aggregate click-pattern probabilities into outcome probabilities."""
    out = {o: 0.0 for o in OutcomeLabel}
    for pattern, p in patterns.items():
        if p <= ZERO_PROBABILITY:
            continue
        out[classify(pattern)] += p
    return out


def abstract_distribution(photonic: StateVector) -> dict[OutcomeLabel, float]:
    """``|<Phi_i|photonic>|^2`` for the ideal partial Bell measurement."""
    basis = partial_bell_basis()
    return {o: abs(np.vdot(basis[o].amplitudes, photonic.amplitudes)) ** 2
            for o in OutcomeLabel}


def fig2a_outcome_distribution(photonic: StateVector) -> dict[OutcomeLabel, float]:
    return outcome_distribution(simulate_fig2a(photonic), classify_fig2a)


def multiport_outcome_distribution(photonic: StateVector) -> dict[OutcomeLabel, float]:
    return outcome_distribution(simulate_multiport(photonic), classify_multiport)


def max_distribution_deviation(a: Mapping, b: Mapping) -> float:
    return max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b))

