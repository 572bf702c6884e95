"""Monte Carlo execution of the repeat-until-success CZ loop.

Each attempt encodes the atoms onto two photons, detects both with
efficiency ``eta`` each, samples one of the four partial-Bell outcomes from the
exact branch probabilities and applies the matching local correction.
Outcomes 1 and 2 finish the gate, outcomes 3 and 4 restore the input so the
loop can go again, and a lost photon aborts the run.

Random streams
--------------
A run is driven by one master seed.  Trial ``i`` draws exclusively from
``default_rng(SeedSequence(seed, spawn_key=(i,)))``, which is the ``i``-th child
of ``SeedSequence(seed).spawn``.  Results therefore do not depend on how
trials are split across workers.
"""

from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .gate_protocol import (
    OUTCOMES, OutcomeLabel, branch_amplitudes, branch_probabilities,
    branch_residual, correction_unitary, encode_pair, target_state,
)
from .quantum_core import (
    TWO_QUBIT_LABELS, StateVector, apply, fidelity_up_to_global_phase,
    random_state,
)

LOSS = "loss"
CHUNK = 1000
THREADS_ENV = "RUS_SIM_THREADS"


class RunStatus(Enum):
    SUCCEEDED = "succeeded"
    LOSS_ABORTED = "loss-aborted"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class DetectorModel:
    """Per-photon detection efficiency."""

    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class AttemptRecord:
    """One pass through the loop.

    ``post_state`` is the corrected atomic state, or ``None`` after a photon
    loss (the atoms are no longer in a pure state).
    """

    attempt_index: int
    outcome: OutcomeLabel | str
    correction_applied: str | None
    post_state: StateVector | None
    succeeded: bool


@dataclass(frozen=True)
class RusResult:
    final: StateVector | None
    records: list[AttemptRecord]
    status: RunStatus

    @property
    def attempts(self) -> int:
        return len(self.records)


@dataclass
class RunStatistics:
    trials: int = 0
    total_attempts: int = 0
    attempt_histogram: Counter = field(default_factory=Counter)
    successes: int = 0
    loss_failures: int = 0
    exhausted: int = 0
    outcome_counts: Counter = field(default_factory=Counter)
    fidelity_sum: float = 0.0
    min_success_fidelity: float = 1.0
    min_recovery_fidelity: float = 1.0

    @property
    def mean_attempts(self) -> float:
        return self.total_attempts / self.trials if self.trials else float("nan")

    @property
    def mean_fidelity_vs_target(self) -> float:
        return self.fidelity_sum / self.successes if self.successes else float("nan")

    def merge(self, other: RunStatistics) -> RunStatistics:
        self.trials += other.trials
        self.total_attempts += other.total_attempts
        self.attempt_histogram.update(other.attempt_histogram)
        self.successes += other.successes
        self.loss_failures += other.loss_failures
        self.exhausted += other.exhausted
        self.outcome_counts.update(other.outcome_counts)
        self.fidelity_sum += other.fidelity_sum
        self.min_success_fidelity = min(self.min_success_fidelity, other.min_success_fidelity)
        self.min_recovery_fidelity = min(self.min_recovery_fidelity, other.min_recovery_fidelity)
        return self

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean_attempts": self.mean_attempts,
            "attempt_histogram": {str(k): v for k, v in sorted(self.attempt_histogram.items())},
            "successes": self.successes,
            "loss_failures": self.loss_failures,
            "exhausted": self.exhausted,
            "outcome_counts": {str(k): v for k, v in sorted(self.outcome_counts.items(), key=str)},
            "mean_fidelity_vs_target": self.mean_fidelity_vs_target,
            "min_success_fidelity": self.min_success_fidelity,
            "min_recovery_fidelity": self.min_recovery_fidelity,
        }


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def resolve_workers(env=None) -> int:
    """Worker count from ``RUS_SIM_THREADS`` (unset -> 1, 0 -> all cores)."""
    raw = (os.environ if env is None else env).get(THREADS_ENV, "1")
    n = int(raw)
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def photons_detected(d: DetectorModel, rng: np.random.Generator) -> bool:
    first, second = rng.random(2)
    return bool(first < d.eta and second < d.eta)


def _draw(probabilities, u: float) -> int:
    acc = 0.0
    for k, p in enumerate(probabilities):
        acc += p
        if u < acc:
            return k
    return len(probabilities) - 1


def sample_outcome(enc: StateVector, rng: np.random.Generator) -> tuple[OutcomeLabel, StateVector]:
    """Draw a measurement outcome and the matching post-measurement atoms."""
    cols = branch_amplitudes(enc)
    k = _draw(branch_probabilities(cols).tolist(), rng.random())
    return OUTCOMES[k], branch_residual(cols, k + 1)


def sample_outcomes(enc: StateVector, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vector of ``size`` independent outcome labels (1..4) for one input."""
    probs = branch_probabilities(branch_amplitudes(enc))
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
    return np.minimum(idx, 3) + 1


def rus_gate(psi_in: StateVector, d: DetectorModel, max_attempts: int,
             rng: np.random.Generator) -> RusResult:
    """Repeat encode-measure-correct until a CZ outcome, a loss or the limit."""
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    state = psi_in
    records = []
    for k in range(1, max_attempts + 1):
        enc = encode_pair(state)
        if not photons_detected(d, rng):
            records.append(AttemptRecord(k, LOSS, None, None, False))
            return RusResult(None, records, RunStatus.LOSS_ABORTED)
        outcome, residual = sample_outcome(enc, rng)
        u, succeeded = correction_unitary(outcome)
        state = apply(u, residual)
        records.append(AttemptRecord(k, outcome, u.name, state, succeeded))
        if succeeded:
            return RusResult(state, records, RunStatus.SUCCEEDED)
    return RusResult(state, records, RunStatus.EXHAUSTED)


def attempt_success_probability(d: DetectorModel) -> float:
    """Both photons detected (eta^2) and an entangling outcome (1/2)."""
    return d.eta ** 2 / 2


def _run_chunk(args) -> RunStatistics:
    seed, start, stop, psi_in, eta, max_attempts = args
    d = DetectorModel(eta)
    st = RunStatistics()
    for i in range(start, stop):
        rng = trial_rng(seed, i)
        psi = psi_in if psi_in is not None else random_state(rng, TWO_QUBIT_LABELS)
        result = rus_gate(psi, d, max_attempts, rng)
        st.trials += 1
        st.total_attempts += result.attempts
        st.attempt_histogram[result.attempts] += 1
        for rec in result.records:
            st.outcome_counts[rec.outcome if rec.outcome == LOSS else int(rec.outcome)] += 1
            if rec.outcome in (OutcomeLabel.PHI3, OutcomeLabel.PHI4):
                f = fidelity_up_to_global_phase(rec.post_state, psi)
                st.min_recovery_fidelity = min(st.min_recovery_fidelity, f)
        if result.status is RunStatus.SUCCEEDED:
            f = fidelity_up_to_global_phase(result.final, target_state(psi))
            st.successes += 1
            st.fidelity_sum += f
            st.min_success_fidelity = min(st.min_success_fidelity, f)
        elif result.status is RunStatus.LOSS_ABORTED:
            st.loss_failures += 1
        else:
            st.exhausted += 1
    return st


def run_statistics(psi_in: StateVector | None, d: DetectorModel, trials: int,
                   seed: int, max_attempts: int = 64,
                   workers: int | None = None) -> RunStatistics:
    """Run ``trials`` independent RUS gates and aggregate them.

    ``psi_in=None`` draws a fresh Haar-random input for every trial from that
    trial's own stream.  Chunks have a fixed size and are merged in index
    order, so the result is bit-identical for any worker count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    workers = resolve_workers() if workers is None else workers
    jobs = [(seed, s, min(s + CHUNK, trials), psi_in, d.eta, max_attempts)
            for s in range(0, trials, CHUNK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(job) for job in jobs]
    total = RunStatistics()
    for part in parts:
        total.merge(part)
    return total


@dataclass(frozen=True)
class AttemptTally:
    attempts: int
    detected: int
    heralded_successes: int
    outcome_counts: dict[int, int]

    @property
    def success_rate(self) -> float:
        return self.heralded_successes / self.attempts


def simulate_attempts(psi_in: StateVector, d: DetectorModel, attempts: int,
                      rng: np.random.Generator) -> AttemptTally:
    """Independent single attempts on a fixed input (no loop, no abort)."""
    detected = np.all(rng.random((attempts, 2)) < d.eta, axis=1)
    outcomes = sample_outcomes(encode_pair(psi_in), rng, attempts)
    heralded = detected & (outcomes <= 2)
    counts = {k: int(np.sum(outcomes[detected] == k)) for k in range(1, 5)}
    return AttemptTally(attempts, int(detected.sum()), int(heralded.sum()), counts)


def cluster_growth_experiment(n_qubits: int, d: DetectorModel, trials: int,
                              rng: np.random.Generator) -> dict[int, float]:
    """Mean attempt cost of growing a linear cluster chain to each length.

    Chain model: edges are added one at a time with the RUS gate; every
    attempt heralds success with probability ``eta^2/2``.  A heralded
    failure leaves the chain intact, and a loss only costs the current
    attempt (the newest qubit is re-prepared), so each edge costs a
    geometric number of attempts.
    """
    if n_qubits < 2:
        raise ValueError("a chain needs at least two qubits")
    p = attempt_success_probability(d)
    if p <= 0:
        raise ValueError("eta must be > 0 to grow a cluster")
    edge_costs = rng.geometric(p, size=(trials, n_qubits - 1))
    mean_cost = np.cumsum(edge_costs, axis=1).mean(axis=0)
    return {n: float(c) for n, c in zip(range(2, n_qubits + 1), mean_cost)}
