"""Named experiments, their configuration and the result envelope.

Every experiment returns a payload (summary numbers plus row tables that can
be plotted directly) and a list of verdicts.  A verdict is an observed value
compared against an expected value with an explicit tolerance, so a result
file can be checked without re-running anything.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .gate_protocol import (
    OutcomeLabel, PhaseTriple, branch_projections, correction_unitary,
    decompose, encode_pair, is_entangling, max_unbiasedness_deviation,
    mub_vector, partial_bell_basis, phase_triple_of, reconstruct, target_state,
    two_qubit_state, PHOTON_PAIR_LABELS,
)
from .linear_optics import (
    ZERO_PROBABILITY, abstract_distribution, bell_multiport, classify_fig2a,
    classify_multiport, embed_timebin_to_modes, fig2a_outcome_distribution,
    max_distribution_deviation, multiport_outcome_distribution, scatter_state,
    simulate_fig2a, simulate_multiport, FockState,
)
from .quantum_core import (
    TOL, TWO_QUBIT_LABELS, apply, basis_state, fidelity_up_to_global_phase,
    random_state,
)
from .rus_engine import (
    DetectorModel, attempt_success_probability, cluster_growth_experiment,
    run_statistics, sample_outcomes, simulate_attempts, trial_rng,
)
from .stats import (
    THREE_SIGMA_PVALUE, Band, binomial_band, chi_square_independence,
    chi_square_uniform, geometric_mean_band, geometric_pmf, linear_fit,
)

EXPERIMENTS = (
    "decompose-check", "mub-check", "fig2a-equivalence", "multiport-equivalence",
    "rus-statistics", "eta-sweep", "cluster-growth",
)
FORMATS = ("json", "csv")
PRESETS = ("random", "bell", "product")
ETA_GRID = (0.5, 0.8, 0.95)
CLUSTER_ETAS = (0.95, 1.0)
CLUSTER_MAX_N = 50
HISTOGRAM_BINS = 8
R2_THRESHOLD = 0.99
MAX_ATTEMPTS = 64
NORMALIZATION_TOL = 1e-9

ASSUMPTIONS = {
    "loss": "a lost photon aborts the run; the atomic state after loss is undefined",
    "cluster": "linear chain grown edge by edge; each edge costs geometric(eta^2/2) attempts",
}

R = 1 / math.sqrt(2)
# normalized output amplitudes of each Phi_i through the 4x4 Bell multiport
MULTIPORT_GOLDEN = {
    1: {(1, 0, 0, 1): R, (0, 1, 1, 0): -R},
    2: {(1, 1, 0, 0): -R, (0, 0, 1, 1): R},
    3: {(2, 0, 0, 0): R, (0, 0, 2, 0): -R},
    4: {(0, 2, 0, 0): -R, (0, 0, 0, 2): R},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    trials: int = 10_000
    eta: float = 1.0
    input_state: str | list = "random"
    output_path: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"choose from {', '.join(EXPERIMENTS)}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if isinstance(self.input_state, str):
            if self.input_state not in PRESETS:
                raise ConfigError(f"input state preset must be one of {PRESETS}")
        else:
            self.input_state = [[float(c.real), float(c.imag)]
                                for c in parse_amplitudes(self.input_state)]

    def state(self):
        """The configured input, or ``None`` for per-trial random states."""
        if self.input_state == "random":
            return None
        if self.input_state == "bell":
            return two_qubit_state([R, 0, 0, R])
        if self.input_state == "product":
            return basis_state(TWO_QUBIT_LABELS, "00")
        amps = np.array([complex(re, im) for re, im in self.input_state])
        return two_qubit_state(amps / np.linalg.norm(amps))


def parse_amplitudes(values) -> list[complex]:
    """Four amplitudes from ``[re, im]`` pairs, numbers or strings like ``"0.5-0.5j"``."""
    amps = []
    for v in values:
        try:
            if isinstance(v, (list, tuple)):
                re, im = v
                amps.append(complex(float(re), float(im)))
            elif isinstance(v, str):
                amps.append(complex(v.replace(" ", "")))
            else:
                amps.append(complex(v))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cannot read amplitude {v!r}") from exc
    if len(amps) != 4:
        raise ConfigError(f"input state needs 4 amplitudes, got {len(amps)}")
    norm2 = sum(abs(a) ** 2 for a in amps)
    if not all(math.isfinite(abs(a)) for a in amps) or abs(norm2 - 1) > NORMALIZATION_TOL:
        raise ConfigError(f"input state not normalized: sum |c|^2 = {norm2!r}")
    return amps


def to_jsonable(obj):
    """Plain JSON types; complex numbers become ``[re, im]``, NaN becomes None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


@dataclass
class ResultEnvelope:
    config: dict
    version: str
    payload: dict
    verdicts: list[dict]
    duration_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def comparable(self) -> dict:
        """Everything except the wall-clock duration."""
        d = asdict(self)
        del d["duration_ms"]
        return d

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ResultEnvelope:
        return cls(**json.loads(text))


def verdict(name: str, band: Band) -> dict:
    return {"name": name, **band.as_dict()}


def at_most(name: str, observed: float, limit: float) -> dict:
    """Deviation-style verdict: ``observed`` must be within ``limit`` of zero."""
    return verdict(name, Band(float(observed), 0.0, limit))


def flag(name: str, ok: bool) -> dict:
    return verdict(name, Band(1.0 if ok else 0.0, 1.0, 0.0))


@dataclass
class Result:
    payload: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)


# --- decompose-check ---------------------------------------------------------

def check_decomposition(psi):
    """Worst deviations of the branch expansion for a single input."""
    enc = encode_pair(psi)
    recon_err = float(np.max(np.abs(reconstruct(branch_projections(enc)).amplitudes
                                    - enc.amplitudes)))
    rows = []
    for b in decompose(enc):
        u, cz = correction_unitary(b.outcome)
        ref = target_state(psi) if cz else psi
        rows.append({
            "outcome": int(b.outcome),
            "probability": b.probability,
            "gate_succeeded": cz,
            "correction": u.name,
            "corrected_fidelity": fidelity_up_to_global_phase(apply(u, b.residual), ref),
        })
    return recon_err, rows


def run_decompose_check(cfg: ExperimentConfig) -> Result:
    psi = cfg.state()
    if psi is None:
        states = [random_state(trial_rng(cfg.seed, i), TWO_QUBIT_LABELS)
                  for i in range(cfg.trials)]
    else:
        states = [psi]
    max_recon = max_prob = max_fid = 0.0
    first_rows = None
    for s in states:
        recon, rows = check_decomposition(s)
        first_rows = first_rows or rows
        max_recon = max(max_recon, recon)
        max_prob = max(max_prob, max(abs(r["probability"] - 0.25) for r in rows))
        max_fid = max(max_fid, max(abs(r["corrected_fidelity"] - 1) for r in rows))
    res = Result()
    res.payload = {
        "summary": {"states_checked": len(states),
                    "max_reconstruction_error": max_recon,
                    "max_probability_deviation": max_prob,
                    "max_fidelity_deviation": max_fid},
        "tables": {"branches": first_rows},
    }
    res.verdicts = [
        at_most("reconstruction_error", max_recon, TOL),
        at_most("outcome_probability_minus_quarter", max_prob, TOL),
        at_most("corrected_fidelity_deficit", max_fid, TOL),
    ]
    return res


# --- mub-check ---------------------------------------------------------------

def run_mub_check(cfg: ExperimentConfig) -> Result:
    basis = partial_bell_basis()
    rng = trial_rng(cfg.seed, 0)
    rows = []
    expected_entangling = {"entangled": True, "product": False}
    classification_ok = True
    for o, v, tag in zip(OutcomeLabel, basis.vectors, basis.classification):
        p = phase_triple_of(v)
        ent = is_entangling(p)
        classification_ok &= ent == expected_entangling[tag]
        rows.append({"outcome": int(o), "classification": tag,
                     "phi1": p.phi1, "phi2": p.phi2, "phi3": p.phi3,
                     "is_entangling": ent,
                     "overlap_deviation": max_unbiasedness_deviation([v])})
    random_vectors = [mub_vector(PhaseTriple(*rng.uniform(0, 2 * math.pi, 3)))
                      for _ in range(cfg.trials)]
    dev_random = max_unbiasedness_deviation(random_vectors)
    dev_basis = max_unbiasedness_deviation(basis.vectors)
    gram_dev = float(np.max(np.abs(basis.gram() - np.eye(4))))
    res = Result()
    res.payload = {
        "summary": {"random_triples": cfg.trials,
                    "max_overlap_deviation_basis": dev_basis,
                    "max_overlap_deviation_random": dev_random,
                    "max_gram_deviation": gram_dev},
        "tables": {"partial_bell_basis": rows},
    }
    res.verdicts = [
        at_most("basis_overlap_modulus_minus_half", dev_basis, TOL),
        at_most("random_overlap_modulus_minus_half", dev_random, TOL),
        at_most("basis_gram_minus_identity", gram_dev, TOL),
        flag("entangling_classification", classification_ok),
    ]
    return res


# --- hardware equivalence ----------------------------------------------------

def photonic_test_states(seed: int, n_random: int):
    """Partial Bell states, computational states, then Haar-random states."""
    states = list(partial_bell_basis().vectors)
    states += [basis_state(PHOTON_PAIR_LABELS, lab) for lab in PHOTON_PAIR_LABELS]
    states += [random_state(trial_rng(seed, i), PHOTON_PAIR_LABELS) for i in range(n_random)]
    return states


def _golden_patterns(simulate, classify):
    rows = []
    for o, v in zip(OutcomeLabel, partial_bell_basis().vectors):
        for pattern, p in sorted(simulate(v).items(), key=lambda kv: str(kv[0])):
            if p > ZERO_PROBABILITY:
                rows.append({"input": f"Phi{int(o)}", "pattern": str(pattern),
                             "probability": p, "classified_as": int(classify(pattern))})
    return rows


def _equivalence(cfg: ExperimentConfig, distribution, simulate, classify) -> Result:
    states = photonic_test_states(cfg.seed, cfg.trials)
    max_dev = max(max_distribution_deviation(distribution(s), abstract_distribution(s))
                  for s in states)
    golden = _golden_patterns(simulate, classify)
    rules_ok = all(r["classified_as"] == int(r["input"][3:]) for r in golden)
    res = Result()
    res.payload = {
        "summary": {"states_checked": len(states), "max_distribution_deviation": max_dev},
        "tables": {"basis_click_patterns": golden},
    }
    res.verdicts = [
        at_most("hardware_vs_abstract_distribution", max_dev, TOL),
        flag("click_rules_reproduce_basis_states", rules_ok),
    ]
    return res


def run_fig2a_equivalence(cfg: ExperimentConfig) -> Result:
    return _equivalence(cfg, fig2a_outcome_distribution, simulate_fig2a, classify_fig2a)


def multiport_golden_deviation():
    """Worst amplitude error against the expected multiport outputs, per
    input after removing the best global phase."""
    rows, worst = [], 0.0
    u = bell_multiport()
    for o, v in zip(OutcomeLabel, partial_bell_basis().vectors):
        out = scatter_state(u, embed_timebin_to_modes(v))
        expected = {FockState(k): a for k, a in MULTIPORT_GOLDEN[int(o)].items()}
        keys = sorted(out)
        got = np.array([out[k] for k in keys])
        ref = np.array([expected.get(k, 0.0) for k in keys], dtype=complex)
        overlap = np.vdot(ref, got)
        phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
        dev = float(np.max(np.abs(got - phase * ref)))
        worst = max(worst, dev)
        for k in keys:
            if abs(out[k]) > TOL or k in expected:
                rows.append({"input": f"Phi{int(o)}", "output": list(k.occupations),
                             "amplitude": complex(out[k]),
                             "expected": complex(expected.get(k, 0.0))})
    return worst, rows


def run_multiport_equivalence(cfg: ExperimentConfig) -> Result:
    res = _equivalence(cfg, multiport_outcome_distribution, simulate_multiport,
                       classify_multiport)
    worst, rows = multiport_golden_deviation()
    res.payload["summary"]["max_golden_amplitude_deviation"] = worst
    res.payload["tables"]["golden_amplitudes"] = rows
    res.verdicts.append(at_most("golden_output_amplitudes", worst, TOL))
    return res


# --- Monte Carlo -------------------------------------------------------------

def structured_states(seed: int):
    """Ten inputs of different structure: basis, entangled, product, random."""
    h = 0.5
    named = {
        "00": [1, 0, 0, 0], "01": [0, 1, 0, 0], "10": [0, 0, 1, 0], "11": [0, 0, 0, 1],
        "bell+": [R, 0, 0, R], "psi-": [0, R, -R, 0],
        "plus-plus": [h, h, h, h], "phased": [h, 1j * h, -h, -1j * h],
    }
    states = {k: two_qubit_state(v) for k, v in named.items()}
    for i in range(2):
        states[f"haar{i}"] = random_state(trial_rng(seed, 10_000 + i), TWO_QUBIT_LABELS)
    return states


def outcome_uniformity(seed: int, samples: int):
    rows, table = [], []
    for j, (name, psi) in enumerate(structured_states(seed).items()):
        outcomes = sample_outcomes(encode_pair(psi), trial_rng(seed, 20_000 + j), samples)
        counts = [int(np.sum(outcomes == k)) for k in range(1, 5)]
        table.append(counts)
        rows.append({"state": name, "n1": counts[0], "n2": counts[1],
                     "n3": counts[2], "n4": counts[3],
                     "p_value": chi_square_uniform(counts)})
    return rows, chi_square_independence(table)


def run_rus_statistics(cfg: ExperimentConfig) -> Result:
    d = DetectorModel(cfg.eta)
    st = run_statistics(cfg.state(), d, cfg.trials, cfg.seed, MAX_ATTEMPTS)
    # a run stops on a heralded CZ or on a loss
    p_stop = attempt_success_probability(d) + (1 - d.eta ** 2)
    hist_rows, hist_verdicts = [], []
    for k in range(1, HISTOGRAM_BINS + 1):
        band = binomial_band(st.attempt_histogram.get(k, 0), st.trials, geometric_pmf(k, p_stop))
        hist_rows.append({"attempts": k, "count": st.attempt_histogram.get(k, 0),
                          **band.as_dict()})
        hist_verdicts.append(verdict(f"attempt_histogram_k{k}", band))
    mean_band = geometric_mean_band(st.mean_attempts, st.trials, p_stop)
    uniform_rows, p_indep = outcome_uniformity(cfg.seed, cfg.trials)
    res = Result()
    res.payload = {
        "summary": {**st.as_dict(), "eta": cfg.eta, "stop_probability": p_stop,
                    "expected_mean_attempts": 1 / p_stop,
                    "outcome_independence_p_value": p_indep},
        "tables": {"attempt_histogram": hist_rows, "outcome_uniformity": uniform_rows},
        "assumptions": [ASSUMPTIONS["loss"]],
    }
    res.verdicts = [verdict("mean_attempts", mean_band), *hist_verdicts]
    if st.successes:
        res.verdicts.append(at_most("success_fidelity_deficit", 1 - st.min_success_fidelity, TOL))
    res.verdicts.append(at_most("recovery_fidelity_deficit", 1 - st.min_recovery_fidelity, TOL))
    if d.eta < 1:
        res.verdicts.append(verdict(
            "success_fraction",
            binomial_band(st.successes, st.trials, attempt_success_probability(d) / p_stop)))
    for row in uniform_rows:
        res.verdicts.append(verdict(f"uniform_outcomes_{row['state']}",
                                    Band(float(row["p_value"] > THREE_SIGMA_PVALUE), 1.0, 0.0)))
    res.verdicts.append(verdict("outcomes_independent_of_input",
                                Band(float(p_indep > THREE_SIGMA_PVALUE), 1.0, 0.0)))
    return res


def _with_configured(grid, eta):
    return tuple(sorted(set(grid) | {eta}))


def run_eta_sweep(cfg: ExperimentConfig) -> Result:
    psi = cfg.state()
    if psi is None:
        psi = random_state(trial_rng(cfg.seed, 0), TWO_QUBIT_LABELS)
    rows, verdicts = [], []
    for j, eta in enumerate(_with_configured(ETA_GRID, cfg.eta)):
        d = DetectorModel(eta)
        tally = simulate_attempts(psi, d, cfg.trials, trial_rng(cfg.seed, 1 + j))
        band = binomial_band(tally.heralded_successes, cfg.trials,
                             attempt_success_probability(d))
        rows.append({"eta": eta, "attempts": tally.attempts, "detected": tally.detected,
                     "heralded_successes": tally.heralded_successes, **band.as_dict()})
        verdicts.append(verdict(f"success_rate_eta_{eta:g}", band))
    res = Result()
    res.payload = {"summary": {"attempts_per_eta": cfg.trials},
                   "tables": {"success_rate": rows}}
    res.verdicts = verdicts
    return res


def run_cluster_growth(cfg: ExperimentConfig) -> Result:
    curve_rows, fit_rows, verdicts = [], [], []
    etas = [e for e in _with_configured(CLUSTER_ETAS, cfg.eta) if e > 0]
    for j, eta in enumerate(etas):
        d = DetectorModel(eta)
        curve = cluster_growth_experiment(CLUSTER_MAX_N, d, cfg.trials, trial_rng(cfg.seed, j))
        ns = sorted(curve)
        slope, intercept, r2 = linear_fit(ns, [curve[n] for n in ns])
        p = attempt_success_probability(d)
        curve_rows += [{"eta": eta, "n_qubits": n, "mean_attempts": curve[n],
                        "expected": (n - 1) / p} for n in ns]
        fit_rows.append({"eta": eta, "slope": slope, "intercept": intercept, "r2": r2,
                         "expected_slope": 1 / p})
        verdicts.append(verdict(f"linear_fit_r2_eta_{eta:g}", Band(r2, 1.0, 1 - R2_THRESHOLD)))
        # sum of n-1 geometric(p) costs: variance (n-1)(1-p)/p^2
        n = CLUSTER_MAX_N
        sigma = math.sqrt((n - 1) * (1 - p) / p ** 2 / cfg.trials)
        verdicts.append(verdict(f"chain_cost_n{n}_eta_{eta:g}",
                                Band(curve[n], (n - 1) / p, 3 * sigma)))
    res = Result()
    res.payload = {"summary": {"max_n": CLUSTER_MAX_N, "trials": cfg.trials},
                   "tables": {"growth_curve": curve_rows, "linear_fit": fit_rows},
                   "assumptions": [ASSUMPTIONS["cluster"]]}
    res.verdicts = verdicts
    return res


RUNNERS = {
    "decompose-check": run_decompose_check,
    "mub-check": run_mub_check,
    "fig2a-equivalence": run_fig2a_equivalence,
    "multiport-equivalence": run_multiport_equivalence,
    "rus-statistics": run_rus_statistics,
    "eta-sweep": run_eta_sweep,
    "cluster-growth": run_cluster_growth,
}


def run_experiment(cfg: ExperimentConfig) -> ResultEnvelope:
    """Run one experiment; the payload is deterministic for a fixed config."""
    start = time.perf_counter()
    res = RUNNERS[cfg.experiment](cfg)
    return ResultEnvelope(
        config=to_jsonable(asdict(cfg)),
        version=__version__,
        payload=to_jsonable(res.payload),
        verdicts=to_jsonable(res.verdicts),
        duration_ms=(time.perf_counter() - start) * 1000,
    )
