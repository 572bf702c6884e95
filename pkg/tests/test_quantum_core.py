import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rus_sim.gate_protocol import (
    PHOTON_PAIR_LABELS, PhaseTriple, encode_pair, mub_vector, partial_bell_basis,
    two_qubit_state,
)
from rus_sim.quantum_core import (
    CZ, MAX_AMPLITUDES, QUBIT_LABELS, TOL, TWO_QUBIT_LABELS, BasisMismatchError,
    DimensionError, NotNormalizedError, NotUnitaryError, StateVector,
    UnitaryMatrix, UnknownSubsystemError, apply, basis_state,
    fidelity_up_to_global_phase, inner, kron, project_partial, random_state,
    tensor, z_phase,
)
from oracles import project_by_components

R = 1 / math.sqrt(2)


def ket(*amps, labels=TWO_QUBIT_LABELS):
    return StateVector(labels, amps)


def test_state_vector_validates_shape_and_labels():
    with pytest.raises(DimensionError):
        StateVector(("0", "1"), [1, 0, 0])
    with pytest.raises(BasisMismatchError):
        StateVector(("0", "0"), [1, 0])
    with pytest.raises(ValueError):
        StateVector(("0", "1"), [np.nan, 0])
    with pytest.raises(DimensionError):
        StateVector(tuple(str(i) for i in range(MAX_AMPLITUDES + 1)),
                    np.ones(MAX_AMPLITUDES + 1))
    with pytest.raises(BasisMismatchError):
        StateVector(("0;E", "1"), [1, 0], ("atom", "photon"))


def test_state_vector_is_immutable():
    s = basis_state(QUBIT_LABELS, "0")
    with pytest.raises(ValueError):
        s.amplitudes[0] = 2


# --- tensor ------------------------------------------------------------------

def test_tensor_of_basis_states():
    out = tensor(basis_state(QUBIT_LABELS, "0"), basis_state(QUBIT_LABELS, "1"))
    assert out.labels == TWO_QUBIT_LABELS
    np.testing.assert_array_equal(out.amplitudes, [0, 1, 0, 0])


def test_tensor_distributes_over_superposition():
    plus = StateVector(QUBIT_LABELS, [R, R])
    out = tensor(plus, basis_state(QUBIT_LABELS, "0"))
    np.testing.assert_allclose(out.amplitudes, [R, 0, R, 0], atol=TOL)
    assert out.is_normalized()


def test_tensor_builds_coefficient_layout_of_two_qubit_input():
    # alpha|00> + beta|01> + gamma|10> + delta|11> from two product factors
    a = StateVector(QUBIT_LABELS, [0.6, 0.8])
    b = StateVector(QUBIT_LABELS, [R, 1j * R])
    out = tensor(a, b)
    np.testing.assert_allclose(out.amplitudes, [0.6 * R, 0.6j * R, 0.8 * R, 0.8j * R])


def test_tensor_with_named_subsystems_keeps_structure():
    atoms = StateVector(QUBIT_LABELS, [1, 0], ("atom",))
    photon = StateVector(("E", "L"), [0, 1], ("photon",))
    out = tensor(atoms, photon)
    assert out.labels == ("0;E", "0;L", "1;E", "1;L")
    assert out.subsystems == ("atom", "photon")


def test_tensor_rejects_oversize_and_unnormalized():
    big = StateVector(TWO_QUBIT_LABELS, [1, 0, 0, 0])
    with pytest.raises(DimensionError):
        tensor(tensor(big, big), basis_state(QUBIT_LABELS, "0"))
    with pytest.raises(NotNormalizedError):
        tensor(StateVector(QUBIT_LABELS, [1, 1]), big)


# --- apply -------------------------------------------------------------------

def test_cz_on_basis_states():
    out = apply(CZ, basis_state(TWO_QUBIT_LABELS, "11"))
    np.testing.assert_array_equal(out.amplitudes, [0, 0, 0, -1])
    out = apply(CZ, basis_state(TWO_QUBIT_LABELS, "00"))
    np.testing.assert_array_equal(out.amplitudes, [1, 0, 0, 0])


def test_z_pi_flips_plus_to_minus():
    out = apply(z_phase(math.pi), StateVector(QUBIT_LABELS, [R, R]))
    np.testing.assert_allclose(out.amplitudes, [R, -R], atol=TOL)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply(CZ, basis_state(QUBIT_LABELS, "0"))


def test_unitary_matrix_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        UnitaryMatrix(np.array([[1, 1], [0, 1]]))
    with pytest.raises(DimensionError):
        UnitaryMatrix(np.ones((2, 3)))


# --- inner / fidelity --------------------------------------------------------

def test_inner_examples():
    zero = basis_state(QUBIT_LABELS, "0")
    assert inner(zero, zero) == 1
    basis = partial_bell_basis()
    assert abs(inner(basis[3], basis[4])) < TOL


@pytest.mark.parametrize("phases", [(0, 0, 0), (0.3, -2.0, 5.0), (math.pi, 1, 2)])
def test_every_mub_vector_has_quarter_weight_on_ee(phases):
    ee = basis_state(PHOTON_PAIR_LABELS, "EE")
    assert inner(ee, mub_vector(PhaseTriple(*phases))) == pytest.approx(0.5, abs=TOL)


def test_inner_is_conjugate_linear_in_first_argument(rng):
    a = random_state(rng, TWO_QUBIT_LABELS)
    b = random_state(rng, TWO_QUBIT_LABELS)
    c = 0.3 - 1.1j
    assert inner(a * c, b) == pytest.approx(np.conj(c) * inner(a, b), abs=TOL)


def test_inner_basis_mismatch():
    with pytest.raises(BasisMismatchError):
        inner(basis_state(QUBIT_LABELS, "0"), basis_state(TWO_QUBIT_LABELS, "00"))


def test_fidelity_ignores_global_phase(rng):
    psi = random_state(rng, TWO_QUBIT_LABELS)
    assert fidelity_up_to_global_phase(psi, psi * np.exp(1j * math.pi / 7)) == pytest.approx(1, abs=TOL)
    assert fidelity_up_to_global_phase(basis_state(TWO_QUBIT_LABELS, "00"),
                                       basis_state(TWO_QUBIT_LABELS, "11")) == 0


# --- project_partial ---------------------------------------------------------

def test_projecting_phi3_on_encoded_state_returns_input(rng):
    psi = random_state(rng, TWO_QUBIT_LABELS)
    residual, p = project_partial(partial_bell_basis()[3], encode_pair(psi), "photons")
    assert p == pytest.approx(0.25, abs=TOL)
    np.testing.assert_allclose(residual.amplitudes, psi.amplitudes, atol=TOL)


def test_projecting_ee_on_product():
    joint = encode_pair(basis_state(TWO_QUBIT_LABELS, "00"))
    residual, p = project_partial(basis_state(PHOTON_PAIR_LABELS, "EE"), joint, "photons")
    assert p == pytest.approx(1, abs=TOL)
    np.testing.assert_allclose(residual.amplitudes, [1, 0, 0, 0], atol=TOL)


def test_vanishing_overlap_returns_null_marker():
    joint = encode_pair(basis_state(TWO_QUBIT_LABELS, "00"))
    residual, p = project_partial(basis_state(PHOTON_PAIR_LABELS, "LL"), joint, "photons")
    assert residual is None and p == 0.0


def test_projecting_the_atoms_leaves_the_photons(rng):
    psi = random_state(rng, TWO_QUBIT_LABELS)
    residual, p = project_partial(basis_state(TWO_QUBIT_LABELS, "01"), encode_pair(psi), "atoms")
    assert residual.labels == PHOTON_PAIR_LABELS
    assert p == pytest.approx(abs(psi.amplitudes[1]) ** 2, abs=TOL)
    assert fidelity_up_to_global_phase(residual, basis_state(PHOTON_PAIR_LABELS, "EL")) == pytest.approx(1)


def test_project_partial_matches_component_oracle(rng):
    phi1 = partial_bell_basis()[1]
    for _ in range(20):
        psi = random_state(rng, TWO_QUBIT_LABELS)
        joint = encode_pair(psi)
        residual, p = project_partial(phi1, joint, "photons")
        ref = project_by_components(phi1.amplitudes, PHOTON_PAIR_LABELS,
                                    joint.amplitudes, joint.labels)
        ref = np.array([ref[lab] for lab in TWO_QUBIT_LABELS])
        assert p == pytest.approx(np.sum(np.abs(ref) ** 2), abs=TOL)
        np.testing.assert_allclose(residual.amplitudes * np.sqrt(p), ref, atol=TOL)


def test_project_partial_errors(rng):
    joint = encode_pair(random_state(rng, TWO_QUBIT_LABELS))
    with pytest.raises(UnknownSubsystemError):
        project_partial(partial_bell_basis()[1], joint, "cavity")
    with pytest.raises(NotNormalizedError):
        project_partial(StateVector(PHOTON_PAIR_LABELS, [1, 1, 0, 0]), joint, "photons")
    with pytest.raises(UnknownSubsystemError):
        project_partial(partial_bell_basis()[1], random_state(rng, TWO_QUBIT_LABELS), "photons")


# --- properties --------------------------------------------------------------

def _gate_set():
    angles = [0.0, math.pi / 2, -math.pi / 2, math.pi, 0.7]
    singles = [z_phase(a) for a in angles]
    return [CZ] + [kron(a, b) for a in singles for b in singles]


def test_every_constructed_unitary_is_unitary():
    for u in _gate_set():
        assert np.max(np.abs(u.matrix.conj().T @ u.matrix - np.eye(u.dim))) < TOL


def test_norm_preserved_over_random_gate_sequences(rng):
    gates = _gate_set()
    for _ in range(1000):
        u = gates[rng.integers(len(gates))] @ gates[rng.integers(len(gates))]
        s = apply(u, random_state(rng, TWO_QUBIT_LABELS))
        assert abs(s.norm() - 1) < TOL


def test_projection_completeness(rng):
    psi = random_state(rng, TWO_QUBIT_LABELS)
    joint = encode_pair(psi)
    for basis in ([basis_state(PHOTON_PAIR_LABELS, lab) for lab in PHOTON_PAIR_LABELS],
                  list(partial_bell_basis().vectors)):
        total = sum(project_partial(m, joint, "photons")[1] for m in basis)
        assert total == pytest.approx(1, abs=TOL)


complex_st = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(complex_st, min_size=4, max_size=4), st.lists(complex_st, min_size=4, max_size=4))
def test_inner_conjugate_symmetry(xs, ys):
    if np.linalg.norm(xs) < 1e-3 or np.linalg.norm(ys) < 1e-3:
        return
    a = two_qubit_state(np.array(xs) / np.linalg.norm(xs))
    b = two_qubit_state(np.array(ys) / np.linalg.norm(ys))
    assert inner(a, b) == pytest.approx(np.conj(inner(b, a)), abs=TOL)
    assert abs(inner(a, b)) <= 1 + TOL
