"""Register engine tests: gates, measurement, Bloch/fidelity, channels."""

import numpy as np
import pytest

from qtsa.qsim import (
    GateSpec,
    StateVector,
    apply_circuit,
    apply_gate,
    apply_kraus,
    apply_unitary,
    density_from_state,
    dm_prob_one,
    fidelity,
    gate_unitary,
    prob_one,
    reduced_bloch,
    sample_measurements,
    zero_state,
)

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def random_gates(rng, n_qubits, count):
    gates = []
    for _ in range(count):
        kind = rng.choice(["RX", "RY", "RZ", "CZ", "CNOT"]) if n_qubits > 1 else rng.choice(["RX", "RY", "RZ"])
        if kind in ("CZ", "CNOT"):
            q1, q2 = rng.choice(n_qubits, size=2, replace=False)
            gates.append(GateSpec(kind, (int(q1), int(q2))))
        else:
            gates.append(GateSpec(kind, (int(rng.integers(n_qubits)),), float(rng.uniform(-np.pi, np.pi))))
    return gates


# ---------------------------------------------------------------------------
# zero_state / apply_gate
# ---------------------------------------------------------------------------


def test_zero_state_single_qubit():
    s = zero_state(1)
    assert np.allclose(s.amplitudes, [1, 0])


def test_zero_state_two_qubits():
    s = zero_state(2)
    assert np.allclose(s.amplitudes, [1, 0, 0, 0])


def test_zero_state_three_qubits_unit_norm():
    s = zero_state(3)
    assert s.amplitudes.shape == (8,)
    assert abs(s.norm_squared() - 1.0) < 1e-15


@pytest.mark.parametrize("n", [0, 5, -1])
def test_zero_state_rejects_out_of_range(n):
    with pytest.raises(ValueError):
        zero_state(n)


def test_rx_pi_flips_bit():
    s = apply_gate(zero_state(1), GateSpec("RX", (0,), np.pi))
    assert abs(prob_one(s, 0) - 1.0) < 1e-12
    # RX(pi)|0> = -i|1>
    assert np.allclose(s.amplitudes, [0, -1j])


def test_ry_half_pi_equal_superposition():
    s = apply_gate(zero_state(1), GateSpec("RY", (0,), np.pi / 2))
    assert np.allclose(s.amplitudes, [INV_SQRT2, INV_SQRT2])


def test_cz_phases_only_the_11_component():
    one_one = StateVector(2, np.array([0, 0, 0, 1], dtype=complex))
    out = apply_gate(one_one, GateSpec("CZ", (0, 1)))
    assert np.allclose(out.amplitudes, [0, 0, 0, -1])
    one_zero = StateVector(2, np.array([0, 1, 0, 0], dtype=complex))
    out = apply_gate(one_zero, GateSpec("CZ", (0, 1)))
    assert np.allclose(out.amplitudes, [0, 1, 0, 0])


def test_cnot_flips_target_when_control_set():
    # qubit 0 is the control; |01> in bit order means qubit0=1, qubit1=0.
    s = apply_gate(zero_state(2), GateSpec("RX", (0,), np.pi))
    s = apply_gate(s, GateSpec("CNOT", (0, 1)))
    assert abs(prob_one(s, 1) - 1.0) < 1e-12
    assert abs(prob_one(s, 0) - 1.0) < 1e-12


def test_apply_gate_rejects_bad_qubit():
    with pytest.raises(ValueError):
        apply_gate(zero_state(2), GateSpec("RY", (2,), 0.3))


def test_gatespec_validation():
    with pytest.raises(ValueError):
        GateSpec("RY", (0, 1), 0.1)
    with pytest.raises(ValueError):
        GateSpec("CZ", (1, 1))
    with pytest.raises(ValueError):
        GateSpec("HADAMARD", (0,), 0.0)


# ---------------------------------------------------------------------------
# prob_one / sampling
# ---------------------------------------------------------------------------


def test_prob_one_ground_state_is_zero():
    assert prob_one(zero_state(2), 0) == 0.0


def test_prob_one_closed_form_sin_squared():
    theta = np.pi / 3
    s = apply_gate(zero_state(1), GateSpec("RY", (0,), theta))
    assert abs(prob_one(s, 0) - np.sin(theta / 2) ** 2) < 1e-12
    assert abs(prob_one(s, 0) - 0.25) < 1e-12


def test_prob_one_uniform_two_qubit_superposition():
    s = zero_state(2)
    for q in (0, 1):
        s = apply_gate(s, GateSpec("RY", (q,), np.pi / 2))
    assert abs(prob_one(s, 0) - 0.5) < 1e-12
    assert abs(prob_one(s, 1) - 0.5) < 1e-12


def test_sampling_deterministic_outcomes():
    one = apply_gate(zero_state(1), GateSpec("RX", (0,), np.pi))
    assert sample_measurements(one, 0, 1024, seed=7) == (0, 1024)
    assert sample_measurements(zero_state(1), 0, 1024, seed=7) == (1024, 0)


def test_sampling_concentrates_at_half():
    s = apply_gate(zero_state(1), GateSpec("RY", (0,), np.pi / 2))
    counts = sample_measurements(s, 0, 10**6, seed=123)
    assert abs(counts.ones / 10**6 - 0.5) < 0.002


def test_sampling_seed_repeatable_and_validates():
    s = apply_gate(zero_state(1), GateSpec("RY", (0,), 1.0))
    assert sample_measurements(s, 0, 500, seed=5) == sample_measurements(s, 0, 500, seed=5)
    with pytest.raises(ValueError):
        sample_measurements(s, 0, 0, seed=5)
    with pytest.raises(ValueError):
        sample_measurements(s, 3, 10, seed=5)


def test_sampling_mean_converges_to_prob_one():
    """Mean of many seeded draws stays within 4 sigma of the exact probability."""
    s = apply_gate(zero_state(1), GateSpec("RY", (0,), 0.9))
    p = prob_one(s, 0)
    shots, n_seeds = 1000, 200
    total = sum(sample_measurements(s, 0, shots, seed=k).ones for k in range(n_seeds))
    n = shots * n_seeds
    sigma = np.sqrt(p * (1 - p) / n)
    assert abs(total / n - p) < 4 * sigma


# ---------------------------------------------------------------------------
# Bloch vectors / fidelity
# ---------------------------------------------------------------------------


def test_bloch_of_ground_state():
    b = reduced_bloch(zero_state(1), 0)
    assert (b.x, b.y, b.z) == (0.0, 0.0, 1.0)


def test_bloch_after_ry_half_pi():
    s = apply_gate(zero_state(1), GateSpec("RY", (0,), np.pi / 2))
    b = reduced_bloch(s, 0)
    assert np.allclose([b.x, b.y, b.z], [1.0, 0.0, 0.0], atol=1e-12)


def test_bloch_of_bell_state_marginal_is_origin():
    s = apply_gate(zero_state(2), GateSpec("RY", (0,), np.pi / 2))
    s = apply_gate(s, GateSpec("CNOT", (0, 1)))
    for q in (0, 1):
        b = reduced_bloch(s, q)
        assert b.norm() < 1e-12


def test_bloch_norm_one_for_product_states():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        s = zero_state(n)
        for q in range(n):
            for kind in ("RY", "RZ", "RX"):
                s = apply_gate(s, GateSpec(kind, (q,), float(rng.uniform(-np.pi, np.pi))))
        for q in range(n):
            assert abs(reduced_bloch(s, q).norm() - 1.0) < 1e-9


def test_fidelity_examples():
    z = zero_state(1)
    assert fidelity(z, z) == 1.0
    one = apply_gate(z, GateSpec("RX", (0,), np.pi))
    assert fidelity(z, one) < 1e-24
    plus = apply_gate(z, GateSpec("RY", (0,), np.pi / 2))
    assert abs(fidelity(z, plus) - 0.5) < 1e-12


def test_fidelity_rejects_mismatched_registers():
    with pytest.raises(ValueError):
        fidelity(zero_state(1), zero_state(2))


# ---------------------------------------------------------------------------
# Invariants over random circuits
# ---------------------------------------------------------------------------


def test_norm_preserved_over_random_circuits():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3, 4):
        s = apply_circuit(zero_state(n), random_gates(rng, n, 100))
        assert abs(s.norm_squared() - 1.0) < 1e-10


def test_gates_invert_cleanly():
    rng = np.random.default_rng(2)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        s0 = apply_circuit(zero_state(n), random_gates(rng, n, 12))
        gate = random_gates(rng, n, 1)[0]
        if gate.kind in ("CZ", "CNOT"):
            inverse = gate
        else:
            inverse = GateSpec(gate.kind, gate.qubits, -gate.angle)
        s1 = apply_gate(apply_gate(s0, gate), inverse)
        assert np.max(np.abs(s1.amplitudes - s0.amplitudes)) < 1e-12


def test_statevector_and_density_paths_agree():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 4))
        gates = random_gates(rng, n, 25)
        sv = apply_circuit(zero_state(n), gates)
        dm = density_from_state(zero_state(n))
        for g in gates:
            dm = apply_unitary(dm, gate_unitary(g, n))
        assert abs(dm.trace().real - 1.0) < 1e-10
        assert dm.hermiticity_error() < 1e-10
        for q in range(n):
            assert abs(dm_prob_one(dm, q) - prob_one(sv, q)) < 1e-10


# ---------------------------------------------------------------------------
# Kraus channels
# ---------------------------------------------------------------------------


def _depolarizing_ops(p):
    eye = np.eye(2, dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return [np.sqrt(1 - 0.75 * p) * eye, np.sqrt(p / 4) * x, np.sqrt(p / 4) * y, np.sqrt(p / 4) * z]


def test_identity_channel_leaves_state_alone():
    dm = density_from_state(apply_gate(zero_state(2), GateSpec("RY", (0,), 0.7)))
    out = apply_kraus(dm, [np.eye(2, dtype=complex)], (0,))
    assert np.allclose(out.entries, dm.entries)


def test_full_depolarizing_gives_maximally_mixed_marginal():
    dm = density_from_state(zero_state(2))
    out = apply_kraus(dm, _depolarizing_ops(1.0), (0,))
    assert abs(out.trace().real - 1.0) < 1e-10
    assert abs(dm_prob_one(out, 0) - 0.5) < 1e-12
    # Reduced state of the depolarized qubit is I/2 (Bloch origin).
    rho0 = np.trace(out.entries.reshape(2, 2, 2, 2), axis1=0, axis2=2)
    assert np.allclose(rho0, 0.5 * np.eye(2), atol=1e-12)


def test_amplitude_damping_complete_decay():
    one = apply_gate(zero_state(1), GateSpec("RX", (0,), np.pi))
    dm = density_from_state(one)
    k0 = np.array([[1, 0], [0, 0]], dtype=complex)
    k1 = np.array([[0, 1], [0, 0]], dtype=complex)
    out = apply_kraus(dm, [k0, k1], (0,))
    assert np.allclose(out.entries, [[1, 0], [0, 0]], atol=1e-12)


def test_incomplete_kraus_set_rejected():
    dm = density_from_state(zero_state(1))
    with pytest.raises(ValueError):
        apply_kraus(dm, [0.9 * np.eye(2, dtype=complex)], (0,))


def test_kraus_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(4)
    dm = density_from_state(apply_circuit(zero_state(2), random_gates(rng, 2, 15)))
    out = apply_kraus(dm, _depolarizing_ops(0.3), (1,))
    assert abs(out.trace().real - 1.0) < 1e-10
    assert out.hermiticity_error() < 1e-10
    evals = np.linalg.eigvalsh(out.entries)
    assert evals.min() > -1e-9
