"""Noise-channel construction and noisy-execution tests."""

import math

import numpy as np
import pytest

from qtsa.circuits import CircuitSpec, FeatureScaler
from qtsa.noise import (
    NoiseModel,
    amplitude_damping_kraus,
    depolarizing_kraus,
    noise_sweep,
    noisy_predict,
    noisy_state,
    phase_damping_kraus,
    thermal_relaxation_channels,
    validate_channels,
)
from qtsa.power import SampleSet
from qtsa.qsim import kraus_completeness_error
from qtsa.training import TrainedModel


def random_model(seed=0, n_qubits=2, n_layers=3, d=2):
    rng = np.random.default_rng(seed)
    spec = CircuitSpec("QTSA", n_qubits, n_layers, d)
    params = rng.uniform(-1.5, 1.5, spec.param_count)
    X = rng.uniform(-1, 1, (6, d))
    return TrainedModel(spec, params, FeatureScaler.fit(X), []), X


# ---------------------------------------------------------------------------
# NoiseModel validation
# ---------------------------------------------------------------------------


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(gate_error=1.5)
    with pytest.raises(ValueError):
        NoiseModel(t1=-1.0)
    with pytest.raises(ValueError):
        NoiseModel(t1=1e-5, t2=3e-5)  # T2 > 2 T1
    NoiseModel(t1=1e-5, t2=2e-5)  # boundary is allowed
    assert NoiseModel().is_noiseless


def test_channel_completeness_over_parameter_range():
    rng = np.random.default_rng(1)
    for _ in range(25):
        p = rng.uniform(0, 1)
        t1 = 10 ** rng.uniform(-7, -3)
        t2 = t1 * rng.uniform(0.2, 2.0)
        noise = NoiseModel(gate_error=p, t1=t1, t2=t2)
        assert validate_channels(noise) < 1e-10
    for channel in (
        depolarizing_kraus(0.37),
        amplitude_damping_kraus(0.8),
        phase_damping_kraus(0.5),
    ):
        assert kraus_completeness_error(channel) < 1e-12


def test_thermal_channels_vanish_at_infinite_times():
    assert thermal_relaxation_channels(1e-7, math.inf, math.inf) == []
    channels = thermal_relaxation_channels(1e-7, 1e-5, 2e-5)
    assert len(channels) == 1  # T2 = 2 T1: amplitude damping only


# ---------------------------------------------------------------------------
# Noisy execution
# ---------------------------------------------------------------------------


def test_zero_noise_matches_statevector_path():
    model, X = random_model(seed=2)
    clean = model.predict_p1_batch(X)
    noise = NoiseModel()
    for x, c in zip(X, clean):
        assert abs(noisy_predict(model, x, noise) - c) < 1e-9


def test_full_depolarization_gives_exactly_half():
    model, X = random_model(seed=3)
    noise = NoiseModel(gate_error=1.0)
    for x in X[:3]:
        assert abs(noisy_predict(model, x, noise) - 0.5) < 1e-9


def test_trace_preserved_through_noisy_circuit():
    model, X = random_model(seed=4)
    noise = NoiseModel(gate_error=0.05, t1=5e-6, t2=7e-6)
    dm = noisy_state(model, X[0], noise)
    assert abs(dm.trace().real - 1.0) < 1e-9
    assert dm.hermiticity_error() < 1e-10
    assert np.linalg.eigvalsh(dm.entries).min() > -1e-9


def test_maximally_mixed_state_is_depolarizing_fixed_point():
    from qtsa.qsim import DensityMatrix2N, apply_kraus

    mixed = DensityMatrix2N(1, 0.5 * np.eye(2, dtype=complex))
    out = apply_kraus(mixed, depolarizing_kraus(0.7), (0,))
    assert np.allclose(out.entries, mixed.entries, atol=1e-14)


def test_amplitude_damping_pulls_toward_ground():
    model, X = random_model(seed=5)
    # short T1 (comparable to gate time) decays |1> occupation visibly
    noisy = noisy_predict(model, X[0], NoiseModel(t1=100e-9))
    clean = model.predict_p1(X[0])
    assert noisy < clean or clean < 0.05


def test_fidelity_to_clean_output_degrades_with_gate_error():
    model, X = random_model(seed=6)
    clean_states = model.embed_batch(X[:1])
    psi = clean_states[0]
    fids = []
    for p in (0.0, 0.01, 0.05, 0.2, 0.5):
        dm = noisy_state(model, X[0], NoiseModel(gate_error=p))
        fids.append(float(np.real(psi.conj() @ dm.entries @ psi)))
    assert all(a >= b - 1e-12 for a, b in zip(fids, fids[1:]))
    assert fids[0] == pytest.approx(1.0, abs=1e-9)


def test_noise_sweep_shapes_and_zero_noise_accuracy():
    model, X = random_model(seed=7)
    labels = (model.predict_p1_batch(X) >= 0.5).astype(int)
    ds = SampleSet(X, labels)  # labels = model's own predictions
    result = noise_sweep(model, ds, [NoiseModel(), NoiseModel(gate_error=0.3)])
    assert result.p1.shape == (2, len(ds))
    assert result.accuracy[0] == 1.0  # noiseless agrees with itself
    sorted_curve = result.sorted_success(1)
    assert np.all(np.diff(sorted_curve) >= 0)
    # success probability is the mass on the true label
    expected = np.where(ds.labels == 1, result.p1[1], 1 - result.p1[1])
    assert np.allclose(np.sort(expected), sorted_curve)


def test_noise_sweep_rejects_empty_inputs():
    model, X = random_model(seed=8)
    ds = SampleSet(X, np.zeros(len(X), dtype=int))
    with pytest.raises(ValueError):
        noise_sweep(model, ds, [])
    empty = SampleSet(np.zeros((0, 2)), np.zeros(0, dtype=int))
    with pytest.raises(ValueError):
        noise_sweep(model, empty, [NoiseModel()])
