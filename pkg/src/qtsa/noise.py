"""Noisy circuit execution: depolarizing gate errors and thermal relaxation.

Every gate application on the density matrix is followed, per participating
qubit, by a depolarizing channel with the configured gate-error probability
and by thermal relaxation over the gate duration: amplitude damping with
gamma = 1 - exp(-t/T1) plus the extra pure dephasing needed to realise the
T2 envelope exp(-t/T2).  Two-qubit gates apply the single-qubit error to
both participants, i.e. a composite error probability 1 - (1-p)^2.

Channels are exact (full Kraus application on the density matrix), so sweep
results carry no sampling variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import circuit_gates
from .power import SampleSet
from .qsim import (
    DensityMatrix2N,
    MAX_QUBITS,
    dm_prob_one,
    expand_operator,
    gate_unitary,
    kraus_completeness_error,
)
from .training import TrainedModel


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate depolarizing probability plus T1/T2 relaxation parameters.

    t2 defaults to t1; infinite times switch relaxation off exactly.
    """

    gate_error: float = 0.0
    t1: float = math.inf
    t2: float | None = None
    gate_time_1q: float = 35e-9
    gate_time_2q: float = 300e-9

    def __post_init__(self) -> None:
        if not 0.0 <= self.gate_error <= 1.0:
            raise ValueError("gate_error must lie in [0, 1]")
        if self.t1 <= 0 or (self.t2 is not None and self.t2 <= 0):
            raise ValueError("relaxation times must be positive")
        if self.gate_time_1q <= 0 or self.gate_time_2q <= 0:
            raise ValueError("gate times must be positive")
        if self.t2_effective > 2.0 * self.t1 + 1e-12:
            raise ValueError("T2 may not exceed 2*T1")

    @property
    def t2_effective(self) -> float:
        return self.t1 if self.t2 is None else self.t2

    @property
    def is_noiseless(self) -> bool:
        return self.gate_error == 0.0 and math.isinf(self.t1) and math.isinf(self.t2_effective)


_PAULIS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def depolarizing_kraus(p: float) -> list[np.ndarray]:
    """Single-qubit depolarizing channel: mix toward I/2 with probability p."""
    return [
        np.sqrt(1.0 - 0.75 * p) * _PAULIS["I"],
        np.sqrt(0.25 * p) * _PAULIS["X"],
        np.sqrt(0.25 * p) * _PAULIS["Y"],
        np.sqrt(0.25 * p) * _PAULIS["Z"],
    ]


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, np.sqrt(1.0 - gamma)]], dtype=np.complex128),
        np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=np.complex128),
    ]


def phase_damping_kraus(lam: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, np.sqrt(1.0 - lam)]], dtype=np.complex128),
        np.array([[0, 0], [0, np.sqrt(lam)]], dtype=np.complex128),
    ]


def thermal_relaxation_channels(duration: float, t1: float, t2: float) -> list[list[np.ndarray]]:
    """Kraus sets realising T1 decay and the residual T2 dephasing over one
    gate duration; empty when both times are infinite."""
    channels: list[list[np.ndarray]] = []
    if not math.isinf(t1):
        gamma = 1.0 - math.exp(-duration / t1)
        if gamma > 0.0:
            channels.append(amplitude_damping_kraus(gamma))
    if not math.isinf(t2):
        # amplitude damping already dephases by exp(-t/(2 T1))
        exponent = duration / t1 - 2.0 * duration / t2 if not math.isinf(t1) else -2.0 * duration / t2
        lam = 1.0 - math.exp(exponent)
        if lam > 1e-15:
            channels.append(phase_damping_kraus(lam))
    return channels


class _ExpandedChannels:
    """Channel operators pre-embedded into the full register space."""

    def __init__(self, n_qubits: int, noise: NoiseModel) -> None:
        self.per_qubit: dict[tuple[int, int], list[list[np.ndarray]]] = {}
        for q in range(n_qubits):
            for arity, duration in ((1, noise.gate_time_1q), (2, noise.gate_time_2q)):
                sets: list[list[np.ndarray]] = []
                if noise.gate_error > 0.0:
                    sets.append(depolarizing_kraus(noise.gate_error))
                sets.extend(
                    thermal_relaxation_channels(duration, noise.t1, noise.t2_effective)
                )
                self.per_qubit[(q, arity)] = [
                    [expand_operator(op, (q,), n_qubits) for op in channel]
                    for channel in sets
                ]


def _apply_expanded(rho: np.ndarray, channel: list[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(rho)
    for op in channel:
        out += op @ rho @ op.conj().T
    return out


def noisy_state(model: TrainedModel, features: np.ndarray, noise: NoiseModel) -> DensityMatrix2N:
    """Final density matrix of the circuit under the noise model."""
    n = model.spec.n_qubits
    if n > MAX_QUBITS:
        raise ValueError("register too large for density-matrix simulation")
    z = model.scale(features)[0]
    expanded = _ExpandedChannels(n, noise)
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    for gate in circuit_gates(model.spec, model.params, z):
        u = gate_unitary(gate, n)
        rho = u @ rho @ u.conj().T
        arity = len(gate.qubits)
        for q in gate.qubits:
            for channel in expanded.per_qubit[(q, arity)]:
                rho = _apply_expanded(rho, channel)
    return DensityMatrix2N(n, rho)


def noisy_predict(model: TrainedModel, features: np.ndarray, noise: NoiseModel) -> float:
    """Stability probability measured on qubit 0 after noisy execution."""
    return dm_prob_one(noisy_state(model, features, noise), 0)


def noisy_predict_batch(model: TrainedModel, features: np.ndarray, noise: NoiseModel) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return np.array([noisy_predict(model, row, noise) for row in x])


@dataclass(frozen=True)
class NoiseSweepResult:
    settings: tuple[NoiseModel, ...]
    p1: np.ndarray  # (n_settings, n_samples)
    success: np.ndarray  # probability mass on the correct label
    accuracy: np.ndarray  # (n_settings,)
    labels: np.ndarray  # true labels, (n_samples,)

    def sorted_success(self, setting: int) -> np.ndarray:
        """Per-sample success probabilities, lowest first."""
        return np.sort(self.success[setting])


def noise_sweep(
    model: TrainedModel, dataset: SampleSet, sweep: Sequence[NoiseModel]
) -> NoiseSweepResult:
    """Evaluate every sample under every noise setting.

    Success probability is the output mass on the sample's true label; the
    reported accuracy thresholds p1 at 0.5.
    """
    if len(sweep) == 0:
        raise ValueError("empty noise sweep")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    p1 = np.zeros((len(sweep), len(dataset)))
    for s, setting in enumerate(sweep):
        p1[s] = noisy_predict_batch(model, dataset.features, setting)
    labels = dataset.labels
    success = np.where(labels[None, :] == 1, p1, 1.0 - p1)
    accuracy = np.mean((p1 >= 0.5).astype(int) == labels[None, :], axis=1)
    return NoiseSweepResult(tuple(sweep), p1, success, accuracy, labels.copy())


def validate_channels(noise: NoiseModel) -> float:
    """Worst completeness deviation over the model's Kraus sets."""
    worst = 0.0
    for duration in (noise.gate_time_1q, noise.gate_time_2q):
        sets = [depolarizing_kraus(noise.gate_error)] if noise.gate_error > 0 else []
        sets.extend(thermal_relaxation_channels(duration, noise.t1, noise.t2_effective))
        for channel in sets:
            worst = max(worst, kraus_completeness_error(channel))
    return worst
