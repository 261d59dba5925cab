"""Exact simulation of small qubit registers.

Pure-state evolution under a fixed gate alphabet (RX, RY, RZ, CZ, CNOT),
mixed-state evolution through Kraus channels, and Hilbert-space diagnostics:
single-qubit measurement statistics, reduced Bloch vectors and state fidelity.

Registers are capped at four qubits, so everything is dense complex128
arithmetic.  Qubit 0 is the least significant bit of the basis index.  All
operations are pure -- they return new values and never mutate their inputs;
measurement sampling takes an explicit seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

MAX_QUBITS = 4

ROTATION_GATES = ("RX", "RY", "RZ")
TWO_QUBIT_GATES = ("CZ", "CNOT")
GATE_KINDS = ROTATION_GATES + TWO_QUBIT_GATES

_NORM_TOL = 1e-10
_KRAUS_TOL = 1e-10


@dataclass(frozen=True)
class GateSpec:
    """One gate from the alphabet: a rotation (with angle) or CZ/CNOT."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind in ROTATION_GATES:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} acts on exactly one qubit")
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
        else:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} needs two distinct qubits")
            if self.angle is not None:
                raise ValueError(f"{self.kind} takes no angle")


@dataclass(frozen=True)
class StateVector:
    """Pure state of an n-qubit register as 2**n complex amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class DensityMatrix2N:
    """Mixed state of an n-qubit register as a 2**n x 2**n density matrix."""

    n_qubits: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        dim = 1 << self.n_qubits
        mat = np.asarray(self.entries, dtype=np.complex128)
        if mat.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got shape {mat.shape}")
        object.__setattr__(self, "entries", mat)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


class MeasurementCounts(NamedTuple):
    zeros: int
    ones: int


def _check_n_qubits(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")


def _check_qubit(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {n_qubits} qubits")


def zero_state(n_qubits: int) -> StateVector:
    """All-qubits-|0> register state."""
    _check_n_qubits(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


# ---------------------------------------------------------------------------
# In-place kernels shared by the single-state API and the batched circuit
# executor.  They operate on the last axis of a contiguous (..., 2**n) array;
# `theta` may be a scalar or any shape broadcastable against the lead axes.
# ---------------------------------------------------------------------------


def _rotation_inplace(amps: np.ndarray, kind: str, theta, qubit: int, n_qubits: int) -> None:
    half = 1 << (n_qubits - 1 - qubit)
    sub = 1 << qubit
    view = amps.reshape(amps.shape[:-1] + (half, 2, sub))
    t = np.asarray(theta, dtype=np.float64)
    if t.ndim:
        t = t[..., None, None]
    if kind == "RZ":
        phase = np.exp(-0.5j * t)
        view[..., 0, :] *= phase
        view[..., 1, :] *= np.conj(phase)
        return
    c = np.cos(0.5 * t)
    s = np.sin(0.5 * t)
    a0 = view[..., 0, :].copy()
    a1 = view[..., 1, :].copy()
    if kind == "RY":
        view[..., 0, :] = c * a0 - s * a1
        view[..., 1, :] = s * a0 + c * a1
    elif kind == "RX":
        view[..., 0, :] = c * a0 - 1j * s * a1
        view[..., 1, :] = -1j * s * a0 + c * a1
    else:
        raise ValueError(f"not a rotation gate: {kind}")


def _cz_inplace(amps: np.ndarray, q1: int, q2: int, n_qubits: int) -> None:
    idx = np.arange(1 << n_qubits)
    both = ((idx >> q1) & (idx >> q2) & 1).astype(bool)
    amps[..., both] *= -1.0


def _cnot_inplace(amps: np.ndarray, control: int, target: int, n_qubits: int) -> None:
    idx = np.arange(1 << n_qubits)
    src = idx[(((idx >> control) & 1) == 1) & (((idx >> target) & 1) == 0)]
    dst = src | (1 << target)
    tmp = amps[..., src].copy()
    amps[..., src] = amps[..., dst]
    amps[..., dst] = tmp


def apply_gate_inplace(amps: np.ndarray, gate: GateSpec, n_qubits: int, theta=None) -> None:
    """Apply `gate` to the last axis of `amps`; `theta` overrides gate.angle."""
    if gate.kind in ROTATION_GATES:
        angle = gate.angle if theta is None else theta
        _rotation_inplace(amps, gate.kind, angle, gate.qubits[0], n_qubits)
    elif gate.kind == "CZ":
        _cz_inplace(amps, gate.qubits[0], gate.qubits[1], n_qubits)
    else:
        _cnot_inplace(amps, gate.qubits[0], gate.qubits[1], n_qubits)


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    """Unitary application of one gate; norm is preserved to ~1e-12."""
    for q in gate.qubits:
        _check_qubit(q, state.n_qubits)
    amps = state.amplitudes.copy()
    apply_gate_inplace(amps, gate, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def apply_circuit(state: StateVector, gates: Iterable[GateSpec]) -> StateVector:
    amps = state.amplitudes.copy()
    for gate in gates:
        for q in gate.qubits:
            _check_qubit(q, state.n_qubits)
        apply_gate_inplace(amps, gate, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def prob_one(state: StateVector, qubit: int) -> float:
    """Probability of measuring |1> on `qubit` in the computational basis."""
    _check_qubit(qubit, state.n_qubits)
    idx = np.arange(1 << state.n_qubits)
    mask = ((idx >> qubit) & 1).astype(bool)
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))


def prob_one_batch(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Vectorised prob_one over the last axis of a (..., 2**n) array."""
    idx = np.arange(1 << n_qubits)
    mask = ((idx >> qubit) & 1).astype(bool)
    return np.sum(np.abs(amps[..., mask]) ** 2, axis=-1)


def sample_measurements(state: StateVector, qubit: int, shots: int, seed: int) -> MeasurementCounts:
    """Binomial draw of single-qubit Z-basis outcomes; deterministic per seed."""
    _check_qubit(qubit, state.n_qubits)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p1 = min(1.0, max(0.0, prob_one(state, qubit)))
    rng = np.random.default_rng(seed)
    ones = int(rng.binomial(shots, p1))
    return MeasurementCounts(zeros=shots - ones, ones=ones)


def reduced_density(state: StateVector, qubit: int) -> np.ndarray:
    """Partial trace down to the 2x2 density matrix of one qubit."""
    _check_qubit(qubit, state.n_qubits)
    half = 1 << (state.n_qubits - 1 - qubit)
    sub = 1 << qubit
    psi = state.amplitudes.reshape(half, 2, sub)
    return np.einsum("iaj,ibj->ab", psi, psi.conj())


def reduced_bloch(state: StateVector, qubit: int) -> BlochVector:
    """Bloch vector (x, y, z) of one qubit's reduced density matrix."""
    rho = reduced_density(state, qubit)
    return BlochVector(
        x=float(2.0 * rho[0, 1].real),
        y=float(2.0 * rho[1, 0].imag),
        z=float(rho[0, 0].real - rho[1, 1].real),
    )


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|**2 for two pure states on equal registers."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("fidelity requires equal register sizes")
    return float(np.abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# ---------------------------------------------------------------------------
# Density-matrix path
# ---------------------------------------------------------------------------

_ROT_GENERATORS = {
    "RX": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "RY": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "RZ": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    """2x2 unitary exp(-i * angle/2 * sigma) for the rotation alphabet."""
    sigma = _ROT_GENERATORS[kind]
    c = np.cos(0.5 * angle)
    s = np.sin(0.5 * angle)
    return c * np.eye(2, dtype=np.complex128) - 1j * s * sigma


def expand_operator(op: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Embed a k-qubit operator into the full 2**n-dimensional space.

    Bit k of the operator's own index corresponds to qubits[k].
    """
    k = len(qubits)
    if op.shape != (1 << k, 1 << k):
        raise ValueError(f"operator shape {op.shape} does not match {k} qubits")
    dim = 1 << n_qubits
    idx = np.arange(dim)
    sub = np.zeros(dim, dtype=np.int64)
    for pos, q in enumerate(qubits):
        sub |= ((idx >> q) & 1) << pos
    mask = 0
    for q in qubits:
        mask |= 1 << q
    rest = idx & ~mask
    full = np.zeros((dim, dim), dtype=np.complex128)
    same_rest = rest[:, None] == rest[None, :]
    full[same_rest] = op[sub[:, None], sub[None, :]][same_rest]
    return full


def gate_unitary(gate: GateSpec, n_qubits: int) -> np.ndarray:
    """Full 2**n x 2**n unitary matrix of one gate."""
    for q in gate.qubits:
        _check_qubit(q, n_qubits)
    if gate.kind in ROTATION_GATES:
        return expand_operator(rotation_matrix(gate.kind, gate.angle), gate.qubits, n_qubits)
    if gate.kind == "CZ":
        u = np.eye(4, dtype=np.complex128)
        u[3, 3] = -1.0
        return expand_operator(u, gate.qubits, n_qubits)
    # CNOT with qubits = (control, target): op-bit0 is the control.
    u = np.zeros((4, 4), dtype=np.complex128)
    u[0, 0] = u[2, 2] = 1.0
    u[3, 1] = u[1, 3] = 1.0
    return expand_operator(u, gate.qubits, n_qubits)


def density_from_state(state: StateVector) -> DensityMatrix2N:
    psi = state.amplitudes
    return DensityMatrix2N(state.n_qubits, np.outer(psi, psi.conj()))


def apply_unitary(dm: DensityMatrix2N, u: np.ndarray) -> DensityMatrix2N:
    return DensityMatrix2N(dm.n_qubits, u @ dm.entries @ u.conj().T)


def kraus_completeness_error(operators: Sequence[np.ndarray]) -> float:
    dim = operators[0].shape[0]
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for op in operators:
        acc += op.conj().T @ op
    return float(np.max(np.abs(acc - np.eye(dim))))


def apply_kraus(
    dm: DensityMatrix2N, operators: Sequence[np.ndarray], qubits: Sequence[int]
) -> DensityMatrix2N:
    """Channel application rho' = sum_k K rho K^dagger.

    The Kraus set must be complete (sum K^dagger K = I within 1e-10) on its
    own subspace; operators are given on the listed qubits and embedded here.
    """
    for q in qubits:
        _check_qubit(q, dm.n_qubits)
    ops = [np.asarray(op, dtype=np.complex128) for op in operators]
    if not ops:
        raise ValueError("empty Kraus set")
    small = 1 << len(qubits)
    for op in ops:
        if op.shape != (small, small):
            raise ValueError(f"Kraus operator shape {op.shape} does not match qubits {qubits}")
    err = kraus_completeness_error(ops)
    if err > _KRAUS_TOL:
        raise ValueError(f"Kraus set not complete: max deviation {err:.3e}")
    out = np.zeros_like(dm.entries)
    for op in ops:
        full = expand_operator(op, qubits, dm.n_qubits)
        out += full @ dm.entries @ full.conj().T
    return DensityMatrix2N(dm.n_qubits, out)


def dm_prob_one(dm: DensityMatrix2N, qubit: int) -> float:
    """Probability of |1> on `qubit` from the diagonal of the density matrix."""
    _check_qubit(qubit, dm.n_qubits)
    idx = np.arange(1 << dm.n_qubits)
    mask = ((idx >> qubit) & 1).astype(bool)
    return float(np.sum(np.real(np.diag(dm.entries))[mask]))
