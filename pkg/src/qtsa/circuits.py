"""Layered variational classifier circuits.

The main architecture stacks, per layer, a feature-encoding block (RY and RZ
rotations whose angles are affine maps of activated features), a variational
block (free RY/RZ rotations plus a CZ entangling ring) and a re-encoding
block with independent parameters.  Three comparison architectures share the
same gate alphabet: an IQP-style diagonal-phase embedding, a QAOA-style
alternation of feature phases and trainable RX mixers, and a plain
data-reuploading circuit.

A circuit is described by a feature-independent *plan*: an ordered list of
gate slots, each tagged with how its angle is obtained (free parameter,
weight/bias pair on an activated feature, raw feature, feature product, or a
constant).  The plan drives both the per-sample execution path and a
vectorised executor that evaluates many (parameter row, feature row)
combinations at once; training and region scans rely on the latter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .qsim import (
    GateSpec,
    StateVector,
    apply_gate_inplace,
    prob_one,
    prob_one_batch,
    zero_state,
)

ARCHITECTURES = ("QTSA", "IQP", "QAOA", "REUPLOAD")
ACTIVATIONS = ("TANH", "ARCTAN", "IDENTITY")

HALF_PI = 0.5 * np.pi


def activation_fn(name: str) -> Callable[[np.ndarray], np.ndarray]:
    if name == "TANH":
        return np.tanh
    if name == "ARCTAN":
        return np.arctan
    if name == "IDENTITY":
        return lambda z: z
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class CircuitSpec:
    """Topology of one classifier circuit; parameters live elsewhere."""

    architecture: str
    n_qubits: int
    n_layers: int
    feature_dim: int
    activation: str = "TANH"

    def __post_init__(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 1 <= self.n_qubits <= 4:
            raise ValueError("n_qubits must be in 1..4")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")

    @property
    def param_count(self) -> int:
        return build_plan(self).param_count


@dataclass(frozen=True)
class ParamSegment:
    """Contiguous slice of the parameter vector belonging to one block."""

    name: str
    start: int
    size: int


# Angle sources for a plan gate:
#   "param"    angle = params[p_idx[0]]
#   "enc"      angle = params[p_idx[0]] * act(z[f_idx[0]]) + params[p_idx[1]]
#   "feat"     angle = z[f_idx[0]]
#   "featprod" angle = z[f_idx[0]] * z[f_idx[1]]
#   "const"    angle = const
#   "none"     parameterless two-qubit gate
@dataclass(frozen=True)
class PlanGate:
    kind: str
    qubits: tuple[int, ...]
    source: str = "none"
    p_idx: tuple[int, ...] = ()
    f_idx: tuple[int, ...] = ()
    const: float = 0.0


@dataclass(frozen=True)
class CircuitPlan:
    gates: tuple[PlanGate, ...]
    segments: tuple[ParamSegment, ...]
    param_count: int


class _PlanBuilder:
    def __init__(self, feature_dim: int) -> None:
        self.gates: list[PlanGate] = []
        self.segments: list[ParamSegment] = []
        self.n_params = 0
        self.enc_slot = 0  # global cyclic feature-assignment counter
        self.feature_dim = feature_dim
        self._seg_start = 0

    def begin_segment(self) -> None:
        self._seg_start = self.n_params

    def end_segment(self, name: str) -> None:
        size = self.n_params - self._seg_start
        if size:
            self.segments.append(ParamSegment(name, self._seg_start, size))

    def enc_gate(self, kind: str, qubit: int) -> None:
        f = self.enc_slot % self.feature_dim
        self.gates.append(
            PlanGate(kind, (qubit,), "enc", (self.n_params, self.n_params + 1), (f,))
        )
        self.n_params += 2
        self.enc_slot += 1

    def param_gate(self, kind: str, qubit: int) -> None:
        self.gates.append(PlanGate(kind, (qubit,), "param", (self.n_params,)))
        self.n_params += 1

    def feat_gate(self, kind: str, qubit: int) -> None:
        f = self.enc_slot % self.feature_dim
        self.gates.append(PlanGate(kind, (qubit,), "feat", (), (f,)))
        self.enc_slot += 1

    def const_gate(self, kind: str, qubit: int, angle: float) -> None:
        self.gates.append(PlanGate(kind, (qubit,), "const", (), (), angle))

    def two_qubit(self, kind: str, q1: int, q2: int) -> None:
        self.gates.append(PlanGate(kind, (q1, q2)))


def _ring_edges(n_qubits: int) -> list[tuple[int, int]]:
    """Distinct nearest-neighbour ring edges; none for a single qubit."""
    if n_qubits < 2:
        return []
    if n_qubits == 2:
        return [(0, 1)]
    return [(q, (q + 1) % n_qubits) for q in range(n_qubits)]


def _build_qtsa(b: _PlanBuilder, n: int, layers: int) -> None:
    for layer in range(1, layers + 1):
        b.begin_segment()
        for kind in ("RY", "RZ"):
            for q in range(n):
                b.enc_gate(kind, q)
        b.end_segment(f"E{layer}")
        b.begin_segment()
        for kind in ("RY", "RZ"):
            for q in range(n):
                b.param_gate(kind, q)
        b.end_segment(f"V{layer}")
        for q1, q2 in _ring_edges(n):
            b.two_qubit("CZ", q1, q2)
        b.begin_segment()
        for kind in ("RY", "RZ"):
            for q in range(n):
                b.enc_gate(kind, q)
        b.end_segment(f"R{layer}")


def _build_iqp(b: _PlanBuilder, n: int, layers: int) -> None:
    # Diagonal-phase embedding: no trainable parameters.
    for _layer in range(layers):
        for q in range(n):
            b.const_gate("RY", q, HALF_PI)
        feats: list[int] = []
        for q in range(n):
            feats.append(b.enc_slot % b.feature_dim)
            b.feat_gate("RZ", q)
        for q1 in range(n):
            for q2 in range(q1 + 1, n):
                b.two_qubit("CNOT", q1, q2)
                b.gates.append(
                    PlanGate("RZ", (q2,), "featprod", (), (feats[q1], feats[q2]))
                )
                b.two_qubit("CNOT", q1, q2)


def _build_qaoa(b: _PlanBuilder, n: int, layers: int) -> None:
    for q in range(n):
        b.const_gate("RY", q, HALF_PI)
    for layer in range(1, layers + 1):
        feats: list[int] = []
        for q in range(n):
            feats.append(b.enc_slot % b.feature_dim)
            b.feat_gate("RZ", q)
        for q1, q2 in _ring_edges(n):
            b.two_qubit("CNOT", q1, q2)
            b.gates.append(PlanGate("RZ", (q2,), "featprod", (), (feats[q1], feats[q2])))
            b.two_qubit("CNOT", q1, q2)
        b.begin_segment()
        for q in range(n):
            b.param_gate("RX", q)
        b.end_segment(f"M{layer}")


def _build_reupload(b: _PlanBuilder, n: int, layers: int) -> None:
    for layer in range(1, layers + 1):
        b.begin_segment()
        for kind in ("RY", "RZ"):
            for q in range(n):
                b.enc_gate(kind, q)
        b.end_segment(f"U{layer}")
        for q1, q2 in _ring_edges(n):
            b.two_qubit("CZ", q1, q2)


@lru_cache(maxsize=None)
def build_plan(spec: CircuitSpec) -> CircuitPlan:
    """Feature-independent gate plan plus parameter layout for a spec."""
    b = _PlanBuilder(spec.feature_dim)
    if spec.architecture == "QTSA":
        _build_qtsa(b, spec.n_qubits, spec.n_layers)
    elif spec.architecture == "IQP":
        _build_iqp(b, spec.n_qubits, spec.n_layers)
    elif spec.architecture == "QAOA":
        _build_qaoa(b, spec.n_qubits, spec.n_layers)
    else:
        _build_reupload(b, spec.n_qubits, spec.n_layers)
    return CircuitPlan(tuple(b.gates), tuple(b.segments), b.n_params)


def param_segments(spec: CircuitSpec) -> tuple[ParamSegment, ...]:
    return build_plan(spec).segments


def build_baseline(kind: str, n_qubits: int, n_layers: int, feature_dim: int) -> CircuitSpec:
    """Spec for one of the comparison architectures (IQP, QAOA, REUPLOAD)."""
    if kind not in ("IQP", "QAOA", "REUPLOAD"):
        raise ValueError(f"unsupported baseline kind {kind!r}")
    # Baselines take features (or w*z+b for reuploading) straight into angles.
    return CircuitSpec(kind, n_qubits, n_layers, feature_dim, "IDENTITY")


def encoding_angles(
    features: np.ndarray,
    weights: np.ndarray,
    biases: np.ndarray,
    activation: str,
    start: int = 0,
) -> np.ndarray:
    """Rotation angles w_k * act(z_{j(k)}) + b_k with cyclic feature pick.

    j(k) = (start + k) mod feature_dim; `start` carries the running slot
    offset when a circuit spreads its encoding slots over several blocks.
    """
    z = np.asarray(features, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    c = np.asarray(biases, dtype=np.float64)
    if w.shape != c.shape:
        raise ValueError("weights and biases must have equal length")
    act = activation_fn(activation)
    k = np.arange(start, start + w.size)
    return w * act(z[k % z.size]) + c


def _check_params(spec: CircuitSpec, params: np.ndarray) -> np.ndarray:
    p = np.asarray(params, dtype=np.float64)
    expected = build_plan(spec).param_count
    if p.shape != (expected,):
        raise ValueError(f"expected {expected} parameters, got shape {p.shape}")
    return p


def _check_features(spec: CircuitSpec, features: np.ndarray) -> np.ndarray:
    z = np.asarray(features, dtype=np.float64)
    if z.shape != (spec.feature_dim,):
        raise ValueError(f"expected {spec.feature_dim} features, got shape {z.shape}")
    return z


def circuit_gates(spec: CircuitSpec, params: np.ndarray, features: np.ndarray) -> list[GateSpec]:
    """Concrete gate sequence for one sample (drives the noisy path too)."""
    p = _check_params(spec, params)
    z = _check_features(spec, features)
    act = activation_fn(spec.activation)
    gates: list[GateSpec] = []
    for g in build_plan(spec).gates:
        if g.source == "none":
            gates.append(GateSpec(g.kind, g.qubits))
            continue
        if g.source == "param":
            angle = p[g.p_idx[0]]
        elif g.source == "enc":
            angle = p[g.p_idx[0]] * float(act(z[g.f_idx[0]])) + p[g.p_idx[1]]
        elif g.source == "feat":
            angle = z[g.f_idx[0]]
        elif g.source == "featprod":
            angle = z[g.f_idx[0]] * z[g.f_idx[1]]
        else:
            angle = g.const
        gates.append(GateSpec(g.kind, g.qubits, float(angle)))
    return gates


def run_circuit(spec: CircuitSpec, params: np.ndarray, features: np.ndarray) -> StateVector:
    """Execute any architecture on |0...0> and return the final pure state."""
    state = zero_state(spec.n_qubits)
    amps = state.amplitudes.copy()
    for gate in circuit_gates(spec, params, features):
        apply_gate_inplace(amps, gate, spec.n_qubits)
    return StateVector(spec.n_qubits, amps)


def run_qtsa(spec: CircuitSpec, params: np.ndarray, features: np.ndarray) -> StateVector:
    """Execute the layered main architecture (spec must be QTSA)."""
    if spec.architecture != "QTSA":
        raise ValueError(f"run_qtsa requires a QTSA spec, got {spec.architecture}")
    return run_circuit(spec, params, features)


def predict_prob_one(spec: CircuitSpec, params: np.ndarray, features: np.ndarray) -> float:
    """Probability of measuring |1> on qubit 0: the stability probability."""
    return prob_one(run_circuit(spec, params, features), 0)


# ---------------------------------------------------------------------------
# Vectorised execution over (parameter row, feature row) combinations
# ---------------------------------------------------------------------------


def run_many(spec: CircuitSpec, params: np.ndarray, features: np.ndarray) -> np.ndarray:
    """States for every combination of parameter row and feature row.

    params: (R, P) or (P,); features: (B, d) or (d,).  Returns a complex
    array of shape (R, B, 2**n).  Broadcasting keeps per-gate angle arrays
    at (R, 1), (1, B) or scalars whenever a source does not depend on both.
    """
    p = np.atleast_2d(np.asarray(params, dtype=np.float64))
    z = np.atleast_2d(np.asarray(features, dtype=np.float64))
    plan = build_plan(spec)
    if p.shape[1] != plan.param_count:
        raise ValueError(f"expected {plan.param_count} parameters, got {p.shape[1]}")
    if z.shape[1] != spec.feature_dim:
        raise ValueError(f"expected {spec.feature_dim} features, got {z.shape[1]}")
    act = activation_fn(spec.activation)
    az = act(z)
    n_rows, n_feat = p.shape[0], z.shape[0]
    dim = 1 << spec.n_qubits
    amps = np.zeros((n_rows, n_feat, dim), dtype=np.complex128)
    amps[:, :, 0] = 1.0
    for g in plan.gates:
        if g.source == "none":
            apply_gate_inplace(amps, GateSpec(g.kind, g.qubits), spec.n_qubits)
            continue
        if g.source == "param":
            theta = p[:, g.p_idx[0]][:, None]
        elif g.source == "enc":
            theta = p[:, g.p_idx[0]][:, None] * az[:, g.f_idx[0]][None, :] + p[:, g.p_idx[1]][:, None]
        elif g.source == "feat":
            theta = z[:, g.f_idx[0]][None, :]
        elif g.source == "featprod":
            theta = (z[:, g.f_idx[0]] * z[:, g.f_idx[1]])[None, :]
        else:
            theta = np.float64(g.const)
        apply_gate_inplace(amps, GateSpec(g.kind, g.qubits, 0.0), spec.n_qubits, theta=theta)
    return amps


def prob_one_many(spec: CircuitSpec, params: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Qubit-0 |1> probabilities, shape (R, B)."""
    return prob_one_batch(run_many(spec, params, features), 0, spec.n_qubits)


# ---------------------------------------------------------------------------
# Feature scaling and JSON serialisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature affine map to [-1, 1] fitted on training data.

    Transformed values are clipped to [-1.5, 1.5] so unseen test features
    cannot push encoding angles arbitrarily far.
    """

    low: np.ndarray
    high: np.ndarray
    clip: float = 1.5

    @classmethod
    def fit(cls, features: np.ndarray) -> "FeatureScaler":
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError("fit expects a (n_samples, feature_dim) array")
        return cls(low=x.min(axis=0), high=x.max(axis=0))

    def transform(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        span = self.high - self.low
        safe = np.where(span > 0, span, 1.0)
        z = 2.0 * (x - self.low) / safe - 1.0
        z = np.where(span > 0, z, 0.0)
        return np.clip(z, -self.clip, self.clip)

    def to_lists(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist(), "clip": self.clip}

    @classmethod
    def from_lists(cls, doc: dict) -> "FeatureScaler":
        return cls(
            low=np.asarray(doc["low"], dtype=np.float64),
            high=np.asarray(doc["high"], dtype=np.float64),
            clip=float(doc.get("clip", 1.5)),
        )


def spec_document(spec: CircuitSpec, params: np.ndarray) -> dict:
    """JSON-serialisable document for a circuit and its parameters."""
    p = _check_params(spec, params)
    return {
        "architecture": spec.architecture,
        "n_qubits": spec.n_qubits,
        "n_layers": spec.n_layers,
        "feature_dim": spec.feature_dim,
        "activation": spec.activation,
        "param_layout": [
            {"name": s.name, "start": s.start, "size": s.size}
            for s in build_plan(spec).segments
        ],
        "params": p.tolist(),
    }


def spec_from_document(doc: dict) -> tuple[CircuitSpec, np.ndarray]:
    spec = CircuitSpec(
        architecture=doc["architecture"],
        n_qubits=int(doc["n_qubits"]),
        n_layers=int(doc["n_layers"]),
        feature_dim=int(doc["feature_dim"]),
        activation=doc["activation"],
    )
    params = np.asarray(doc["params"], dtype=np.float64)
    _check_params(spec, params)
    return spec, params


def dump_spec_json(spec: CircuitSpec, params: np.ndarray) -> str:
    return json.dumps(spec_document(spec, params), indent=2, sort_keys=False)
