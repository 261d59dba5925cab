"""Hybrid training of the variational stability classifier.

The forward pass is exact circuit simulation; the backward pass combines
parameter-shift gradients of the cross-entropy loss with a block-diagonal
quantum Fisher preconditioner (4x the Fubini-Study metric, estimated from
fidelity second differences) and bias-corrected first/second moments:

    g~ = (F + damping*I)^-1 grad
    params <- params - lr * m_hat / (sqrt(v_hat) + eps)

With the Fisher step disabled this reduces to plain Adam on the raw
gradient, which doubles as the ablation baseline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .circuits import (
    CircuitSpec,
    FeatureScaler,
    activation_fn,
    build_plan,
    prob_one_many,
    run_many,
    spec_document,
    spec_from_document,
)
from .power import SampleSet

PROB_CLIP = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epsilon: float = 1e-8
    beta1: float = 0.9
    beta2: float = 0.999
    fisher_damping: float = 1e-3
    max_epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    use_fisher: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("moment decay rates must lie in (0, 1)")
        if self.fisher_damping < 0:
            raise ValueError("fisher_damping must be >= 0")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")


@dataclass
class OptimizerState:
    """Raw Adam moments; bias correction happens inside the update."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, n_params: int) -> "OptimizerState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), t=0)


class Classification(NamedTuple):
    label: int
    p1: float


@dataclass
class TrainedModel:
    spec: CircuitSpec
    params: np.ndarray
    scaler: FeatureScaler
    history: list[tuple[int, float, float]] = field(default_factory=list)

    def scale(self, features: np.ndarray) -> np.ndarray:
        return self.scaler.transform(np.atleast_2d(np.asarray(features, dtype=np.float64)))

    def predict_p1(self, features: np.ndarray) -> float:
        return float(self.predict_p1_batch(np.atleast_2d(features))[0])

    def predict_p1_batch(self, features: np.ndarray) -> np.ndarray:
        """Stability probabilities for raw (physical-unit) feature rows."""
        return prob_one_many(self.spec, self.params, self.scale(features))[0]

    def embed_batch(self, features: np.ndarray) -> np.ndarray:
        """Final circuit states for raw feature rows, shape (N, 2**n)."""
        return run_many(self.spec, self.params, self.scale(features))[0]

    def to_document(self) -> dict:
        doc = spec_document(self.spec, self.params)
        doc["scaler"] = self.scaler.to_lists()
        doc["history"] = [[int(e), float(l), float(a)] for e, l, a in self.history]
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "TrainedModel":
        spec, params = spec_from_document(doc)
        scaler = FeatureScaler.from_lists(doc["scaler"])
        history = [(int(e), float(l), float(a)) for e, l, a in doc.get("history", [])]
        return cls(spec, params, scaler, history)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        with open(path) as fh:
            return cls.from_document(json.load(fh))


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def _clip(p1):
    return np.clip(p1, PROB_CLIP, 1.0 - PROB_CLIP)


def bce_loss(p1: float, label: int) -> float:
    """Binary cross entropy with probability clipping at 1e-7."""
    p = _clip(p1)
    return float(-(label * np.log(p) + (1 - label) * np.log1p(-p)))


def _bce_vec(p1: np.ndarray, labels: np.ndarray) -> np.ndarray:
    p = _clip(p1)
    return -(labels * np.log(p) + (1 - labels) * np.log1p(-p))


def _bce_grad_vec(p1: np.ndarray, labels: np.ndarray) -> np.ndarray:
    # Zero outside the clip range: the clipped loss is flat there.
    p = _clip(p1)
    grad = -labels / p + (1 - labels) / (1 - p)
    inside = (p1 > PROB_CLIP) & (p1 < 1.0 - PROB_CLIP)
    return np.where(inside, grad, 0.0)


def batch_loss(model: TrainedModel, samples: SampleSet) -> float:
    if len(samples) == 0:
        raise ValueError("empty batch")
    p1 = model.predict_p1_batch(samples.features)
    return float(np.mean(_bce_vec(p1, samples.labels)))


def classify(model: TrainedModel, features: np.ndarray, threshold: float = 0.5) -> Classification:
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    p1 = model.predict_p1(features)
    return Classification(label=int(p1 >= threshold), p1=p1)


# ---------------------------------------------------------------------------
# Parameter-shift gradient
# ---------------------------------------------------------------------------


class _Slot(NamedTuple):
    """One rotation angle: which parameter to shift and how the result
    distributes onto trainable parameters (chain factors)."""

    shift_idx: int
    param_idx: tuple[int, ...]
    feature_idx: int  # -1 for purely variational slots


def _rotation_slots(spec: CircuitSpec) -> list[_Slot]:
    slots: list[_Slot] = []
    for g in build_plan(spec).gates:
        if g.source == "param":
            slots.append(_Slot(g.p_idx[0], (g.p_idx[0],), -1))
        elif g.source == "enc":
            # Shifting the bias shifts the post-activation angle directly;
            # the weight picks up the activated feature as chain factor.
            slots.append(_Slot(g.p_idx[1], (g.p_idx[0], g.p_idx[1]), g.f_idx[0]))
    return slots


def loss_gradient(
    spec: CircuitSpec, params: np.ndarray, scaled_features: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """Mean-loss gradient over a batch of already-normalised features.

    Each rotation slot costs two shifted circuit evaluations (angle +- pi/2);
    weight and bias parameters of encoding rotations share the same shifted
    pair through their analytic chain factors.
    """
    p = np.asarray(params, dtype=np.float64)
    z = np.atleast_2d(np.asarray(scaled_features, dtype=np.float64))
    y = np.asarray(labels)
    n_params = build_plan(spec).param_count
    grad = np.zeros(n_params)
    if n_params == 0:
        return grad
    slots = _rotation_slots(spec)
    base_p1 = prob_one_many(spec, p, z)[0]
    dl_dp1 = _bce_grad_vec(base_p1, y) / y.size

    table = np.repeat(p[None, :], 2 * len(slots), axis=0)
    for k, slot in enumerate(slots):
        table[2 * k, slot.shift_idx] += 0.5 * np.pi
        table[2 * k + 1, slot.shift_idx] -= 0.5 * np.pi
    shifted = prob_one_many(spec, table, z)
    dslot = 0.5 * (shifted[0::2] - shifted[1::2])  # (S, B)

    act = activation_fn(spec.activation)
    weighted = dl_dp1[None, :] * dslot  # (S, B)
    for k, slot in enumerate(slots):
        if slot.feature_idx >= 0:
            w_idx, b_idx = slot.param_idx
            chain = act(z[:, slot.feature_idx])
            grad[w_idx] += float(np.sum(weighted[k] * chain))
            grad[b_idx] += float(np.sum(weighted[k]))
        else:
            grad[slot.param_idx[0]] += float(np.sum(weighted[k]))
    return grad


def parameter_shift_grad(model: TrainedModel, batch: SampleSet) -> np.ndarray:
    """Gradient of the mean batch loss with respect to the model parameters."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    return loss_gradient(model.spec, model.params, model.scale(batch.features), batch.labels)


# ---------------------------------------------------------------------------
# Fisher information (quantum metric) preconditioner
# ---------------------------------------------------------------------------

# Second-difference step: small enough for O(eps^2) bias to stay ~1e-7 on
# unit-scale entries, large enough to keep the 1/eps^2-amplified rounding
# noise near 1e-9 (so damped blocks stay PSD to that accuracy).
_FISHER_EPS = 1e-3


def fisher_blocks(
    spec: CircuitSpec, params: np.ndarray, scaled_features: np.ndarray, eps: float = _FISHER_EPS
) -> np.ndarray:
    """Block-diagonal quantum Fisher matrix, 4x the Fubini-Study metric.

    Entries couple parameters within one layout segment only; each entry is
    a second difference of state fidelity under paired parameter shifts, so
    the estimate is gauge-invariant (global phase drops out).  Returns the
    undamped matrix.
    """
    p = np.asarray(params, dtype=np.float64)
    z = np.asarray(scaled_features, dtype=np.float64)
    plan = build_plan(spec)
    n = plan.param_count
    fisher = np.zeros((n, n))
    if n == 0:
        return fisher

    entries: list[tuple[int, int]] = []
    rows: list[np.ndarray] = [p]
    for seg in plan.segments:
        for a in range(seg.start, seg.start + seg.size):
            for b in range(a, seg.start + seg.size):
                entries.append((a, b))
                if a == b:
                    for sign in (+1, -1):
                        row = p.copy()
                        row[a] += sign * eps
                        rows.append(row)
                else:
                    for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                        row = p.copy()
                        row[a] += sa * eps
                        row[b] += sb * eps
                        rows.append(row)

    states = run_many(spec, np.stack(rows), z)[:, 0, :]
    base = states[0]
    fid = np.abs(states @ base.conj()) ** 2

    cursor = 1
    for a, b in entries:
        if a == b:
            f_plus, f_minus = fid[cursor], fid[cursor + 1]
            cursor += 2
            fisher[a, a] = 2.0 * (2.0 - f_plus - f_minus) / eps**2
        else:
            fpp, fpm, fmp, fmm = fid[cursor : cursor + 4]
            cursor += 4
            val = (fpm + fmp - fpp - fmm) / (2.0 * eps**2)
            fisher[a, b] = val
            fisher[b, a] = val
    return fisher


def fisher_matrix(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Fisher matrix at one normalised feature vector (see fisher_blocks)."""
    z = np.asarray(features, dtype=np.float64)
    if z.shape != (model.spec.feature_dim,):
        raise ValueError(f"expected {model.spec.feature_dim} features, got {z.shape}")
    return fisher_blocks(model.spec, model.params, z)


# ---------------------------------------------------------------------------
# Optimiser
# ---------------------------------------------------------------------------


def gqng_update(
    opt: OptimizerState,
    params: np.ndarray,
    grad: np.ndarray,
    fisher: np.ndarray | None,
    cfg: TrainConfig,
) -> tuple[OptimizerState, np.ndarray]:
    """One natural-gradient Adam step; identity metric when disabled."""
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if p.shape != g.shape or p.shape != opt.m.shape:
        raise ValueError("parameter/gradient/moment shapes disagree")
    if p.size == 0:
        return OptimizerState(opt.m.copy(), opt.v.copy(), opt.t + 1), p.copy()

    if cfg.use_fisher and fisher is not None:
        damped = fisher + cfg.fisher_damping * np.eye(p.size)
        if cfg.fisher_damping == 0.0:
            eigenvalues = np.linalg.eigvalsh(damped)
            if eigenvalues.min() < 1e-12:
                raise ValueError("Fisher matrix is rank-deficient and undamped")
        natural = np.linalg.solve(damped, g)
    else:
        natural = g

    t = opt.t + 1
    m = cfg.beta1 * opt.m + (1.0 - cfg.beta1) * natural
    v = cfg.beta2 * opt.v + (1.0 - cfg.beta2) * natural**2
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    new_params = p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return OptimizerState(m, v, t), new_params


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def initial_params(spec: CircuitSpec, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.1, 0.1, build_plan(spec).param_count)


def train(spec: CircuitSpec, dataset: SampleSet, cfg: TrainConfig) -> TrainedModel:
    """Mini-batch natural-gradient training; returns best-loss parameters.

    The feature scaler is fitted on the given (training) set.  Per-epoch
    loss and thresholded accuracy over the full set are recorded; training
    aborts on a non-finite loss.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    zeros, ones = dataset.class_counts()
    if zeros == 0 or ones == 0:
        raise ValueError("training requires both classes in the dataset")
    if cfg.batch_size > len(dataset):
        raise ValueError("batch_size exceeds dataset size")

    scaler = FeatureScaler.fit(dataset.features)
    z_all = scaler.transform(dataset.features)
    labels = dataset.labels
    n = len(dataset)

    rng = np.random.default_rng(cfg.seed)
    params = rng.uniform(-0.1, 0.1, build_plan(spec).param_count)
    opt = OptimizerState.fresh(params.size)

    best_loss = np.inf
    best_params = params.copy()
    history: list[tuple[int, float, float]] = []
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grad = loss_gradient(spec, params, z_all[batch], labels[batch])
            fisher = None
            if cfg.use_fisher and params.size:
                # One representative sample bounds the metric cost per step.
                fisher = fisher_blocks(spec, params, z_all[batch[0]])
            opt, params = gqng_update(opt, params, grad, fisher, cfg)

        p1 = prob_one_many(spec, params, z_all)[0]
        loss = float(np.mean(_bce_vec(p1, labels)))
        accuracy = float(np.mean((p1 >= 0.5).astype(int) == labels))
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite training loss at epoch {epoch}")
        history.append((epoch, loss, accuracy))
        if loss < best_loss:
            best_loss = loss
            best_params = params.copy()

    return TrainedModel(spec=spec, params=best_params, scaler=scaler, history=history)


def evaluate_accuracy(model: TrainedModel, dataset: SampleSet, threshold: float = 0.5) -> float:
    p1 = model.predict_p1_batch(dataset.features)
    return float(np.mean((p1 >= threshold).astype(int) == dataset.labels))
