"""Evaluation surface: confusion metrics, Hilbert-space class separation,
stability-region scans against the analytic oracle, and architecture
comparison runs.

The stable class (label 1) is the positive class throughout; precision and
recall flip under the opposite convention, so this is fixed here rather
than left to callers.  Ratios with empty denominators are reported as None,
never silently coerced to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import CircuitSpec
from .power import GridModel, SampleSet, smib_energy_label, split_dataset
from .training import TrainConfig, TrainedModel, train


@dataclass(frozen=True)
class Metrics:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "tn": self.tn,
            "fp": self.fp,
            "fn": self.fn,
        }


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def confusion_metrics(predictions: Sequence[int], truth: Sequence[int]) -> Metrics:
    """Counts and derived ratios with stable (1) as the positive class."""
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1 or pred.size == 0:
        raise ValueError("predictions and truth must be equal-length 1-D, non-empty")
    tp = int(np.sum((pred == 1) & (true == 1)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    if precision is None or recall is None:
        f1 = None
    elif precision == 0.0 or recall == 0.0:
        f1 = 0.0  # harmonic-mean limit
    else:
        f1 = 2.0 / (1.0 / precision + 1.0 / recall)
    return Metrics(
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        accuracy=_ratio(tp + tn, tp + tn + fp + fn),
        precision=precision,
        recall=recall,
        f1=f1,
    )


# ---------------------------------------------------------------------------
# Class separation in Hilbert space
# ---------------------------------------------------------------------------


def state_overlap_index(states: np.ndarray, labels: np.ndarray) -> float:
    """Tr(sigma_0 sigma_1) for the per-class mean pure-state projectors.

    0 means orthogonal class embeddings, 1 identical ones.
    """
    psi = np.asarray(states, dtype=np.complex128)
    y = np.asarray(labels, dtype=np.int64)
    if psi.ndim != 2 or y.shape != (psi.shape[0],):
        raise ValueError("states must be (N, dim) with one label per row")
    if not ((y == 0).any() and (y == 1).any()):
        raise ValueError("both classes must be present")
    sigmas = []
    for cls in (0, 1):
        member = psi[y == cls]
        sigmas.append(np.einsum("na,nb->ab", member, member.conj()) / member.shape[0])
    return float(np.real(np.trace(sigmas[0] @ sigmas[1])))


def class_separation(model: TrainedModel, dataset: SampleSet) -> float:
    """Overlap of the class-mean density matrices of the embedded samples."""
    states = model.embed_batch(dataset.features)
    return state_overlap_index(states, dataset.labels)


# ---------------------------------------------------------------------------
# Region scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec2D:
    """Rectangular scan over two feature dimensions in physical units.

    Remaining feature dimensions (if any) are pinned to `fixed` values.
    """

    x_index: int = 0
    y_index: int = 1
    x_min: float = -np.pi
    x_max: float = 2 * np.pi
    y_min: float = -8.0
    y_max: float = 8.0
    nx: int = 200
    ny: int = 200
    fixed: dict = field(default_factory=dict)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.x_min, self.x_max, self.nx), np.linspace(
            self.y_min, self.y_max, self.ny
        )


@dataclass(frozen=True)
class RegionMap:
    x_values: np.ndarray
    y_values: np.ndarray
    p1: np.ndarray  # (ny, nx)
    labels: dict  # threshold -> boolean (ny, nx)
    oracle: np.ndarray | None = None  # analytic labels, same shape
    agreement: dict | None = None  # threshold -> fraction matching oracle

    def stable_fraction(self, threshold: float) -> float:
        return float(np.mean(self.labels[threshold]))


def scan_region(
    model: TrainedModel,
    grid: GridSpec2D,
    thresholds: Sequence[float] = (0.5, 0.7, 0.9, 0.95),
    oracle_model: GridModel | None = None,
) -> RegionMap:
    """Classifier probability over a grid, with optional analytic labels.

    The oracle compares against the closed-form energy criterion and is
    available when the scanned axes are the (rotor angle, speed) plane of a
    single-machine model.
    """
    dim = model.spec.feature_dim
    if grid.x_index >= dim or grid.y_index >= dim:
        raise ValueError("grid axes outside the model's feature dimensions")
    missing = set(range(dim)) - {grid.x_index, grid.y_index} - set(grid.fixed)
    if missing:
        raise ValueError(f"no fixed value for feature dimensions {sorted(missing)}")
    xs, ys = grid.axes()
    mesh_x, mesh_y = np.meshgrid(xs, ys)
    cells = np.zeros((mesh_x.size, dim))
    cells[:, grid.x_index] = mesh_x.ravel()
    cells[:, grid.y_index] = mesh_y.ravel()
    for idx, value in grid.fixed.items():
        cells[:, idx] = value
    p1 = model.predict_p1_batch(cells).reshape(grid.ny, grid.nx)
    labels = {float(t): p1 >= t for t in thresholds}

    oracle = None
    agreement = None
    if oracle_model is not None:
        if oracle_model.kind != "SMIB" or (grid.x_index, grid.y_index) != (0, 1):
            raise ValueError("analytic oracle needs a SMIB (angle, speed) scan")
        oracle = smib_energy_label(mesh_x.ravel(), mesh_y.ravel(), oracle_model).reshape(
            grid.ny, grid.nx
        )
        agreement = {
            t: float(np.mean(mask.astype(int) == oracle)) for t, mask in labels.items()
        }
    return RegionMap(xs, ys, p1, labels, oracle, agreement)


# ---------------------------------------------------------------------------
# Architecture comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompareRow:
    spec: CircuitSpec
    status: str  # "ok" or the error message
    accuracy: float | None = None
    f1: float | None = None
    tr_sigma: float | None = None

    @property
    def label(self) -> str:
        s = self.spec
        return f"{s.architecture}({s.n_qubits},{s.n_layers})"


def compare_circuits(
    dataset: SampleSet,
    specs: Sequence[CircuitSpec],
    cfg: TrainConfig,
    test_fraction: float = 0.25,
) -> list[CompareRow]:
    """Train every spec under the identical budget and score the test split.

    Per-spec training failures are reported in the row, not raised, so one
    diverging architecture cannot void a comparison run.
    """
    if not specs:
        raise ValueError("no circuit specs given")
    train_set, test_set = split_dataset(dataset, test_fraction, seed=cfg.seed)
    rows: list[CompareRow] = []
    for spec in specs:
        try:
            model = train(spec, train_set, cfg)
            p1 = model.predict_p1_batch(test_set.features)
            metrics = confusion_metrics((p1 >= 0.5).astype(int), test_set.labels)
            rows.append(
                CompareRow(
                    spec=spec,
                    status="ok",
                    accuracy=metrics.accuracy,
                    f1=metrics.f1,
                    tr_sigma=class_separation(model, test_set),
                )
            )
        except Exception as exc:  # noqa: BLE001 - reported per row by contract
            rows.append(CompareRow(spec=spec, status=f"error: {exc}"))
    return rows
