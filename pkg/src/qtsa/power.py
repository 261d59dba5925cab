"""Swing-equation transients and labeled stability datasets.

Classical machine model on a reduced network: each generator is a constant
EMF behind transient reactance obeying

    d(delta_i)/dt = omega_i
    M_i d(omega_i)/dt = P_mech_i - P_elec_i(delta) - D_i omega_i

with the electrical power taken from the phase-appropriate network: a
transfer reactance for the single-machine-infinite-bus case, a Kron-reduced
complex admittance matrix for multi-machine grids.  Faults switch the
network (pre-fault / fault-on / post-fault) at grid-snapped times and are
integrated with fixed-step RK4.

Datasets pair the post-clearing state (feature source) with a stability
label: unstable when any pairwise rotor-angle separation leaves the
out-of-step bound or the integration diverges.  The single-machine system
additionally has a closed-form energy criterion used as an independent
oracle for the learned stability regions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

OUT_OF_STEP_BOUND = np.pi
DEFAULT_STEP = 1e-3
_DIVERGENCE_LIMIT = 1e6


# ---------------------------------------------------------------------------
# Model and scenario types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmibFault:
    """Fault on the single-machine system: transfer reactances during and
    after the fault (the faulted circuit is tripped at clearing)."""

    name: str
    x_fault: float
    x_post: float


@dataclass(frozen=True)
class NetworkFault:
    """Multi-machine fault: reduced admittance matrices for the fault-on
    network (fault bus grounded) and the post-fault network (element
    tripped)."""

    name: str
    y_fault: np.ndarray
    y_post: np.ndarray


@dataclass(frozen=True)
class GridModel:
    kind: str  # "SMIB" | "MULTIMACHINE"
    inertia: np.ndarray
    damping: np.ndarray
    p_mech: np.ndarray
    emf: np.ndarray
    x_pre: float | None = None
    bus_voltage: float = 1.0
    y_pre: np.ndarray | None = None
    faults: tuple = ()
    equilibrium: np.ndarray | None = None  # pre-fault SEP angles (rad)

    def __post_init__(self) -> None:
        for name in ("inertia", "damping", "p_mech", "emf"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if np.any(self.inertia <= 0):
            raise ValueError("every machine needs positive inertia")
        m = self.inertia.size
        if self.kind == "SMIB":
            if m != 1:
                raise ValueError("SMIB has exactly one machine")
            if self.x_pre is None or self.x_pre <= 0:
                raise ValueError("SMIB requires a positive pre-fault reactance")
        elif self.kind == "MULTIMACHINE":
            if self.y_pre is None or self.y_pre.shape != (m, m):
                raise ValueError("admittance matrix must be square with machine count")
            object.__setattr__(self, "y_pre", np.asarray(self.y_pre, dtype=np.complex128))
            if self.equilibrium is not None:
                object.__setattr__(
                    self, "equilibrium", np.asarray(self.equilibrium, dtype=np.float64)
                )
        else:
            raise ValueError(f"unknown grid kind {self.kind!r}")

    @property
    def n_machines(self) -> int:
        return self.inertia.size

    def p_max(self, reactance: float) -> float:
        return float(self.emf[0]) * self.bus_voltage / reactance

    def fault_by_name(self, name: str):
        for fault in self.faults:
            if fault.name == name:
                return fault
        raise ValueError(f"unknown fault {name!r}; have {[f.name for f in self.faults]}")


@dataclass(frozen=True)
class Scenario:
    """Fault description; fault_location None means an undisturbed run."""

    fault_location: str | None
    fault_start: float
    clearing_time: float
    horizon: float

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.fault_location is not None:
            if not 0 <= self.fault_start:
                raise ValueError("fault_start must be >= 0")
            if self.clearing_time <= 0:
                raise ValueError("clearing_time must be positive")
            if self.fault_start + self.clearing_time >= self.horizon:
                raise ValueError("fault must clear before the horizon")


@dataclass(frozen=True)
class Trajectory:
    time: np.ndarray  # (T,)
    delta: np.ndarray  # (T, m) rotor angles, rad
    omega: np.ndarray  # (T, m) speed deviations, rad/s
    diverged: bool = False
    fault_index: int | None = None
    clearing_index: int | None = None

    def __len__(self) -> int:
        return self.time.size


class Sample(NamedTuple):
    features: np.ndarray
    label: int
    provenance: str


@dataclass(frozen=True)
class SampleSet:
    features: np.ndarray  # (N, d) physical units
    labels: np.ndarray  # (N,) in {0, 1}
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or labels.shape != (feats.shape[0],):
            raise ValueError("features must be (N, d) with one label per row")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be binary")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.size

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> Sample:
        prov = self.provenance[i] if self.provenance else ""
        return Sample(self.features[i], int(self.labels[i]), prov)

    def class_counts(self) -> tuple[int, int]:
        ones = int(self.labels.sum())
        return len(self) - ones, ones


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------


def _deriv_factory(model: GridModel, network) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side of the swing equations for one network phase.

    `network` is a transfer-path peak power (SMIB) or a reduced admittance
    matrix (multi-machine); states are (..., 2m) rows [delta..., omega...].
    """
    m = model.n_machines
    inertia, damping, p_mech = model.inertia, model.damping, model.p_mech
    if model.kind == "SMIB":
        p_max = float(network)

        def deriv(y: np.ndarray) -> np.ndarray:
            delta, omega = y[..., :m], y[..., m:]
            p_elec = p_max * np.sin(delta)
            return np.concatenate(
                [omega, (p_mech - p_elec - damping * omega) / inertia], axis=-1
            )

    else:
        y_red = np.asarray(network, dtype=np.complex128)
        emf = model.emf

        def deriv(y: np.ndarray) -> np.ndarray:
            delta, omega = y[..., :m], y[..., m:]
            volts = emf * np.exp(1j * delta)
            currents = volts @ y_red.T
            p_elec = np.real(volts * np.conj(currents))
            return np.concatenate(
                [omega, (p_mech - p_elec - damping * omega) / inertia], axis=-1
            )

    return deriv


def _phase_network(model: GridModel, phase: str, fault) -> object:
    if model.kind == "SMIB":
        if phase == "pre":
            return model.p_max(model.x_pre)
        if phase == "fault":
            return model.p_max(fault.x_fault)
        return model.p_max(fault.x_post)
    if phase == "pre":
        return model.y_pre
    return fault.y_fault if phase == "fault" else fault.y_post


def _rk4_step(deriv, y: np.ndarray, h: float) -> np.ndarray:
    k1 = deriv(y)
    k2 = deriv(y + 0.5 * h * k1)
    k3 = deriv(y + 0.5 * h * k2)
    k4 = deriv(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _state_ok(y: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(y)) and np.max(np.abs(y)) < _DIVERGENCE_LIMIT)


def pre_fault_equilibrium(model: GridModel) -> np.ndarray:
    """Stable equilibrium state [delta..., omega=0] of the pre-fault grid."""
    if model.kind == "SMIB":
        p_max = model.p_max(model.x_pre)
        ratio = float(model.p_mech[0]) / p_max
        if ratio >= 1.0:
            raise ValueError("no equilibrium: mechanical power exceeds transfer limit")
        return np.array([np.arcsin(ratio), 0.0])
    if model.equilibrium is None:
        raise ValueError("multi-machine model lacks equilibrium angles")
    return np.concatenate([model.equilibrium, np.zeros(model.n_machines)])


def simulate(
    model: GridModel,
    scenario: Scenario,
    initial: np.ndarray | None = None,
    h: float = DEFAULT_STEP,
) -> Trajectory:
    """Fixed-step RK4 run through the scenario's fault sequence.

    Switching times are snapped to the step grid.  Integration halts with a
    divergence flag when the state leaves the finite range.
    """
    m = model.n_machines
    y = np.asarray(initial, dtype=np.float64) if initial is not None else pre_fault_equilibrium(model)
    if y.shape != (2 * m,):
        raise ValueError(f"initial state must have shape ({2 * m},)")

    n_total = int(round(scenario.horizon / h))
    if scenario.fault_location is None:
        k1 = k2 = None
        phases = [("pre", n_total)]
    else:
        fault = model.fault_by_name(scenario.fault_location)
        k1 = int(round(scenario.fault_start / h))
        k2 = int(round((scenario.fault_start + scenario.clearing_time) / h))
        if not 0 <= k1 < k2 < n_total:
            raise ValueError("scenario times collapse on the integration grid")
        phases = [("pre", k1), ("fault", k2 - k1), ("post", n_total - k2)]

    states = np.empty((n_total + 1, 2 * m))
    states[0] = y
    step = 0
    diverged = False
    for phase, count in phases:
        if diverged or count == 0:
            continue
        net = _phase_network(model, phase, None if scenario.fault_location is None else fault)
        deriv = _deriv_factory(model, net)
        for _ in range(count):
            y = _rk4_step(deriv, y, h)
            if not _state_ok(y):
                diverged = True
                break
            step += 1
            states[step] = y
    states = states[: step + 1]
    time = np.arange(states.shape[0]) * h
    return Trajectory(
        time=time,
        delta=states[:, :m],
        omega=states[:, m:],
        diverged=diverged,
        fault_index=k1,
        clearing_index=k2,
    )


def _max_separation(delta: np.ndarray) -> np.ndarray:
    """Largest pairwise rotor-angle separation; |delta| against the infinite
    bus for a single machine."""
    if delta.shape[-1] == 1:
        return np.abs(delta[..., 0])
    return delta.max(axis=-1) - delta.min(axis=-1)


def label_stability(traj: Trajectory, bound: float = OUT_OF_STEP_BOUND, start_index: int = 0) -> int:
    """1 when the rotor angles stay synchronised, 0 on out-of-step or
    divergence."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if traj.diverged:
        return 0
    sep = _max_separation(traj.delta[start_index:])
    return 0 if np.any(sep > bound) else 1


# ---------------------------------------------------------------------------
# SMIB energy criterion
# ---------------------------------------------------------------------------


def smib_energy_parameters(model: GridModel, fault_name: str | None = None) -> tuple[float, float, float]:
    """(delta_s, p_max_post, v_cr) of the post-fault single-machine system."""
    if model.kind != "SMIB":
        raise ValueError("energy criterion applies to SMIB models only")
    fault = model.fault_by_name(fault_name) if fault_name else model.faults[0]
    p_max = model.p_max(fault.x_post)
    p_m = float(model.p_mech[0])
    if p_m >= p_max:
        raise ValueError("no post-fault equilibrium: P_m >= P_max")
    delta_s = float(np.arcsin(p_m / p_max))
    v_cr = smib_energy(np.pi - delta_s, 0.0, model, fault_name)
    return delta_s, p_max, float(v_cr)


def smib_energy(delta, omega, model: GridModel, fault_name: str | None = None):
    """Transient energy 0.5*M*w^2 - P_m*(d - d_s) - P_max*(cos d - cos d_s)."""
    if model.kind != "SMIB":
        raise ValueError("energy function applies to SMIB models only")
    fault = model.fault_by_name(fault_name) if fault_name else model.faults[0]
    p_max = model.p_max(fault.x_post)
    p_m = float(model.p_mech[0])
    if p_m >= p_max:
        raise ValueError("no post-fault equilibrium: P_m >= P_max")
    delta_s = np.arcsin(p_m / p_max)
    d = np.asarray(delta, dtype=np.float64)
    w = np.asarray(omega, dtype=np.float64)
    kinetic = 0.5 * float(model.inertia[0]) * w**2
    potential = -p_m * (d - delta_s) - p_max * (np.cos(d) - np.cos(delta_s))
    return kinetic + potential


def smib_energy_label(delta, omega, model: GridModel, fault_name: str | None = None):
    """Closest-UEP energy criterion: 1 iff V < V_cr inside the well.

    The well convention keeps delta in (3*delta_s - 2*pi, pi - delta_s).
    Accepts scalars or arrays; returns matching int labels.
    """
    delta_s, _p_max, v_cr = smib_energy_parameters(model, fault_name)
    v = smib_energy(delta, omega, model, fault_name)
    d = np.asarray(delta, dtype=np.float64)
    inside = (d > 3 * delta_s - 2 * np.pi) & (d < np.pi - delta_s)
    label = ((v < v_cr) & inside).astype(int)
    return int(label) if label.ndim == 0 else label


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------


def retained_flow_pairs(y_red: np.ndarray, threshold: float = 1e-9) -> list[tuple[int, int]]:
    """Equivalent branches of the reduced network with non-negligible
    coupling, in fixed (i, j) lexicographic order."""
    m = y_red.shape[0]
    return [
        (i, j)
        for i in range(m)
        for j in range(i + 1, m)
        if abs(y_red[i, j]) > threshold
    ]


def features_from_state(
    state: np.ndarray, model: GridModel, y_red: np.ndarray | None = None
) -> np.ndarray:
    """Feature source vector for one dynamic state.

    SMIB: (delta, omega).  Multi-machine: angles of machines 2..m relative
    to machine 1, then all speed deviations, then per-machine electrical
    power, then active power flows on the retained reduced branches.
    """
    m = model.n_machines
    delta, omega = state[:m], state[m:]
    if model.kind == "SMIB":
        return np.array([delta[0], omega[0]])
    if y_red is None:
        raise ValueError("multi-machine features need the active reduced network")
    volts = model.emf * np.exp(1j * delta)
    currents = y_red @ volts
    p_elec = np.real(volts * np.conj(currents))
    flows = []
    for i, j in retained_flow_pairs(y_red):
        y_branch = -y_red[i, j]
        flows.append(np.real(volts[i] * np.conj(y_branch * (volts[i] - volts[j]))))
    return np.concatenate([delta[1:] - delta[0], omega, p_elec, np.array(flows)])


def extract_features(traj: Trajectory, index: int, model: GridModel, y_red=None) -> np.ndarray:
    """Features at one trajectory instant (typically the clearing index)."""
    if not 0 <= index < len(traj):
        raise ValueError(f"instant {index} outside trajectory of length {len(traj)}")
    state = np.concatenate([traj.delta[index], traj.omega[index]])
    return features_from_state(state, model, y_red)


def feature_dim(model: GridModel) -> int:
    if model.kind == "SMIB":
        return 2
    m = model.n_machines
    y = model.faults[0].y_post if model.faults else model.y_pre
    return (m - 1) + m + m + len(retained_flow_pairs(y))


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioDistribution:
    """Random scenario family: line faults with uniform clearing times plus
    an optional fraction of directly drawn post-disturbance states."""

    clearing_min: float = 0.05
    clearing_max: float = 0.5
    fault_start: float = 0.0
    horizon: float = 10.0
    fault_names: tuple[str, ...] = ()
    random_state_fraction: float = 0.0
    state_low: tuple[float, ...] = ()
    state_high: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not 0 < self.clearing_min <= self.clearing_max:
            raise ValueError("need 0 < clearing_min <= clearing_max")
        if not 0.0 <= self.random_state_fraction <= 1.0:
            raise ValueError("random_state_fraction must be in [0, 1]")
        if self.random_state_fraction > 0 and len(self.state_low) != len(self.state_high):
            raise ValueError("state box bounds must have equal length")


def _integrate_labels(
    deriv,
    y0: np.ndarray,
    h: float,
    allowed_steps: np.ndarray,
    bound: float = OUT_OF_STEP_BOUND,
) -> np.ndarray:
    """Batch-evolve states and return 0/1 labels per row.

    A row is unstable when its angle separation crosses `bound` (or the state
    leaves the finite range) at any step up to its own allowed step count.
    """
    n_rows, width = y0.shape
    m = width // 2
    y = y0.copy()
    crossed_at = np.full(n_rows, np.iinfo(np.int64).max, dtype=np.int64)
    sep = _max_separation(y[:, :m])
    crossed_at[sep > bound] = 0
    max_steps = int(allowed_steps.max())
    active = crossed_at == np.iinfo(np.int64).max
    for step in range(1, max_steps + 1):
        if not active.any():
            break
        y[active] = _rk4_step(deriv, y[active], h)
        bad = ~np.all(np.isfinite(y), axis=1) | (np.max(np.abs(y), axis=1) > _DIVERGENCE_LIMIT)
        sep = _max_separation(y[:, :m])
        hit = active & (bad | (sep > bound))
        crossed_at[hit] = step
        y[hit] = 0.0
        active &= ~hit
    return (crossed_at > allowed_steps).astype(np.int64)


def _integrate_capture(
    deriv, y0: np.ndarray, h: float, capture_steps: np.ndarray
) -> np.ndarray:
    """Batch-evolve one network phase, capturing each row's state at its own
    step count."""
    y = y0.copy()
    out = np.empty_like(y0)
    out[capture_steps == 0] = y[capture_steps == 0]
    for step in range(1, int(capture_steps.max()) + 1):
        y = _rk4_step(deriv, y, h)
        take = capture_steps == step
        out[take] = y[take]
    return out


def generate_dataset(
    model: GridModel,
    n_samples: int,
    distribution: ScenarioDistribution,
    seed: int,
    h: float = DEFAULT_STEP,
) -> SampleSet:
    """Labelled post-disturbance samples, deterministic per seed.

    Fault scenarios draw a fault location and a uniform clearing time, take
    the state at clearing as the feature source and label the remaining
    horizon.  State scenarios draw the post-disturbance state uniformly from
    the configured box and label its evolution under the post-fault network.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    fault_names = distribution.fault_names or tuple(f.name for f in model.faults)
    if not fault_names:
        raise ValueError("model has no faults to sample")

    children = np.random.SeedSequence(seed).spawn(n_samples)
    kinds: list[str] = []
    fault_pick: list[str] = []
    clearing = np.zeros(n_samples)
    kick_states = np.zeros((n_samples, 2 * model.n_machines))
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        is_kick = rng.uniform() < distribution.random_state_fraction
        kinds.append("kick" if is_kick else "fault")
        fault_pick.append(fault_names[int(rng.integers(len(fault_names)))])
        clearing[i] = rng.uniform(distribution.clearing_min, distribution.clearing_max)
        if is_kick:
            kick_states[i] = rng.uniform(distribution.state_low, distribution.state_high)

    horizon_steps = int(round(distribution.horizon / h))
    start_step = int(round(distribution.fault_start / h))
    clear_step = np.array(
        [start_step + max(1, int(round(ct / h))) for ct in clearing], dtype=np.int64
    )
    if clear_step.max() >= horizon_steps:
        raise ValueError("clearing window reaches past the simulation horizon")

    features = np.zeros((n_samples, feature_dim(model)))
    labels = np.zeros(n_samples, dtype=np.int64)

    idx = np.arange(n_samples)
    kinds_arr = np.array(kinds)
    faults_arr = np.array(fault_pick)
    for fault_name in fault_names:
        fault = model.fault_by_name(fault_name)
        y_post = None if model.kind == "SMIB" else fault.y_post
        post_deriv = _deriv_factory(model, _phase_network(model, "post", fault))

        rows = idx[(kinds_arr == "kick") & (faults_arr == fault_name)]
        if rows.size:
            states = kick_states[rows]
            for r, s in zip(rows, states):
                features[r] = features_from_state(s, model, y_post)
            labels[rows] = _integrate_labels(
                post_deriv, states, h, np.full(rows.size, horizon_steps)
            )

        rows = idx[(kinds_arr == "fault") & (faults_arr == fault_name)]
        if rows.size:
            y0 = pre_fault_equilibrium(model)
            if start_step:
                pre_deriv = _deriv_factory(model, _phase_network(model, "pre", fault))
                state = y0[None, :]
                for _ in range(start_step):
                    state = _rk4_step(pre_deriv, state, h)
                y0 = state[0]
            fault_deriv = _deriv_factory(model, _phase_network(model, "fault", fault))
            batch0 = np.repeat(y0[None, :], rows.size, axis=0)
            cleared = _integrate_capture(fault_deriv, batch0, h, clear_step[rows] - start_step)
            for r, s in zip(rows, cleared):
                features[r] = features_from_state(s, model, y_post)
            labels[rows] = _integrate_labels(
                post_deriv, cleared, h, horizon_steps - clear_step[rows]
            )

    provenance = tuple(
        f"{kind}:{fault}:{i}" for i, (kind, fault) in enumerate(zip(kinds, fault_pick))
    )
    dataset = SampleSet(features, labels, provenance)
    zeros, ones = dataset.class_counts()
    if zeros == 0 or ones == 0:
        raise ValueError(
            "degenerate scenario distribution: all samples fell in one class"
        )
    return dataset


def split_dataset(
    dataset: SampleSet, test_fraction: float = 0.25, seed: int = 0
) -> tuple[SampleSet, SampleSet]:
    """Stratified train/test split, deterministic per seed."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx: list[np.ndarray] = []
    train_idx: list[np.ndarray] = []
    for cls in (0, 1):
        members = np.flatnonzero(dataset.labels == cls)
        members = members[rng.permutation(members.size)]
        n_test = int(round(members.size * test_fraction))
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    tr = np.sort(np.concatenate(train_idx))
    te = np.sort(np.concatenate(test_idx))

    def pick(ix: np.ndarray) -> SampleSet:
        prov = tuple(dataset.provenance[i] for i in ix) if dataset.provenance else ()
        return SampleSet(dataset.features[ix], dataset.labels[ix], prov)

    return pick(tr), pick(te)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def save_dataset_csv(dataset: SampleSet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(dataset.feature_dim)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def load_dataset_csv(path) -> SampleSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "label":
            raise ValueError("dataset CSV must end with a label column")
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows, dtype=np.float64)
    return SampleSet(data[:, :-1], data[:, -1].astype(np.int64))


# ---------------------------------------------------------------------------
# Multi-machine network construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Branch:
    name: str
    from_node: str
    to_node: str
    reactance: float
    resistance: float = 0.0


@dataclass(frozen=True)
class NetworkDescription:
    """Bus/branch description that Kron-reduces to the machine nodes.

    Machine internal nodes (EMF behind transient reactance) are named like
    machines; the connecting branch to the terminal carries the transient
    plus transformer reactance.  Loads become constant shunt admittances
    (P - jQ at nominal voltage).
    """

    machine_names: tuple[str, ...]
    bus_names: tuple[str, ...]
    branches: tuple[Branch, ...]
    loads: dict[str, tuple[float, float]]

    def reduced_admittance(
        self, exclude_branches: frozenset[str] = frozenset(), grounded_bus: str | None = None
    ) -> np.ndarray:
        names = list(self.machine_names) + list(self.bus_names)
        index = {n: i for i, n in enumerate(names)}
        n = len(names)
        y_full = np.zeros((n, n), dtype=np.complex128)
        for br in self.branches:
            if br.name in exclude_branches:
                continue
            y = 1.0 / (br.resistance + 1j * br.reactance)
            i, j = index[br.from_node], index[br.to_node]
            y_full[i, i] += y
            y_full[j, j] += y
            y_full[i, j] -= y
            y_full[j, i] -= y
        for bus, (p, q) in self.loads.items():
            y_full[index[bus], index[bus]] += p - 1j * q
        remove = set()
        if grounded_bus is not None:
            if grounded_bus not in self.bus_names:
                raise ValueError(f"fault bus {grounded_bus!r} is not a network bus")
            remove.add(index[grounded_bus])
        for bus in self.bus_names:
            # buses left with no connection (e.g. on a fully tripped corridor)
            if index[bus] not in remove and abs(y_full[index[bus], index[bus]]) < 1e-12:
                remove.add(index[bus])
        sel = [i for i in range(n) if i not in remove]
        y_sel = y_full[np.ix_(sel, sel)]
        keep = [sel.index(index[m]) for m in self.machine_names]
        drop = [i for i in range(len(sel)) if i not in keep]
        if not drop:
            return y_sel[np.ix_(keep, keep)]
        y_kk = y_sel[np.ix_(keep, keep)]
        y_kd = y_sel[np.ix_(keep, drop)]
        y_dd = y_sel[np.ix_(drop, drop)]
        y_dk = y_sel[np.ix_(drop, keep)]
        return y_kk - y_kd @ np.linalg.solve(y_dd, y_dk)


def build_multimachine(
    machine_names: Sequence[str],
    inertia: Sequence[float],
    damping: Sequence[float],
    emf: Sequence[float],
    equilibrium: Sequence[float],
    network: NetworkDescription,
    fault_defs: Sequence[tuple[str, str, Sequence[str]]],
) -> GridModel:
    """Grid model with precomputed reduced matrices per fault.

    `fault_defs` entries are (name, fault_bus, tripped_branch_names); the
    fault-on matrix grounds the fault bus, the post-fault matrix removes the
    tripped branches.  Mechanical powers are set to the pre-fault electrical
    powers at the given equilibrium angles, so the stated angles are an
    exact SEP.
    """
    y_pre = network.reduced_admittance()
    emf_arr = np.asarray(emf, dtype=np.float64)
    delta0 = np.asarray(equilibrium, dtype=np.float64)
    volts = emf_arr * np.exp(1j * delta0)
    p_mech = np.real(volts * np.conj(y_pre @ volts))
    faults = tuple(
        NetworkFault(
            name=name,
            y_fault=network.reduced_admittance(grounded_bus=fault_bus),
            y_post=network.reduced_admittance(exclude_branches=frozenset(tripped)),
        )
        for name, fault_bus, tripped in fault_defs
    )
    return GridModel(
        kind="MULTIMACHINE",
        inertia=np.asarray(inertia, dtype=np.float64),
        damping=np.asarray(damping, dtype=np.float64),
        p_mech=p_mech,
        emf=emf_arr,
        y_pre=y_pre,
        faults=faults,
        equilibrium=delta0,
    )


# ---------------------------------------------------------------------------
# Bundled defaults
# ---------------------------------------------------------------------------


def default_smib() -> GridModel:
    """Textbook-scale single machine against an infinite bus.

    H = 5 s at 60 Hz, transfer limits 2.0 / {0.2, 0.4, 0.8} / 1.6 per unit
    for the pre-fault, fault-on (three locations) and post-fault networks.
    Damping is kept light so first-swing labels track the energy criterion.
    """
    emf = 1.05
    return GridModel(
        kind="SMIB",
        inertia=[0.0265],
        damping=[0.001],
        p_mech=[0.8],
        emf=[emf],
        x_pre=emf / 2.0,
        faults=(
            SmibFault("near", x_fault=emf / 0.2, x_post=emf / 1.6),
            SmibFault("mid", x_fault=emf / 0.4, x_post=emf / 1.6),
            SmibFault("far", x_fault=emf / 0.8, x_post=emf / 1.6),
        ),
    )


def default_smib_distribution() -> ScenarioDistribution:
    return ScenarioDistribution(
        clearing_min=0.05,
        clearing_max=0.5,
        horizon=10.0,
        random_state_fraction=0.5,
        state_low=(-np.pi, -8.0),
        state_high=(2 * np.pi, 8.0),
    )
