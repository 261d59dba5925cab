"""Run-configuration parsing: plain key/value + table text files.

One file describes a whole experiment: the grid model ([grid] plus, for
multi-machine systems, the [machines]/[buses]/[branches]/[loads] tables and
[faults]), the scenario distribution, the circuit, training
hyperparameters, and the sweep/scan grids.  Loaders below pull out the
typed pieces; unknown keys are ignored so configs can carry experiment
notes.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .circuits import CircuitSpec
from .noise import NoiseModel
from .power import (
    Branch,
    GridModel,
    NetworkDescription,
    ScenarioDistribution,
    SmibFault,
    build_multimachine,
)
from .training import TrainConfig


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


def read_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    loaded = parser.read(path)
    if not loaded:
        raise ConfigError(f"cannot read config file {path}")
    return parser


def default_config_path(name: str):
    """Path of a bundled configuration ('smib' or 'twoarea')."""
    ref = resources.files("qtsa.configs") / f"{name}.cfg"
    if not ref.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return ref


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split()]


def _require(cp: configparser.ConfigParser, section: str) -> configparser.SectionProxy:
    if not cp.has_section(section):
        raise ConfigError(f"missing [{section}] section")
    return cp[section]


# ---------------------------------------------------------------------------
# Grid model
# ---------------------------------------------------------------------------


def load_grid(cp: configparser.ConfigParser) -> GridModel:
    grid = _require(cp, "grid")
    kind = grid.get("kind", "").upper()
    if kind == "SMIB":
        for key in ("inertia", "damping", "p_mech", "emf", "x_pre"):
            if key not in grid:
                raise ConfigError(f"[grid] is missing {key!r}")
        faults = []
        for name, value in _require(cp, "faults").items():
            vals = _floats(value)
            if len(vals) != 2:
                raise ConfigError(f"fault {name!r} needs: x_fault x_post")
            faults.append(SmibFault(name, vals[0], vals[1]))
        faults = tuple(faults)
        return GridModel(
            kind="SMIB",
            inertia=[grid.getfloat("inertia")],
            damping=[grid.getfloat("damping")],
            p_mech=[grid.getfloat("p_mech")],
            emf=[grid.getfloat("emf")],
            x_pre=grid.getfloat("x_pre"),
            bus_voltage=grid.getfloat("bus_voltage", 1.0),
            faults=faults,
        )
    if kind == "MULTIMACHINE":
        machines = _require(cp, "machines")
        names, inertia, damping, emf, angle0 = [], [], [], [], []
        for name, value in machines.items():
            vals = _floats(value)
            if len(vals) != 4:
                raise ConfigError(f"machine {name!r} needs: inertia damping emf angle0")
            names.append(name)
            inertia.append(vals[0])
            damping.append(vals[1])
            emf.append(vals[2])
            angle0.append(vals[3])
        bus_names = tuple(_require(cp, "buses").get("names", "").split())
        branches = []
        for name, value in _require(cp, "branches").items():
            toks = value.split()
            if len(toks) not in (3, 4):
                raise ConfigError(f"branch {name!r} needs: from to reactance [resistance]")
            branches.append(
                Branch(
                    name,
                    toks[0],
                    toks[1],
                    float(toks[2]),
                    float(toks[3]) if len(toks) == 4 else 0.0,
                )
            )
        loads = {}
        if cp.has_section("loads"):
            for bus, value in cp["loads"].items():
                p, q = _floats(value)[:2]
                loads[bus] = (p, q)
        network = NetworkDescription(tuple(names), bus_names, tuple(branches), loads)
        fault_defs = []
        for name, value in _require(cp, "faults").items():
            toks = value.split()
            if len(toks) != 2:
                raise ConfigError(f"fault {name!r} needs: fault_bus tripped_branches")
            fault_defs.append((name, toks[0], tuple(toks[1].split("+"))))
        return build_multimachine(names, inertia, damping, emf, angle0, network, fault_defs)
    raise ConfigError(f"unknown grid kind {kind!r}")


def load_distribution(cp: configparser.ConfigParser) -> tuple[ScenarioDistribution, int]:
    sc = _require(cp, "scenario")
    dist = ScenarioDistribution(
        clearing_min=sc.getfloat("clearing_min", 0.05),
        clearing_max=sc.getfloat("clearing_max", 0.5),
        fault_start=sc.getfloat("fault_start", 0.0),
        horizon=sc.getfloat("horizon", 10.0),
        fault_names=tuple(sc.get("fault_names", "").split()),
        random_state_fraction=sc.getfloat("random_state_fraction", 0.0),
        state_low=tuple(_floats(sc.get("state_low", ""))),
        state_high=tuple(_floats(sc.get("state_high", ""))),
    )
    return dist, sc.getint("n_samples", 2000)


# ---------------------------------------------------------------------------
# Circuit / training / experiment sections
# ---------------------------------------------------------------------------


def parse_spec_token(token: str, feat_dim: int, activation: str = "TANH") -> CircuitSpec:
    """Spec shorthand ARCH:qubits:layers, e.g. QTSA:2:6."""
    parts = token.split(":")
    if len(parts) != 3:
        raise ConfigError(f"bad circuit token {token!r}; expected ARCH:qubits:layers")
    arch = parts[0].upper()
    act = activation if arch == "QTSA" else "IDENTITY"
    return CircuitSpec(arch, int(parts[1]), int(parts[2]), feat_dim, act)


def load_circuit(cp: configparser.ConfigParser, feat_dim: int) -> CircuitSpec:
    sec = _require(cp, "circuit")
    arch = sec.get("architecture", "QTSA").upper()
    activation = sec.get("activation", "TANH").upper()
    if arch != "QTSA":
        activation = "IDENTITY"
    return CircuitSpec(
        architecture=arch,
        n_qubits=sec.getint("n_qubits", 2),
        n_layers=sec.getint("n_layers", 6),
        feature_dim=feat_dim,
        activation=activation,
    )


def load_train(cp: configparser.ConfigParser, seed: int) -> tuple[TrainConfig, float]:
    sec = cp["train"] if cp.has_section("train") else {}
    get = lambda key, default: float(sec.get(key, default)) if sec else default
    cfg = TrainConfig(
        learning_rate=get("learning_rate", 0.05),
        epsilon=get("epsilon", 1e-8),
        beta1=get("beta1", 0.9),
        beta2=get("beta2", 0.999),
        fisher_damping=get("fisher_damping", 1e-3),
        max_epochs=int(get("max_epochs", 200)),
        batch_size=int(get("batch_size", 32)),
        seed=seed,
        use_fisher=str(sec.get("use_fisher", "true")).lower() in ("1", "true", "yes")
        if sec
        else True,
    )
    test_fraction = get("test_fraction", 0.25)
    return cfg, test_fraction


def load_compare_specs(cp: configparser.ConfigParser, feat_dim: int) -> list[CircuitSpec]:
    sec = _require(cp, "compare")
    tokens = sec.get("specs", "").split()
    if not tokens:
        raise ConfigError("[compare] needs a non-empty 'specs' list")
    activation = "TANH"
    if cp.has_section("circuit"):
        activation = cp["circuit"].get("activation", "TANH").upper()
    return [parse_spec_token(tok, feat_dim, activation) for tok in tokens]


@dataclass(frozen=True)
class RegionSettings:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    thresholds: tuple[float, ...]


def load_region(cp: configparser.ConfigParser) -> RegionSettings:
    sec = _require(cp, "region")
    return RegionSettings(
        x_min=sec.getfloat("x_min", -np.pi),
        x_max=sec.getfloat("x_max", 2 * np.pi),
        y_min=sec.getfloat("y_min", -8.0),
        y_max=sec.getfloat("y_max", 8.0),
        nx=sec.getint("nx", 200),
        ny=sec.getint("ny", 200),
        thresholds=tuple(_floats(sec.get("thresholds", "0.5 0.7 0.9 0.95"))),
    )


def load_noise_sweep(cp: configparser.ConfigParser) -> list[NoiseModel]:
    """Sweep settings: gate-error points (no relaxation), then T1 points
    (no gate error), sharing the configured gate times."""
    sec = _require(cp, "noise")
    t1q = sec.getfloat("gate_time_1q", 35e-9)
    t2q = sec.getfloat("gate_time_2q", 300e-9)
    settings = [
        NoiseModel(gate_error=p, gate_time_1q=t1q, gate_time_2q=t2q)
        for p in _floats(sec.get("gate_errors", ""))
    ]
    settings.extend(
        NoiseModel(gate_error=0.0, t1=t1, gate_time_1q=t1q, gate_time_2q=t2q)
        for t1 in _floats(sec.get("t1_values", ""))
    )
    if not settings:
        raise ConfigError("[noise] defines neither gate_errors nor t1_values")
    return settings


def load_dataset_path(cp: configparser.ConfigParser) -> str | None:
    if cp.has_section("data"):
        return cp["data"].get("dataset") or None
    return None


def load_model_path(cp: configparser.ConfigParser) -> str | None:
    if cp.has_section("data"):
        return cp["data"].get("model") or None
    return None


def default_two_area() -> GridModel:
    """The bundled four-machine, two-area stand-in system."""
    with resources.as_file(default_config_path("twoarea")) as path:
        return load_grid(read_config(path))
