"""Swing-equation simulation, labeling, and dataset generation tests."""

import numpy as np
import pytest

from helpers import critical_clearing_time
from qtsa.power import (
    Branch,
    GridModel,
    NetworkDescription,
    SampleSet,
    Scenario,
    ScenarioDistribution,
    SmibFault,
    Trajectory,
    build_multimachine,
    default_smib,
    default_smib_distribution,
    extract_features,
    feature_dim,
    features_from_state,
    generate_dataset,
    label_stability,
    load_dataset_csv,
    pre_fault_equilibrium,
    retained_flow_pairs,
    save_dataset_csv,
    simulate,
    smib_energy,
    smib_energy_label,
    smib_energy_parameters,
    split_dataset,
)


@pytest.fixture(scope="module")
def smib():
    return default_smib()


@pytest.fixture(scope="module")
def two_machine():
    """Minimal two-machine network for multi-machine code paths."""
    net = NetworkDescription(
        machine_names=("g1", "g2"),
        bus_names=("b1", "b2", "mid"),
        branches=(
            Branch("s1", "g1", "b1", 0.4),
            Branch("s2", "g2", "b2", 0.4),
            Branch("t1", "b1", "mid", 0.25),
            Branch("t2", "mid", "b2", 0.25),
            Branch("t3", "b1", "b2", 0.8),
        ),
        loads={"b2": (1.2, 0.1)},
    )
    return build_multimachine(
        machine_names=("g1", "g2"),
        inertia=(0.03, 0.03),
        damping=(0.002, 0.002),
        emf=(1.05, 1.05),
        equilibrium=(0.4, 0.0),
        network=net,
        fault_defs=[("mid", "mid", ("t1", "t2"))],
    )


# ---------------------------------------------------------------------------
# Model validation
# ---------------------------------------------------------------------------


def test_grid_model_requires_positive_inertia():
    with pytest.raises(ValueError):
        GridModel("SMIB", [0.0], [0.01], [0.8], [1.05], x_pre=0.5)


def test_smib_has_exactly_one_machine():
    with pytest.raises(ValueError):
        GridModel("SMIB", [0.03, 0.03], [0.01, 0.01], [0.8, 0.8], [1.05, 1.05], x_pre=0.5)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario("mid", 0.0, 0.5, 0.4)  # clears after horizon
    with pytest.raises(ValueError):
        Scenario("mid", -0.1, 0.2, 10.0)
    Scenario(None, 0.0, 0.0, 10.0)  # undisturbed run needs only a horizon


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def test_no_fault_run_stays_at_equilibrium(smib):
    traj = simulate(smib, Scenario(None, 0.0, 0.0, 10.0))
    eq = pre_fault_equilibrium(smib)
    assert np.max(np.abs(traj.delta - eq[0])) < 1e-8
    assert np.max(np.abs(traj.omega)) < 1e-8
    assert not traj.diverged


def test_undamped_post_fault_energy_is_conserved(smib):
    from dataclasses import replace

    # no damping, pre-fault reactance swapped for the post-fault one
    post = replace(smib, damping=np.array([0.0]), x_pre=smib.faults[0].x_post)
    start = np.array([1.2, 2.0])  # inside the well
    traj = simulate(post, Scenario(None, 0.0, 0.0, 5.0), initial=start)
    energies = smib_energy(traj.delta[:, 0], traj.omega[:, 0], smib)
    drift = np.max(np.abs(energies - energies[0])) / abs(energies[0])
    assert drift < 1e-6


def test_late_clearing_drives_rotor_out_of_step(smib):
    traj = simulate(smib, Scenario("mid", 0.0, 1.2, 10.0))
    assert label_stability(traj, start_index=traj.clearing_index) == 0
    assert traj.delta.max() > np.pi
    # the clearing state already violates the energy criterion
    k = traj.clearing_index
    assert smib_energy_label(traj.delta[k, 0], traj.omega[k, 0], smib) == 0


def test_rk4_order_of_convergence(smib):
    scen = Scenario(None, 0.0, 0.0, 2.0)
    start = np.array([1.0, 1.5])
    finals = []
    for h in (2e-3, 1e-3, 5e-4):
        traj = simulate(smib, scen, initial=start, h=h)
        finals.append(np.array([traj.delta[-1, 0], traj.omega[-1, 0]]))
    err1 = np.linalg.norm(finals[0] - finals[1])
    err2 = np.linalg.norm(finals[1] - finals[2])
    order = np.log2(err1 / err2)
    assert order > 3.5


def test_divergence_flagging():
    # un-dampened runaway: huge mechanical power with tiny inertia
    model = GridModel(
        "SMIB", [1e-6], [0.0], [5.0], [1.05], x_pre=10.0,
        faults=(SmibFault("f", 10.0, 10.0),),
    )
    traj = simulate(model, Scenario(None, 0.0, 0.0, 2.0), initial=np.zeros(2))
    assert traj.diverged
    assert label_stability(traj) == 0
    # the truncated trajectory carries only the states before divergence
    assert np.all(np.isfinite(traj.delta)) and np.all(np.isfinite(traj.omega))
    assert np.max(np.abs(traj.delta)) < 1e6


# ---------------------------------------------------------------------------
# Labeling
# ---------------------------------------------------------------------------


def _flat_traj(delta_value, n=11, m=1):
    t = np.linspace(0, 1, n)
    return Trajectory(t, np.full((n, m), delta_value), np.zeros((n, m)))


def test_label_constant_trajectory_stable(smib):
    assert label_stability(_flat_traj(0.5)) == 1


def test_label_bounded_excursion_below_pi_is_stable():
    traj = _flat_traj(0.99 * np.pi)
    assert label_stability(traj) == 1
    assert label_stability(_flat_traj(1.01 * np.pi)) == 0


def test_label_empty_trajectory_rejected():
    empty = Trajectory(np.zeros(0), np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        label_stability(empty)


# ---------------------------------------------------------------------------
# Energy criterion
# ---------------------------------------------------------------------------


def test_energy_label_at_sep_and_uep(smib):
    delta_s, p_max, v_cr = smib_energy_parameters(smib)
    assert abs(delta_s - np.arcsin(0.5)) < 1e-12  # P_m/P_max = 0.8/1.6
    assert smib_energy_label(delta_s, 0.0, smib) == 1
    assert smib_energy_label(np.pi - delta_s, 0.0, smib) == 0  # boundary UEP


def test_energy_label_rejects_large_speed(smib):
    delta_s, _, v_cr = smib_energy_parameters(smib)
    omega_big = np.sqrt(2.5 * v_cr / float(smib.inertia[0]))
    assert smib_energy(delta_s, omega_big, smib) > v_cr
    assert smib_energy_label(delta_s, omega_big, smib) == 0


def test_energy_label_vectorised(smib):
    d = np.array([0.5, 3.0, 0.5])
    w = np.array([0.0, 0.0, 50.0])
    assert list(smib_energy_label(d, w, smib)) == [1, 0, 0]


def test_energy_requires_equilibrium():
    model = GridModel(
        "SMIB", [0.03], [0.01], [2.0], [1.05], x_pre=0.5,
        faults=(SmibFault("f", 3.0, 1.05),),  # post-fault P_max = 1.0 < P_m
    )
    with pytest.raises(ValueError):
        smib_energy_label(0.3, 0.0, model)


def test_clearing_below_cct_stays_stable(smib):
    cct = critical_clearing_time(smib, "mid")
    for ct in (0.3 * cct, 0.6 * cct, 0.95 * cct):
        traj = simulate(smib, Scenario("mid", 0.0, ct, 10.0))
        assert label_stability(traj, start_index=traj.clearing_index) == 1
    traj = simulate(smib, Scenario("mid", 0.0, 1.1 * cct, 10.0))
    assert label_stability(traj, start_index=traj.clearing_index) == 0


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------


def test_smib_features_at_sep(smib):
    traj = simulate(smib, Scenario(None, 0.0, 0.0, 1.0))
    feats = extract_features(traj, 0, smib)
    eq = pre_fault_equilibrium(smib)
    assert np.allclose(feats, eq)


def test_extract_features_index_validation(smib):
    traj = simulate(smib, Scenario(None, 0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        extract_features(traj, len(traj), smib)


def test_multimachine_feature_dimension(two_machine):
    m = two_machine.n_machines
    y_post = two_machine.faults[0].y_post
    n_flows = len(retained_flow_pairs(y_post))
    state = np.concatenate([two_machine.equilibrium, np.zeros(m)])
    feats = features_from_state(state, two_machine, y_post)
    assert feats.size == (m - 1) + m + m + n_flows
    assert feats.size == feature_dim(two_machine)


def test_multimachine_no_fault_constancy(two_machine):
    traj = simulate(two_machine, Scenario(None, 0.0, 0.0, 5.0))
    eq = pre_fault_equilibrium(two_machine)
    assert np.max(np.abs(traj.delta - eq[:2])) < 1e-7
    assert np.max(np.abs(traj.omega)) < 1e-7


def test_multimachine_fault_has_finite_cct(two_machine):
    cct = critical_clearing_time(two_machine, "mid", hi=2.0)
    assert 0.01 < cct < 2.0


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------


def test_generate_dataset_is_seed_deterministic(smib):
    dist = default_smib_distribution()
    a = generate_dataset(smib, 60, dist, seed=5)
    b = generate_dataset(smib, 60, dist, seed=5)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    c = generate_dataset(smib, 60, dist, seed=6)
    assert not np.array_equal(a.features, c.features)


def test_default_distribution_is_balanced_enough(smib):
    ds = generate_dataset(smib, 400, default_smib_distribution(), seed=11)
    zeros, ones = ds.class_counts()
    assert min(zeros, ones) / len(ds) >= 0.2


def test_generate_dataset_rejects_single_class(smib):
    # clearing times far below every critical time: all stable
    dist = ScenarioDistribution(clearing_min=0.01, clearing_max=0.02, horizon=5.0)
    with pytest.raises(ValueError):
        generate_dataset(smib, 20, dist, seed=1)


def test_generate_dataset_fault_labels_match_simulate(smib):
    """Batched generation agrees with the per-scenario reference path."""
    dist = ScenarioDistribution(clearing_min=0.05, clearing_max=0.5, horizon=10.0)
    ds = generate_dataset(smib, 20, dist, seed=3)
    assert all(p.startswith("fault:") for p in ds.provenance)
    h = 1e-3
    rng_children = np.random.SeedSequence(3).spawn(20)
    for i in (0, 7, 13, 19):
        # replay the per-sample draws: family, fault location, clearing time
        rng = np.random.default_rng(rng_children[i])
        rng.uniform()
        fault = ("near", "mid", "far")[int(rng.integers(3))]
        ct = rng.uniform(0.05, 0.5)
        snapped = max(1, int(round(ct / h))) * h
        traj = simulate(smib, Scenario(fault, 0.0, snapped, 10.0), h=h)
        k = traj.clearing_index
        assert np.allclose(extract_features(traj, k, smib), ds.features[i], atol=1e-9)
        assert label_stability(traj, start_index=k) == ds.labels[i]


def test_multimachine_dataset_generation(two_machine):
    dist = ScenarioDistribution(clearing_min=0.05, clearing_max=0.9, horizon=8.0)
    ds = generate_dataset(two_machine, 40, dist, seed=2)
    assert ds.feature_dim == feature_dim(two_machine)
    zeros, ones = ds.class_counts()
    assert zeros > 0 and ones > 0


# ---------------------------------------------------------------------------
# Split and CSV
# ---------------------------------------------------------------------------


def test_split_is_stratified_and_deterministic(smib):
    ds = generate_dataset(smib, 200, default_smib_distribution(), seed=21)
    tr1, te1 = split_dataset(ds, 0.25, seed=4)
    tr2, te2 = split_dataset(ds, 0.25, seed=4)
    assert np.array_equal(tr1.features, tr2.features)
    assert len(te1) == round(0.25 * len(ds))
    whole_frac = ds.labels.mean()
    assert abs(te1.labels.mean() - whole_frac) < 0.08
    assert abs(tr1.labels.mean() - whole_frac) < 0.08


def test_dataset_csv_round_trip(tmp_path, smib):
    ds = generate_dataset(smib, 30, default_smib_distribution(), seed=9)
    path = tmp_path / "dataset.csv"
    save_dataset_csv(ds, path)
    header = path.read_text().splitlines()[0]
    assert header == "f0,f1,label"
    back = load_dataset_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)


def test_sampleset_validation():
    with pytest.raises(ValueError):
        SampleSet(np.zeros((3, 2)), np.array([0, 1, 2]))
    with pytest.raises(ValueError):
        SampleSet(np.zeros((3, 2)), np.array([0, 1]))
