"""Shared test oracles: finite differences and scenario bisection."""

import numpy as np

from qtsa.circuits import prob_one_many
from qtsa.power import Scenario, label_stability, simulate
from qtsa.training import _bce_vec


def numeric_loss_gradient(spec, params, scaled_features, labels, h=1e-5):
    """Central-difference gradient of the mean batch loss."""
    p = np.asarray(params, dtype=np.float64)
    z = np.atleast_2d(scaled_features)
    y = np.asarray(labels)
    table = np.repeat(p[None, :], 2 * p.size, axis=0)
    for i in range(p.size):
        table[2 * i, i] += h
        table[2 * i + 1, i] -= h
    probs = prob_one_many(spec, table, z)
    losses = np.mean(_bce_vec(probs, y[None, :]), axis=1)
    return (losses[0::2] - losses[1::2]) / (2.0 * h)


def critical_clearing_time(model, fault_name, lo=0.01, hi=1.5, iters=25, horizon=10.0):
    """Bisection for the longest still-stable fault duration."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        traj = simulate(model, Scenario(fault_name, 0.0, mid, horizon))
        if label_stability(traj, start_index=traj.clearing_index):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
