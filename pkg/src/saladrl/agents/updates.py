"""Temporal-difference errors used by the learners.

All functions accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

import numpy as np


def q_learning_delta(r, gamma, q_next_max, q_current):
    """Plain Q-learning error; pass ``q_next_max = 0`` for terminal steps."""
    return r + gamma * q_next_max - q_current


def cql_delta(r, gamma, q_next_max, q_current, same_state):
    """Consistent Q-learning on states: a self-transition bootstraps from itself.

    With ``same_state`` true the error becomes ``r + (gamma - 1) * q_current``.
    """
    return np.where(same_state, r + (gamma - 1.0) * q_current, r + gamma * q_next_max - q_current)


def cqlh_delta(r, gamma, q_next_max, q_current, xi_hat):
    """History version: the state-change indicator is replaced by the estimated admissibility."""
    return r + gamma * q_next_max * xi_hat + gamma * q_current * (1.0 - xi_hat) - q_current


def acqlh_delta(r, gamma, q_next_max, q_current, xi_hat):
    """Alternate form that drops the self-bootstrap term entirely."""
    return r + gamma * q_next_max * xi_hat - q_current


RULES = ("q", "cqlh", "acqlh")


def td_target(rule: str, r, gamma, terminal, q_next_max, q_next_same, xi_hat, q_current=None):
    """Bootstrap target y for a batch of steps.

    ``q_next_same`` is Q(h_{t+1}, a_t): the value of repeating the same
    action, which the consistent backup uses when the action is believed to
    have left the state unchanged.  With ``q_current`` given, the "current"
    variant is used instead, bootstrapping from Q(h_t, a_t).
    """
    r = np.asarray(r, dtype=np.float64)
    alive = 1.0 - np.asarray(terminal, dtype=np.float64)
    if rule == "q":
        boot = q_next_max
    elif rule == "cqlh":
        same = q_next_same if q_current is None else q_current
        boot = xi_hat * q_next_max + (1.0 - xi_hat) * same
    elif rule == "acqlh":
        boot = xi_hat * q_next_max
    else:
        raise ValueError(f"unknown update rule {rule!r}")
    return r + gamma * alive * boot
