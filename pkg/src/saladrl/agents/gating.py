"""Admissibility estimators and the rules that turn them into a candidate action set."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..engine import GameState, WorldSpec, admissible_indices

log = logging.getLogger(__name__)

GATINGS = ("none", "dropout", "masking", "cqlh", "acqlh")


@dataclass(frozen=True)
class GatingScheme:
    variant: str = "none"
    threshold: float = 0.001     # c, masking only
    softness: float = 0.0        # epsilon_1: chance of ignoring the gate for one step

    def __post_init__(self):
        if self.variant not in GATINGS:
            raise ValueError(f"unknown gating {self.variant!r}; choose from {', '.join(GATINGS)}")
        if not 0.0 <= self.threshold < 1.0:
            raise ValueError("masking threshold must lie in [0, 1)")
        if not 0.0 <= self.softness <= 1.0:
            raise ValueError("softness must lie in [0, 1]")

    @property
    def update_rule(self) -> str:
        return {"cqlh": "cqlh", "acqlh": "acqlh"}.get(self.variant, "q")


def build_gated_set(xi_hat: np.ndarray, scheme: GatingScheme, rng: np.random.Generator | None = None
                    ) -> np.ndarray:
    """Boolean mask over actions: which ones may be chosen this step."""
    xi_hat = np.asarray(xi_hat, dtype=np.float64)
    if scheme.variant == "dropout":
        if rng is None:
            raise ValueError("dropout gating needs a random generator")
        return rng.random(xi_hat.shape) < xi_hat
    if scheme.variant == "masking":
        return xi_hat >= scheme.threshold
    return np.ones(xi_hat.shape, dtype=bool)


def gate(xi_hat, scheme: GatingScheme, rng: np.random.Generator) -> np.ndarray:
    """Like :func:`build_gated_set` plus softness and the empty-set fallback."""
    if scheme.softness and rng.random() < scheme.softness:
        return np.ones(len(xi_hat), dtype=bool)
    allowed = build_gated_set(xi_hat, scheme, rng)
    if not allowed.any():
        log.debug("gated action set is empty, falling back to the full action set")
        allowed[:] = True
    return allowed


def oracle_allowed(xi_true: np.ndarray) -> np.ndarray:
    """Candidate set under oracle gating: exactly the admissible actions (all of A if none are)."""
    allowed = np.asarray(xi_true) > 0.5
    if not allowed.any():
        allowed = np.ones(len(allowed), dtype=bool)
    return allowed


def select_action(q: np.ndarray, allowed: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over the allowed actions; ties go to the lowest index."""
    idx = np.flatnonzero(allowed)
    if rng.random() < epsilon:
        return int(idx[rng.integers(len(idx))])
    return int(idx[np.argmax(q[idx])])


class OracleEstimator:
    """Exact admissibility read off the hidden state by probing the engine."""

    needs_state = True

    def __init__(self, world: WorldSpec, cache_size: int = 200_000):
        self.world = world
        self.n = len(world.action_set)
        self._cache: dict[GameState, np.ndarray] = {}
        self.cache_size = cache_size

    def __call__(self, state: GameState) -> np.ndarray:
        hit = self._cache.get(state)
        if hit is None:
            hit = np.zeros(self.n)
            hit[admissible_indices(self.world, state)] = 1.0
            if len(self._cache) >= self.cache_size:
                self._cache.clear()
            self._cache[state] = hit
        return hit


class ConstantEstimator:
    needs_state = False

    def __init__(self, n_actions: int, value: float = 1.0):
        self.value = np.full(n_actions, float(value))

    def __call__(self, *_):
        return self.value
