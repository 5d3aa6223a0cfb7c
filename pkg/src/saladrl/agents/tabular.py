"""Hash-table Q-learners with optional score heads."""
from __future__ import annotations

import numpy as np

from .config import AgentConfig
from .gating import GatingScheme, gate, select_action
from .heads import ScoreHeadMap
from .updates import acqlh_delta, cqlh_delta, q_learning_delta


class TabularQ:
    """Q-values keyed by ``(head, history key)``; unseen entries read as zero."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.table: dict[tuple, np.ndarray] = {}
        self._zeros = np.zeros(n_actions)
        self._zeros.setflags(write=False)

    def values(self, head: int, key) -> np.ndarray:
        return self.table.get((head, key), self._zeros)

    def row(self, head: int, key) -> np.ndarray:
        row = self.table.get((head, key))
        if row is None:
            row = self.table[(head, key)] = np.zeros(self.n_actions)
        return row

    def __len__(self) -> int:
        return len(self.table)


class TabularAgent:
    """Online one-step learner.

    ``gating`` controls both the candidate set at selection time (dropout,
    masking) and the update rule (cqlh, acqlh).
    """

    def __init__(self, n_actions: int, config: AgentConfig, rng: np.random.Generator):
        self.cfg = config
        self.n_actions = n_actions
        self.rng = rng
        self.q = TabularQ(n_actions)
        self.j_map = ScoreHeadMap(config.heads)
        self.scheme = GatingScheme(config.gating, config.mask_threshold, config.softness)

    def act(self, key, score: int, xi_hat: np.ndarray, epsilon: float, allowed: np.ndarray | None = None) -> int:
        """Epsilon-greedy choice; ``allowed`` (e.g. the oracle set) overrides the gating scheme."""
        head = self.j_map(score)
        if allowed is None:
            allowed = gate(xi_hat, self.scheme, self.rng)
        return select_action(self.q.values(head, key), allowed, epsilon, self.rng)

    def update(self, key, score: int, action: int, reward: float, next_key, next_score: int,
               terminal: bool, xi_a: float = 1.0) -> float:
        """Apply one TD update and return the error that was used."""
        head = self.j_map(score)
        row = self.q.row(head, key)
        q_sa = row[action]
        nxt = 0.0 if terminal else float(self.q.values(self.j_map(next_score), next_key).max())
        g = self.cfg.gamma
        rule = self.scheme.update_rule
        if rule == "cqlh":
            delta = cqlh_delta(reward, g, nxt, q_sa, xi_a)
        elif rule == "acqlh":
            delta = acqlh_delta(reward, g, nxt, q_sa, xi_a)
        else:
            delta = q_learning_delta(reward, g, nxt, q_sa)
        row[action] = q_sa + self.cfg.tabular_lr * delta
        return float(delta)

    # -- persistence
    def state_dict(self) -> dict:
        return {
            "j_map": self.j_map.to_dict(),
            "entries": [[h, _jsonable(k), row.tolist()] for (h, k), row in self.q.table.items()],
        }

    def load_state_dict(self, data: dict) -> None:
        self.j_map = ScoreHeadMap.from_dict(data["j_map"])
        self.q.table = {(h, _hashable(k)): np.asarray(row, dtype=np.float64) for h, k, row in data["entries"]}


def _jsonable(key):
    if isinstance(key, tuple):
        return [_jsonable(k) for k in key]
    return key


def _hashable(key):
    if isinstance(key, list):
        return tuple(_hashable(k) for k in key)
    return key
