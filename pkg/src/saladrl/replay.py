"""Episodic replay memory with reward-based prioritisation.

Episodes are stored whole.  A minibatch draw first picks an episode (from
the positive-reward pool with probability tau_p, the negative-reward pool
with probability tau_n, otherwise from everything) and then a contiguous
window of up to ``l`` steps inside it.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class EpisodeRecord:
    """One finished episode.

    ``obs`` has one more entry than the per-step lists: ``obs[t]`` is what the
    agent saw before acting at step t and ``obs[-1]`` follows the last action.
    ``scores[t]`` is the running total including ``rewards[t]``.
    """

    obs: list = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    admissible: list[int] = field(default_factory=list)
    forced: list[bool] = field(default_factory=list)
    terminal: bool = False

    def __post_init__(self):
        self.scores: list[float] = list(np.cumsum(self.rewards)) if self.rewards else []

    def add(self, action: int, reward: float, admissible: int, next_obs, forced: bool = False) -> None:
        self.actions.append(int(action))
        self.rewards.append(float(reward))
        self.admissible.append(int(admissible))
        self.forced.append(bool(forced))
        self.obs.append(next_obs)
        self.scores.append((self.scores[-1] if self.scores else 0.0) + float(reward))

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def p(self) -> bool:
        return any(r > 0 for r in self.rewards)

    @property
    def q(self) -> bool:
        return any(r < 0 for r in self.rewards)

    def score_before(self, t: int) -> float:
        return self.scores[t - 1] if t > 0 else 0.0

    def to_json(self) -> str:
        return json.dumps({"obs": [list(o) for o in self.obs], "actions": self.actions, "rewards": self.rewards,
                           "admissible": self.admissible, "forced": self.forced, "terminal": self.terminal})

    @classmethod
    def from_json(cls, line: str) -> "EpisodeRecord":
        d = json.loads(line)
        return cls([tuple(o) for o in d["obs"]], d["actions"], d["rewards"], d["admissible"], d["forced"],
                   d["terminal"])


@dataclass
class Subsequence:
    episode: EpisodeRecord
    start: int
    length: int

    @property
    def ends_episode(self) -> bool:
        return self.start + self.length == len(self.episode)

    def terminal_flags(self) -> list[bool]:
        """Terminal marker per step: only the last step of a finished episode."""
        flags = [False] * self.length
        if self.ends_episode and self.episode.terminal:
            flags[-1] = True
        return flags


class ReplayMemory:
    def __init__(self, capacity: int = 5000, tau_p: float = 0.25, tau_n: float = 0.25, seq_len: int = 15):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if tau_p < 0 or tau_n < 0 or tau_p + tau_n > 1:
            raise ValueError("need tau_p, tau_n >= 0 and tau_p + tau_n <= 1")
        self.capacity = capacity
        self.tau_p, self.tau_n = tau_p, tau_n
        self.seq_len = seq_len
        self.episodes: deque[tuple[int, EpisodeRecord]] = deque()
        self.p_ids: set[int] = set()
        self.q_ids: set[int] = set()
        self._by_id: dict[int, EpisodeRecord] = {}
        self._next_id = 0
        # sorted views rebuilt lazily so sampling is reproducible
        self._views: tuple[list[int], list[int], list[int]] | None = None

    def __len__(self) -> int:
        return len(self.episodes)

    def store_episode(self, episode: EpisodeRecord) -> int:
        if len(episode) == 0:
            raise ValueError("cannot store an empty episode")
        eid = self._next_id
        self._next_id += 1
        self.episodes.append((eid, episode))
        self._by_id[eid] = episode
        if episode.p:
            self.p_ids.add(eid)
        if episode.q:
            self.q_ids.add(eid)
        while len(self.episodes) > self.capacity:
            old, _ = self.episodes.popleft()
            del self._by_id[old]
            self.p_ids.discard(old)
            self.q_ids.discard(old)
        self._views = None
        return eid

    def ids(self) -> list[int]:
        return [eid for eid, _ in self.episodes]

    def _pools(self):
        if self._views is None:
            self._views = (self.ids(), sorted(self.p_ids), sorted(self.q_ids))
        return self._views

    def draw_episode(self, rng: np.random.Generator) -> tuple[str, EpisodeRecord]:
        """Pick one episode; returns the pool it came from ('p', 'q' or 'all')."""
        if not self.episodes:
            raise ValueError("replay memory is empty")
        everything, p_pool, q_pool = self._pools()
        u = rng.random()
        if u < self.tau_p and p_pool:
            pool, name = p_pool, "p"
        elif self.tau_p <= u < self.tau_p + self.tau_n and q_pool:
            pool, name = q_pool, "q"
        else:
            pool, name = everything, "all"
        return name, self._by_id[pool[rng.integers(len(pool))]]

    def sample_minibatch(self, batch_size: int, rng: np.random.Generator) -> list[Subsequence]:
        out = []
        for _ in range(batch_size):
            _, ep = self.draw_episode(rng)
            length = min(self.seq_len, len(ep))
            start = int(rng.integers(len(ep) - length + 1))
            out.append(Subsequence(ep, start, length))
        return out

    def dump(self, path: str | Path) -> None:
        """Write every stored episode as one JSON object per line."""
        with open(path, "w", encoding="utf-8") as fh:
            for _, ep in self.episodes:
                fh.write(ep.to_json() + "\n")
