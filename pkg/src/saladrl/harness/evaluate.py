from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import load_learner
from .train import greedy_fraction, resolve_level


@dataclass
class EvalSummary:
    episodes: int
    mean_fraction: float | None
    std_fraction: float | None
    mean_score: float | None
    std_score: float | None

    def lines(self) -> list[str]:
        if not self.episodes:
            return ["episodes: 0"]
        return [f"episodes: {self.episodes}",
                f"fraction: {self.mean_fraction:.3f} +- {self.std_fraction:.3f}",
                f"score: {self.mean_score:.2f} +- {self.std_score:.2f}"]


def evaluate(checkpoint, level=None, episodes: int = 10) -> EvalSummary:
    """Greedy rollouts of a saved agent on ``level`` (default: the level it was trained on)."""
    if episodes <= 0:
        return EvalSummary(0, None, None, None, None)
    world = resolve_level(level) if level is not None else None
    learner, run, world = load_learner(checkpoint, world)
    res = np.array(greedy_fraction(world, learner, run.agent_cfg, episodes), dtype=np.float64)
    return EvalSummary(episodes, float(res[:, 0].mean()), float(res[:, 0].std()),
                       float(res[:, 1].mean()), float(res[:, 1].std()))
