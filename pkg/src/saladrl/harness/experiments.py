"""Desk-scale experiments shared by the acceptance suite and the command line."""
from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agents import AgentConfig, HistoryFeatures, LogisticAdmissibility
from ..engine import admissible_indices, initial_feedback, initial_state, step
from ..saladworld import load_level
from .config import RunConfig
from .metrics import moving_average, read_metrics
from .train import greedy_fraction, resolve_level, train_seed


@dataclass
class SeedResult:
    seed: int
    final_smoothed: float   # moving average of training fractions at the last episode
    best_smoothed: float    # best moving average once a full window of steps has passed
    run_mean: float         # plain mean of every training episode's fraction
    greedy: float           # fraction of one greedy rollout after training


def desk_run(agent: str, level: int, steps: int, seed: int, oracle: bool, heads: int,
             gating: str = "none", window: int = 20_000) -> SeedResult:
    """Train one tabular/recurrent seed with epsilon annealed over the first half of ``steps``."""
    cfg = AgentConfig(heads=heads, gating=gating, eps_anneal_steps=max(1, steps // 2))
    run = RunConfig(level=level, agent=agent, seeds=[seed], steps=steps, oracle_gating=oracle,
                    agent_cfg=cfg, save_checkpoint=False)
    with tempfile.TemporaryDirectory() as tmp:
        learner = train_seed(run, seed, Path(tmp))
        m = read_metrics(Path(tmp) / f"metrics_seed{seed}.csv")
    smooth = moving_average(m["fraction"], window, m["step"])
    full = smooth[m["step"] >= min(window, steps)]
    greedy = greedy_fraction(resolve_level(level), learner, cfg)[0][0]
    return SeedResult(seed, float(smooth[-1]), float(full.max()), float(m["fraction"].mean()), float(greedy))


@dataclass
class ClassifierReport:
    train_samples: int
    test_samples: int
    balanced_accuracy: float
    accuracy: float
    eliminated_admissible: float  # share of truly admissible (state, action) pairs with xi < c


def random_policy_log(level: int, samples: int, rng: np.random.Generator, cap: int = 100):
    """Uniform-random play; one record (features, state, action, e) per step."""
    world = load_level(level)
    n_actions = len(world.action_set)
    feats, states, actions, labels = [], [], [], []
    featurizer = HistoryFeatures()
    while len(labels) < samples:
        state = initial_state(world)
        featurizer.reset(initial_feedback(world, state))
        for _ in range(cap):
            a = int(rng.integers(n_actions))
            tr = step(world, state, a)
            feats.append(featurizer.features())
            states.append(state)
            actions.append(a)
            labels.append(tr.admissible)
            featurizer.observe(tr.feedback, tr.admissible)
            state = tr.next_state
            if tr.done or len(labels) >= samples:
                break
    return world, feats, states, np.asarray(actions), np.asarray(labels)


def classifier_experiment(level: int = 1, samples: int = 50_000, seed: int = 0, epochs: int = 3,
                          threshold: float = 0.001, test_share: float = 0.2) -> ClassifierReport:
    rng = np.random.default_rng(seed)
    world, feats, states, actions, labels = random_policy_log(level, samples, rng)
    split = int(len(labels) * (1.0 - test_share))
    clf = LogisticAdmissibility(len(world.action_set))
    order = np.arange(split)
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            clf.update(feats[i], int(actions[i]), int(labels[i]))

    test = np.arange(split, len(labels))
    pred = np.array([clf.predict(feats[i])[actions[i]] >= 0.5 for i in test])
    truth = labels[test].astype(bool)
    recalls = [np.mean(pred[truth == cls] == cls) for cls in (True, False) if np.any(truth == cls)]

    eliminated = total = 0
    for i in test:
        adm = admissible_indices(world, states[i])
        if adm:
            xi = clf.predict(feats[i])
            eliminated += int(np.sum(xi[adm] < threshold))
            total += len(adm)
    return ClassifierReport(split, len(test), float(np.mean(recalls)), float(np.mean(pred == truth)),
                            eliminated / max(total, 1))
