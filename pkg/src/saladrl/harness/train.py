"""The training driver: one seeded environment/learner loop per seed."""
from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np

from ..agents import (AgentConfig, ConstantEstimator, HistoryFeatures, LogisticAdmissibility, OracleEstimator,
                      RecurrentAgent, oracle_allowed, TabularAgent, make_encoder)
from ..engine import Command, WorldSpec, initial_feedback, initial_state, step
from ..nn import Vocabulary
from ..replay import EpisodeRecord, ReplayMemory
from ..saladworld import load_level, load_path
from .config import RunConfig
from .metrics import MetricsRow, MetricsWriter

log = logging.getLogger(__name__)


def resolve_level(level: int | str) -> WorldSpec:
    if isinstance(level, int) or (isinstance(level, str) and level.isdigit()):
        return load_level(int(level))
    return load_path(level)


def fraction_done(world: WorldSpec, state) -> float:
    return bin(state.subtask_done).count("1") / len(world.subtasks)


class TabularLearner:
    """Online one-step learner over a hashed history key."""

    def __init__(self, world: WorldSpec, run: RunConfig, rng: np.random.Generator):
        cfg = run.agent_cfg
        self.world, self.cfg = world, cfg
        self.agent = TabularAgent(len(world.action_set), cfg, rng)
        self.encoder = make_encoder(run.agent, cfg.window)
        self.oracle = OracleEstimator(world) if run.oracle_gating else None
        self.uses_classifier = self.oracle is None and cfg.gating != "none"
        self.classifier = LogisticAdmissibility(len(world.action_set)) if self.uses_classifier else None
        self.features = HistoryFeatures()
        self.ones = ConstantEstimator(len(world.action_set))
        self.learning = True

    def begin(self, feedback: str, state) -> None:
        self.encoder.reset(feedback, self.world, state)
        self.features.reset(feedback)

    def _xi(self, state):
        if self.oracle is not None:
            return self.oracle(state)
        if self.classifier is not None:
            self._feats = self.features.features()
            return self.classifier.predict(self._feats)
        return self.ones()

    def choose(self, state, score: int, epsilon: float, forced: int | None) -> int:
        self._key = self.encoder.key()
        self._score = score
        self._xi_now = self._xi(state)
        if forced is not None:
            return forced
        allowed = oracle_allowed(self._xi_now) if self.oracle is not None else None
        return self.agent.act(self._key, score, self._xi_now, epsilon, allowed)

    def learn(self, action: int, tr, forced: bool) -> None:
        self.encoder.observe(action, tr.feedback, self.world, tr.next_state)
        if not self.learning:
            self.features.observe(tr.feedback, tr.admissible)
            return
        self.agent.update(self._key, self._score, action, tr.reward, self.encoder.key(), tr.next_state.score,
                          tr.done, float(self._xi_now[action]))
        if self.classifier is not None and (not forced or self.cfg.train_forced_look):
            self.classifier.update(self._feats, action, tr.admissible)
        self.features.observe(tr.feedback, tr.admissible)

    def end_episode(self, global_step: int) -> None:
        pass

    def tick(self, global_step: int) -> None:
        pass


class RecurrentLearner:
    """Acts with the recurrent network and trains from replayed episode windows."""

    def __init__(self, world: WorldSpec, run: RunConfig, seed: int, rng: np.random.Generator):
        cfg = run.agent_cfg
        self.world, self.cfg, self.rng = world, cfg, rng
        self.vocab = Vocabulary(world.vocabulary())
        texts = [world.command_text(i) for i in range(len(world.action_set))]
        self.agent = RecurrentAgent(self.vocab, texts, cfg, seed=seed)
        self.oracle = OracleEstimator(world) if run.oracle_gating else None
        self.memory = ReplayMemory(cfg.replay_capacity, cfg.tau_p, cfg.tau_n, cfg.seq_len)
        self.episode: EpisodeRecord | None = None
        self.last_loss: dict | None = None

    def begin(self, feedback: str, state) -> None:
        self.agent.begin_episode()
        self._obs = self.vocab.encode(feedback)
        self.episode = EpisodeRecord(obs=[self._obs])

    def choose(self, state, score: int, epsilon: float, forced: int | None) -> int:
        allowed = oracle_allowed(self.oracle(state)) if self.oracle is not None else None
        return self.agent.act(self._obs, score, epsilon, allowed=allowed, forced=forced)

    def learn(self, action: int, tr, forced: bool) -> None:
        self._obs = self.vocab.encode(tr.feedback)
        self.episode.add(action, tr.reward, tr.admissible, self._obs, forced)
        if tr.done:
            self.episode.terminal = True

    def end_episode(self, global_step: int) -> None:
        self.memory.store_episode(self.episode)

    def tick(self, global_step: int) -> None:
        cfg = self.cfg
        if global_step % cfg.update_every == 0 and len(self.memory):
            batch = self.memory.sample_minibatch(cfg.batch_size, self.rng)
            out = self.agent.train_step(batch, oracle=self.oracle is not None)
            if out is not None:
                self.last_loss = out
        if global_step % cfg.target_sync == 0:
            self.agent.sync_target()


def make_learner(world: WorldSpec, run: RunConfig, seed: int):
    rng = np.random.default_rng(seed)
    if run.agent == "recurrent":
        return RecurrentLearner(world, run, seed, rng)
    return TabularLearner(world, run, rng)


def run_episode(world: WorldSpec, learner, cfg: AgentConfig, epsilon_at, global_step: int, budget: int,
                on_step=None):
    """Play one episode (or until the step budget runs out).

    ``epsilon_at(g)`` gives the exploration rate at global step ``g``.
    Returns (final state, steps taken, finished flag).
    """
    look = world.action_index(Command("look"))
    cap = cfg.cap_for(world.level)
    state = initial_state(world)
    learner.begin(initial_feedback(world, state), state)
    t = 0
    done = False
    while t < cap and not done and global_step < budget:
        forced = look if cfg.look_every and t % cfg.look_every == 0 else None
        action = learner.choose(state, state.score, epsilon_at(global_step), forced)
        tr = step(world, state, action)
        learner.learn(action, tr, forced is not None)
        state = tr.next_state
        done = tr.done
        t += 1
        global_step += 1
        if on_step is not None:
            on_step(global_step)
    return state, t, done


def train_seed(run: RunConfig, seed: int, out_dir: Path, world: WorldSpec | None = None):
    """Train one seed; writes metrics_seed<seed>.csv (and a checkpoint). Returns the learner."""
    from .checkpoint import save_learner

    world = world or resolve_level(run.level)
    cfg = run.agent_cfg
    learner = make_learner(world, run, seed)
    g = 0
    episode = 0
    t0 = time.monotonic()
    with MetricsWriter(out_dir / f"metrics_seed{seed}.csv") as writer:
        while g < run.steps:
            state, t, _ = run_episode(world, learner, cfg, cfg.epsilon, g, run.steps, learner.tick)
            g += t
            learner.end_episode(g)
            writer.write(MetricsRow(g, episode, state.score, fraction_done(world, state), cfg.epsilon(g), seed))
            episode += 1
    log.info("seed %d: %d steps, %d episodes in %.1fs", seed, g, episode, time.monotonic() - t0)
    if run.save_checkpoint:
        save_learner(out_dir / f"checkpoint_seed{seed}.zip", learner, run)
    return learner


def train(run: RunConfig) -> Path:
    """Train every seed in ``run`` and return the run directory."""
    world = resolve_level(run.level)  # validation happens before anything is written
    out = Path(run.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(run.dumps(), encoding="utf-8")
    handler = logging.FileHandler(out / "train.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("saladrl")
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    try:
        for seed in run.seeds:
            train_seed(run, seed, out, world)
    finally:
        root.removeHandler(handler)
        handler.close()
    return out


def greedy_fraction(world: WorldSpec, learner, cfg: AgentConfig, episodes: int = 1) -> list[tuple[float, int]]:
    """Greedy rollouts (epsilon 0, forced look kept); (fraction, score) per episode."""
    out = []
    was = getattr(learner, "learning", True)
    learner.learning = False
    for _ in range(episodes):
        state, _, _ = run_episode(world, learner, cfg, lambda g: 0.0, 0, 1 << 62)
        out.append((fraction_done(world, state), state.score))
    learner.learning = was
    return out
