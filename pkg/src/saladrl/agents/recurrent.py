"""The recurrent learner trained from replayed episode windows.

Acting runs the online network one step at a time, carrying the context
LSTM state through the episode.  Training unrolls both the online and the
target network over sampled windows starting from a zero state and applies
the squared TD loss (plus the classifier's cross entropy) to every step from
the ``min_history``-th onwards.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..nn import ArchitectureConfig, QNetwork, Vocabulary, adam_step, bce_with_logits
from ..nn.layers import sigmoid
from ..nn.params import NonFiniteError
from ..replay import Subsequence
from .config import AgentConfig
from .gating import GatingScheme, gate, select_action
from .heads import ScoreHeadMap
from .updates import td_target

log = logging.getLogger(__name__)


@dataclass
class Batch:
    """Padded arrays for a minibatch of windows; time is the leading axis."""

    obs: list              # [B][L+1] token tuples
    prev: list             # [B][L+1] token tuples of the previous action
    heads: np.ndarray      # [L+1, B]
    actions: np.ndarray    # [L, B]
    rewards: np.ndarray    # [L, B]
    admissible: np.ndarray  # [L, B]
    terminal: np.ndarray   # [L, B]
    step_mask: np.ndarray  # [L+1, B] 1 on real inputs
    loss_mask: np.ndarray  # [L, B] 1 where the TD loss applies
    clf_mask: np.ndarray   # [L, B] 1 where the classifier loss applies

    @property
    def size(self) -> int:
        return self.actions.shape[1]


class RecurrentAgent:
    def __init__(self, vocab: Vocabulary, action_texts: list[str], config: AgentConfig, seed: int = 0,
                 arch: ArchitectureConfig | None = None):
        self.cfg = config
        self.vocab = vocab
        self.n_actions = len(action_texts)
        self.action_tokens = [vocab.encode(t) for t in action_texts]
        self.arch = arch or ArchitectureConfig(len(vocab), self.n_actions, heads=config.heads)
        if self.arch.action_count != self.n_actions or self.arch.heads != config.heads:
            raise ValueError("architecture does not match the action set or head count")
        self.net = QNetwork(self.arch, seed=seed)
        self.target = self.net.clone()
        self.j_map = ScoreHeadMap(config.heads)
        self.scheme = GatingScheme(config.gating, config.mask_threshold, config.softness)
        self.rng = np.random.default_rng(seed + 7919)
        self.updates = 0
        self.begin_episode()

    # ------------------------------------------------------------------ acting
    def begin_episode(self) -> None:
        self._hc = None
        self._prev = ()

    def observe_and_score(self, obs_tokens, score: int):
        """Advance the context state on the new observation; returns (q, xi_hat)."""
        head = self.j_map(score)
        q, xi, self._hc = self.net.step(obs_tokens, self._prev, head, self._hc)
        return q, xi

    def act(self, obs_tokens, score: int, epsilon: float, allowed: np.ndarray | None = None,
            forced: int | None = None) -> int:
        """Choose an action (or take ``forced``) and remember it as the previous action.

        ``allowed`` replaces the gated set, which is how oracle gating is applied.
        """
        q, xi = self.observe_and_score(obs_tokens, score)
        if forced is not None:
            action = forced
        else:
            if allowed is None:
                allowed = gate(xi, self.scheme, self.rng)
            action = select_action(q, allowed, epsilon, self.rng)
        self._prev = self.action_tokens[action]
        return action

    def sync_target(self) -> None:
        self.target.store.load_values(self.net.store)

    # ---------------------------------------------------------------- training
    def make_batch(self, windows: list[Subsequence]) -> Batch | None:
        n = self.cfg.min_history
        keep = [w for w in windows if w.length >= n + 1]
        if len(keep) < len(windows):
            log.warning("skipped %d windows shorter than %d steps", len(windows) - len(keep), n + 1)
        if not keep:
            return None
        B = len(keep)
        L = max(w.length for w in keep)
        heads = np.zeros((L + 1, B), dtype=np.int64)
        actions = np.zeros((L, B), dtype=np.int64)
        rewards = np.zeros((L, B))
        adm = np.zeros((L, B))
        term = np.zeros((L, B))
        step_mask = np.zeros((L + 1, B))
        loss_mask = np.zeros((L, B))
        clf_mask = np.zeros((L, B))
        obs, prev = [], []
        for b, w in enumerate(keep):
            ep, s, m = w.episode, w.start, w.length
            o_b, p_b = [], []
            for t in range(L + 1):
                i = s + min(t, m)
                o_b.append(ep.obs[i])
                p_b.append(self.action_tokens[ep.actions[i - 1]] if i > 0 else ())
                heads[t, b] = self.j_map(ep.score_before(i))
            obs.append(o_b)
            prev.append(p_b)
            step_mask[:m + 1, b] = 1.0
            actions[:m, b] = ep.actions[s:s + m]
            rewards[:m, b] = ep.rewards[s:s + m]
            adm[:m, b] = ep.admissible[s:s + m]
            term[:m, b] = w.terminal_flags()
            loss_mask[n - 1:m, b] = 1.0
            forced = np.asarray(ep.forced[s:s + m], dtype=bool)
            clf_mask[:m, b] = loss_mask[:m, b] * (1.0 if self.cfg.train_forced_look else ~forced)
        return Batch(obs, prev, heads, actions, rewards, adm, term, step_mask, loss_mask, clf_mask)

    def compute_targets(self, batch: Batch, oracle: bool = False) -> np.ndarray:
        """Bootstrap targets y [L, B] from the frozen target network.

        With ``oracle`` the recorded admissibility bits stand in for the
        target network's classifier in the consistent backups.
        """
        L, B = batch.actions.shape
        q, logits, _, _ = self.target.forward(batch.obs, batch.prev, batch.heads, batch.step_mask)
        cols = np.arange(B)
        rows = np.arange(L)[:, None]
        q_next = q[1:]
        q_next_max = q_next.max(axis=2)
        q_next_same = q_next[rows, cols, batch.actions]
        if oracle:
            xi = batch.admissible
        else:
            xi = sigmoid(np.clip(logits[:-1][rows, cols, batch.actions], -15, 15))
        q_cur = q[:-1][rows, cols, batch.actions] if self.cfg.cqlh_variant == "current" else None
        return td_target(self.scheme.update_rule, batch.rewards, self.cfg.gamma, batch.terminal,
                         q_next_max, q_next_same, xi, q_cur)

    def loss_and_grad(self, batch: Batch, targets: np.ndarray):
        """Loss of the online network on ``batch``; gradients are left in the store."""
        L, B = batch.actions.shape
        obs = [o[:L] for o in batch.obs]
        prev = [p[:L] for p in batch.prev]
        q, logits, _, cache = self.net.forward(obs, prev, batch.heads[:L], batch.step_mask[:L])
        rows = np.arange(L)[:, None]
        cols = np.arange(B)
        q_sa = q[rows, cols, batch.actions]
        err = (q_sa - targets) * batch.loss_mask
        td_loss = float((err ** 2).sum() / B)
        dq = np.zeros_like(q)
        dq[rows, cols, batch.actions] = 2.0 * err / B
        dlog = np.zeros_like(logits)
        bce = 0.0
        if self.cfg.classifier:
            lvals, lgrad = bce_with_logits(logits[rows, cols, batch.actions], batch.admissible)
            bce = float((lvals * batch.clf_mask).sum() / B)
            dlog[rows, cols, batch.actions] = lgrad * batch.clf_mask / B
        total = td_loss + bce
        if not np.isfinite(total):
            raise NonFiniteError(f"non-finite loss (td={td_loss}, bce={bce}) after {self.updates} updates")
        self.net.store.zero_grad()
        self.net.backward(cache, dq, dlog)
        return {"loss": total, "td": td_loss, "bce": bce}

    def train_step(self, windows: list[Subsequence], oracle: bool = False) -> dict | None:
        batch = self.make_batch(windows)
        if batch is None:
            return None
        targets = self.compute_targets(batch, oracle)
        out = self.loss_and_grad(batch, targets)
        adam_step(self.net.store, lr=self.cfg.lr)
        self.updates += 1
        return out
