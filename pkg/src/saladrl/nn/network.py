"""The score-contextualised recurrent Q-network.

Pieces and their names:

* ``Phi_R``: word embedding followed by an LSTM over the tokens of a text;
  the final hidden state is the sentence vector (zero for an empty text).
  The same encoder embeds feedback and action text.
* ``H(k)``: K context LSTMs that share one hidden state; step t runs the
  cell of head k_t on ``[Phi_R(o_t); Phi_R(a_{t-1})]``.
* ``Phi_A(k)``: per-head scorer, 512 -> 128 -> |A| Q-values.
* ``Phi_C``: admissibility classifier with the same shape, sigmoid outputs.
"""
from __future__ import annotations

import re
from dataclasses import asdict, dataclass

import numpy as np

from .layers import LSTM, MLP, Embedding, sigmoid
from .params import ParamStore


@dataclass(frozen=True)
class ArchitectureConfig:
    vocab_size: int
    action_count: int
    heads: int = 5
    embedding_dim: int = 20
    encoder_hidden: int = 64
    context_hidden: int = 512
    scorer_hidden: int = 128

    def __post_init__(self):
        for k, v in asdict(self).items():
            if int(v) <= 0:
                raise ValueError(f"{k} must be positive, got {v}")

    def to_dict(self) -> dict:
        return asdict(self)


class Vocabulary:
    """Closed word list; unknown words are an error, not an <unk> token."""

    def __init__(self, words):
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self) -> int:
        return len(self.words)

    def encode(self, text: str) -> tuple[int, ...]:
        out = []
        for tok in re.findall(r"[a-z0-9]+", text.lower()):
            if tok not in self.index:
                raise KeyError(f"word {tok!r} is not in the vocabulary")
            out.append(self.index[tok])
        return tuple(out)


class TextEncoder:
    def __init__(self, store, cfg: ArchitectureConfig, rng):
        self.embed = Embedding(store, "phi_r.embed", cfg.vocab_size, cfg.embedding_dim, rng)
        self.lstm = LSTM(store, "phi_r.lstm", cfg.embedding_dim, cfg.encoder_hidden, rng)
        self.dim = cfg.encoder_hidden

    def forward(self, texts: list[tuple[int, ...]]):
        """Encode each token tuple to a vector: returns ([U, dim], cache)."""
        U = len(texts)
        T = max((len(t) for t in texts), default=0)
        if T == 0:
            return np.zeros((U, self.dim)), None
        ids = np.zeros((T, U), dtype=np.int64)
        mask = np.zeros((T, U))
        for u, toks in enumerate(texts):
            ids[:len(toks), u] = toks
            mask[:len(toks), u] = 1.0
        emb, ids = self.embed.forward(ids)
        hs, (hT, _), lcache = self.lstm.forward(emb, mask=mask)
        return hT, (ids, mask, lcache, T, U)

    def backward(self, cache, dout):
        if cache is None:
            return
        ids, mask, lcache, T, U = cache
        demb, _, _ = self.lstm.backward(lcache, np.zeros((T, U, self.dim)), dhT=dout)
        demb *= mask[:, :, None]  # padded tokens contribute nothing
        self.embed.backward(ids, demb)


class QNetwork:
    def __init__(self, cfg: ArchitectureConfig, seed: int = 0, store: ParamStore | None = None):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.store = ParamStore() if store is None else store
        self.encoder = TextEncoder(self.store, cfg, rng)
        self.context = LSTM(self.store, "context", 2 * cfg.encoder_hidden, cfg.context_hidden, rng, heads=cfg.heads)
        self.scorer = MLP(self.store, "phi_a", cfg.context_hidden, cfg.scorer_hidden, cfg.action_count, rng,
                          heads=cfg.heads)
        self.classifier = MLP(self.store, "phi_c", cfg.context_hidden, cfg.scorer_hidden, cfg.action_count, rng)

    def clone(self) -> "QNetwork":
        """Independent copy with identical parameter values (used for the target network)."""
        other = QNetwork(self.cfg, seed=0)
        other.store.load_values(self.store)
        return other

    def forward(self, obs, prev_actions, heads, mask=None, h0=None, c0=None):
        """Run a batch of sequences.

        ``obs[b][t]`` and ``prev_actions[b][t]`` are token tuples, ``heads`` is
        ``[T, B]``, ``mask`` marks real steps.  Returns Q ``[T, B, A]``,
        classifier logits ``[T, B, A]``, the final (h, c) and a cache.
        """
        B = len(obs)
        T = len(obs[0]) if B else 0
        table: dict[tuple[int, ...], int] = {}
        o_idx = np.empty((T, B), dtype=np.int64)
        a_idx = np.empty((T, B), dtype=np.int64)
        for b in range(B):
            for t in range(T):
                o_idx[t, b] = table.setdefault(tuple(obs[b][t]), len(table))
                a_idx[t, b] = table.setdefault(tuple(prev_actions[b][t]), len(table))
        texts = list(table)
        vecs, enc_cache = self.encoder.forward(texts)
        x = np.concatenate([vecs[o_idx], vecs[a_idx]], axis=2)
        hs, (hT, cT), ctx_cache = self.context.forward(x, heads, mask, h0, c0)
        flat = hs.reshape(T * B, -1)
        q, q_cache = self.scorer.forward(flat, np.asarray(heads).reshape(-1))
        logits, c_cache = self.classifier.forward(flat)
        A = self.cfg.action_count
        cache = (len(texts), o_idx, a_idx, enc_cache, ctx_cache, q_cache, c_cache, T, B)
        return q.reshape(T, B, A), logits.reshape(T, B, A), (hT, cT), cache

    def backward(self, cache, dq, dlogits):
        n_texts, o_idx, a_idx, enc_cache, ctx_cache, q_cache, c_cache, T, B = cache
        A = self.cfg.action_count
        dflat = self.scorer.backward(q_cache, dq.reshape(T * B, A))
        dflat += self.classifier.backward(c_cache, dlogits.reshape(T * B, A))
        dx, _, _ = self.context.backward(ctx_cache, dflat.reshape(T, B, -1))
        E = self.cfg.encoder_hidden
        dvecs = np.zeros((n_texts, E))
        np.add.at(dvecs, o_idx.reshape(-1), dx[:, :, :E].reshape(-1, E))
        np.add.at(dvecs, a_idx.reshape(-1), dx[:, :, E:].reshape(-1, E))
        self.encoder.backward(enc_cache, dvecs)

    def step(self, obs, prev_action, head: int, state=None):
        """Single-step inference: returns (q [A], xi_hat [A], new (h, c))."""
        h0, c0 = (None, None) if state is None else state
        q, logits, hc, _ = self.forward([[obs]], [[prev_action]], np.array([[head]]), None, h0, c0)
        return q[0, 0], sigmoid(np.clip(logits[0, 0], -15, 15)), hc
