"""Layers with explicit forward/backward passes.

Each ``forward`` returns its output and a cache; ``backward`` takes the cache
and the upstream gradient, adds parameter gradients into the store and
returns the gradient with respect to the layer input.  Layers hold no
activations themselves, so several forward passes can be in flight at once.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .params import ParamStore, check_finite

LOGIT_CLAMP = 15.0


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def bce_with_logits(logits, targets):
    """Per-element binary cross entropy and its gradient w.r.t. the logits.

    Logits are clamped to ``[-15, 15]`` first, so the loss is always finite;
    the gradient is ``p - e`` inside the clamp range and zero outside it.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    z = np.clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP)
    p = sigmoid(z)
    # log(1 + exp(-|z|)) form avoids overflow
    loss = np.maximum(z, 0.0) - z * targets + np.log1p(np.exp(-np.abs(z)))
    grad = (p - targets) * (np.abs(logits) <= LOGIT_CLAMP)
    return loss, grad


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


class Embedding:
    def __init__(self, store: ParamStore, name: str, vocab: int, dim: int, rng: np.random.Generator):
        self.store, self.name, self.vocab, self.dim = store, name, vocab, dim
        store.add(name, rng.normal(0.0, 0.1, size=(vocab, dim)))

    def forward(self, ids):
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab):
            bad = ids[(ids < 0) | (ids >= self.vocab)][0]
            raise IndexError(f"token id {int(bad)} outside vocabulary of size {self.vocab}")
        return self.store[self.name][ids], ids

    def backward(self, ids, dout):
        np.add.at(self.store.grad[self.name], ids.reshape(-1), dout.reshape(-1, self.dim))


class LSTM:
    """K parallel LSTM cells sharing one hidden state.

    At each time step every batch row picks the cell given by its head index,
    so a sequence can switch heads while carrying (h, c) along.  With K = 1
    this is an ordinary LSTM.
    """

    def __init__(self, store: ParamStore, name: str, n_in: int, n_hidden: int, rng: np.random.Generator,
                 heads: int = 1):
        self.store, self.name = store, name
        self.n_in, self.n_hidden, self.heads = n_in, n_hidden, heads
        H = n_hidden
        W = glorot(rng, (heads, 4 * H, n_in + H), n_in + H, H)
        b = np.zeros((heads, 4 * H))
        b[:, H:2 * H] = 1.0  # forget-gate bias
        store.add(f"{name}.W", W)
        store.add(f"{name}.b", b)

    def forward(self, x, head=None, mask=None, h0=None, c0=None):
        """x: [T, B, D]; head: [T, B] ints; mask: [T, B] (1 = real step).

        Returns (hs [T, B, H], (hT, cT), cache).
        """
        T, B, D = x.shape
        if D != self.n_in:
            raise ValueError(f"{self.name}: input size {D}, expected {self.n_in}")
        H = self.n_hidden
        W, b = self.store[f"{self.name}.W"], self.store[f"{self.name}.b"]
        head = np.zeros((T, B), dtype=np.int64) if head is None else np.asarray(head, dtype=np.int64)
        mask = np.ones((T, B)) if mask is None else np.asarray(mask, dtype=np.float64)
        h = np.zeros((B, H)) if h0 is None else np.array(h0, dtype=np.float64)
        c = np.zeros((B, H)) if c0 is None else np.array(c0, dtype=np.float64)
        if h.shape != (B, H) or c.shape != (B, H):
            raise ValueError(f"{self.name}: initial state must be {(B, H)}")
        hs = np.empty((T, B, H))
        xh_all = np.empty((T, B, D + H))
        acts_all = np.empty((T, B, 4 * H))
        tc_all = np.empty((T, B, H))
        c_prev_all = np.empty((T, B, H))
        groups = []
        for t in range(T):
            xh = xh_all[t]
            xh[:, :D] = x[t]
            xh[:, D:] = h
            z = np.empty((B, 4 * H))
            g_t = self._groups(head[t])
            for k, rows in g_t:
                if rows is None:
                    np.matmul(xh, W[k].T, out=z)
                    z += b[k]
                else:
                    z[rows] = xh[rows] @ W[k].T + b[k]
            groups.append(g_t)
            c_prev_all[t] = c
            h, c, acts_all[t], tc_all[t] = kernels.gates_forward(z, h, c, np.ascontiguousarray(mask[t]))
            hs[t] = h
        cache = (xh_all, acts_all, tc_all, c_prev_all, mask, groups)
        return hs, (h, c), cache

    def _groups(self, head_t):
        if self.heads == 1:
            return [(0, None)]
        uniq = np.unique(head_t)
        if len(uniq) == 1:
            return [(int(uniq[0]), None)]
        return [(int(k), np.flatnonzero(head_t == k)) for k in uniq]

    def backward(self, cache, dhs, dhT=None, dcT=None):
        """Returns (dx [T, B, D], dh0, dc0)."""
        xh_all, acts_all, tc_all, c_prev_all, mask, groups = cache
        T, B, DH = xh_all.shape
        H = self.n_hidden
        D = DH - H
        W = self.store[f"{self.name}.W"]
        gW, gb = self.store.grad[f"{self.name}.W"], self.store.grad[f"{self.name}.b"]
        dh_next = np.zeros((B, H)) if dhT is None else np.array(dhT, dtype=np.float64)
        dc_next = np.zeros((B, H)) if dcT is None else np.array(dcT, dtype=np.float64)
        dx = np.empty((T, B, D))
        for t in range(T - 1, -1, -1):
            dh = dhs[t] + dh_next
            dz, dh_carry, dc_next = kernels.gates_backward(
                np.ascontiguousarray(dh), np.ascontiguousarray(dc_next), acts_all[t], tc_all[t],
                c_prev_all[t], np.ascontiguousarray(mask[t]))
            dxh = np.empty((B, DH))
            for k, rows in groups[t]:
                if rows is None:
                    gW[k] += dz.T @ xh_all[t]
                    gb[k] += dz.sum(axis=0)
                    np.matmul(dz, W[k], out=dxh)
                else:
                    dzr = dz[rows]
                    gW[k] += dzr.T @ xh_all[t][rows]
                    gb[k] += dzr.sum(axis=0)
                    dxh[rows] = dzr @ W[k]
            dx[t] = dxh[:, :D]
            dh_next = dxh[:, D:] + dh_carry
        return dx, dh_next, dc_next


class MLP:
    """Linear -> ReLU -> Linear, optionally with K independent heads selected per row."""

    def __init__(self, store: ParamStore, name: str, n_in: int, n_hidden: int, n_out: int,
                 rng: np.random.Generator, heads: int = 1):
        self.store, self.name, self.heads = store, name, heads
        self.n_in, self.n_hidden, self.n_out = n_in, n_hidden, n_out
        store.add(f"{name}.W1", glorot(rng, (heads, n_hidden, n_in), n_in, n_hidden))
        store.add(f"{name}.b1", np.zeros((heads, n_hidden)))
        store.add(f"{name}.W2", glorot(rng, (heads, n_out, n_hidden), n_hidden, n_out))
        store.add(f"{name}.b2", np.zeros((heads, n_out)))

    def forward(self, x, head=None):
        """x: [N, n_in], head: [N] ints -> ([N, n_out], cache)."""
        N = x.shape[0]
        if x.shape[1] != self.n_in:
            raise ValueError(f"{self.name}: input size {x.shape[1]}, expected {self.n_in}")
        s = self.store
        W1, b1, W2, b2 = (s[f"{self.name}.{p}"] for p in ("W1", "b1", "W2", "b2"))
        head = np.zeros(N, dtype=np.int64) if head is None else np.asarray(head, dtype=np.int64)
        pre = np.empty((N, self.n_hidden))
        out = np.empty((N, self.n_out))
        groups = [(int(k), np.flatnonzero(head == k)) for k in np.unique(head)] if N else []
        for k, rows in groups:
            pre[rows] = x[rows] @ W1[k].T + b1[k]
        act = np.maximum(pre, 0.0)
        for k, rows in groups:
            out[rows] = act[rows] @ W2[k].T + b2[k]
        return out, (x, pre, act, groups)

    def backward(self, cache, dout):
        x, pre, act, groups = cache
        s, n = self.store, self.name
        W1, W2 = s[f"{n}.W1"], s[f"{n}.W2"]
        dx = np.empty_like(x)
        dact = np.empty_like(act)
        for k, rows in groups:
            d = dout[rows]
            s.grad[f"{n}.W2"][k] += d.T @ act[rows]
            s.grad[f"{n}.b2"][k] += d.sum(axis=0)
            dact[rows] = d @ W2[k]
        dpre = dact * (pre > 0)
        for k, rows in groups:
            d = dpre[rows]
            s.grad[f"{n}.W1"][k] += d.T @ x[rows]
            s.grad[f"{n}.b1"][k] += d.sum(axis=0)
            dx[rows] = d @ W1[k]
        return dx


def assert_finite(name: str, arr) -> None:
    check_finite(name, np.asarray(arr))
