"""Elementwise LSTM gate kernels.

The matrix products of the recurrent cell go through BLAS; what remains per
time step is a chain of sigmoid/tanh/multiply operations over ``[N, 4H]``
arrays.  Both implementations below compute exactly the same thing: the
numba versions fuse the chain into one pass, the numpy versions are the
reference and the fallback.

Gate layout inside the pre-activation ``z`` is ``[i | f | o | g]``.
A row with ``mask == 0`` is a padding step: its state is carried unchanged.
"""
from __future__ import annotations

import math

import numpy as np

from .backend import USE_NUMBA, njit


def gates_forward_numpy(z, h_prev, c_prev, mask):
    H = h_prev.shape[1]
    acts = np.empty_like(z)
    acts[:, :3 * H] = 1.0 / (1.0 + np.exp(-z[:, :3 * H]))
    acts[:, 3 * H:] = np.tanh(z[:, 3 * H:])
    i, f, o, g = acts[:, :H], acts[:, H:2 * H], acts[:, 2 * H:3 * H], acts[:, 3 * H:]
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    m = mask[:, None] > 0
    h = np.where(m, h, h_prev)
    c = np.where(m, c, c_prev)
    return h, c, acts, tc


def gates_backward_numpy(dh, dc, acts, tc, c_prev, mask):
    """Returns (dz, dh_carry, dc_prev).

    ``dh_carry`` is the part of dh that flows straight to h_prev through
    padding rows; the recurrent matmul contribution is added by the caller.
    """
    H = c_prev.shape[1]
    i, f, o, g = acts[:, :H], acts[:, H:2 * H], acts[:, 2 * H:3 * H], acts[:, 3 * H:]
    m = (mask[:, None] > 0).astype(dh.dtype)
    dcell = (dc + dh * o * (1.0 - tc * tc)) * m
    dz = np.empty_like(acts)
    dz[:, :H] = dcell * g * i * (1.0 - i)
    dz[:, H:2 * H] = dcell * c_prev * f * (1.0 - f)
    dz[:, 2 * H:3 * H] = dh * m * tc * o * (1.0 - o)
    dz[:, 3 * H:] = dcell * i * (1.0 - g * g)
    dh_carry = dh * (1.0 - m)
    dc_prev = dcell * f + dc * (1.0 - m)
    return dz, dh_carry, dc_prev


@njit
def _gates_forward_fused(z, h_prev, c_prev, mask):
    N, H = h_prev.shape
    acts = np.empty_like(z)
    h = np.empty_like(h_prev)
    c = np.empty_like(c_prev)
    tc = np.empty_like(c_prev)
    for n in range(N):
        for j in range(H):
            i = 1.0 / (1.0 + math.exp(-z[n, j]))
            f = 1.0 / (1.0 + math.exp(-z[n, H + j]))
            o = 1.0 / (1.0 + math.exp(-z[n, 2 * H + j]))
            g = math.tanh(z[n, 3 * H + j])
            acts[n, j] = i
            acts[n, H + j] = f
            acts[n, 2 * H + j] = o
            acts[n, 3 * H + j] = g
            cc = f * c_prev[n, j] + i * g
            t = math.tanh(cc)
            tc[n, j] = t
            if mask[n] > 0:
                c[n, j] = cc
                h[n, j] = o * t
            else:
                c[n, j] = c_prev[n, j]
                h[n, j] = h_prev[n, j]
    return h, c, acts, tc


@njit
def _gates_backward_fused(dh, dc, acts, tc, c_prev, mask):
    N, H = c_prev.shape
    dz = np.empty_like(acts)
    dh_carry = np.empty_like(dh)
    dc_prev = np.empty_like(dc)
    for n in range(N):
        live = mask[n] > 0
        for j in range(H):
            i = acts[n, j]
            f = acts[n, H + j]
            o = acts[n, 2 * H + j]
            g = acts[n, 3 * H + j]
            t = tc[n, j]
            if live:
                dcell = dc[n, j] + dh[n, j] * o * (1.0 - t * t)
                dz[n, j] = dcell * g * i * (1.0 - i)
                dz[n, H + j] = dcell * c_prev[n, j] * f * (1.0 - f)
                dz[n, 2 * H + j] = dh[n, j] * t * o * (1.0 - o)
                dz[n, 3 * H + j] = dcell * i * (1.0 - g * g)
                dh_carry[n, j] = 0.0
                dc_prev[n, j] = dcell * f
            else:
                dz[n, j] = 0.0
                dz[n, H + j] = 0.0
                dz[n, 2 * H + j] = 0.0
                dz[n, 3 * H + j] = 0.0
                dh_carry[n, j] = dh[n, j]
                dc_prev[n, j] = dc[n, j]
    return dz, dh_carry, dc_prev


# The fused forward spends its time in scalar exp/tanh calls, which numba
# does not vectorise without SVML; numpy's vectorised transcendentals beat it
# by about 2x (see benchmarks/bench_kernels.py).  The backward pass has no
# transcendentals and fusing it wins by about 5x, so only that one is swapped.
gates_forward = gates_forward_numpy
gates_backward = _gates_backward_fused if USE_NUMBA else gates_backward_numpy
