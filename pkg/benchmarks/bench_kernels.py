"""Compare the numba-fused LSTM gate kernels with the numpy fallback.

Usage:
    python benchmarks/bench_kernels.py            # kernel timings, both implementations
    python benchmarks/bench_kernels.py --layer    # also time a full LSTM forward+backward per backend

The ``--layer`` timing re-runs this script in subprocesses with
SALADRL_NUMBA=1 and SALADRL_NUMBA=0, since the backend is fixed at import.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def kernel_timings(n_rows, hidden, repeat):
    import numba

    from saladrl.nn import kernels

    rng = np.random.default_rng(0)
    z = rng.normal(size=(n_rows, 4 * hidden))
    h = rng.normal(size=(n_rows, hidden))
    c = rng.normal(size=(n_rows, hidden))
    mask = (rng.random(n_rows) > 0.1).astype(np.float64)
    dh = rng.normal(size=(n_rows, hidden))
    dc = rng.normal(size=(n_rows, hidden))

    fwd = getattr(kernels._gates_forward_fused, "py_func", kernels._gates_forward_fused)
    bwd = getattr(kernels._gates_backward_fused, "py_func", kernels._gates_backward_fused)
    fwd_nb, bwd_nb = numba.njit(fwd), numba.njit(bwd)

    _, _, acts, tc = kernels.gates_forward_numpy(z, h, c, mask)
    # warm-up compiles, and a sanity check that both agree
    ref = kernels.gates_forward_numpy(z, h, c, mask)
    got = fwd_nb(z, h, c, mask)
    assert all(np.allclose(a, b) for a, b in zip(ref, got))
    ref_b = kernels.gates_backward_numpy(dh, dc, acts, tc, c, mask)
    got_b = bwd_nb(dh, dc, acts, tc, c, mask)
    assert all(np.allclose(a, b) for a, b in zip(ref_b, got_b))

    out = {}
    for name, fn in (("forward numpy", lambda: kernels.gates_forward_numpy(z, h, c, mask)),
                     ("forward numba", lambda: fwd_nb(z, h, c, mask)),
                     ("backward numpy", lambda: kernels.gates_backward_numpy(dh, dc, acts, tc, c, mask)),
                     ("backward numba", lambda: bwd_nb(dh, dc, acts, tc, c, mask))):
        out[name] = min(timeit.repeat(fn, number=repeat, repeat=5)) / repeat
    return out


def layer_timing(T, B, n_in, hidden, heads, repeat):
    from saladrl.nn import LSTM, ParamStore, backend_name

    rng = np.random.default_rng(0)
    store = ParamStore()
    lstm = LSTM(store, "bench", n_in, hidden, rng, heads=heads)
    x = rng.normal(size=(T, B, n_in))
    head = rng.integers(heads, size=(T, B))
    dhs = rng.normal(size=(T, B, hidden))

    def run():
        _, _, cache = lstm.forward(x, head)
        lstm.backward(cache, dhs)

    run()
    return backend_name(), min(timeit.repeat(run, number=repeat, repeat=3)) / repeat


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=32)
    ap.add_argument("--hidden", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--layer", action="store_true")
    ap.add_argument("--layer-only", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.layer_only:
        name, secs = layer_timing(15, 32, 128, args.hidden, 5, 3)
        print(json.dumps({"backend": name, "seconds": secs}))
        return

    print(f"gate kernels, {args.rows} rows x {args.hidden} units")
    for name, secs in kernel_timings(args.rows, args.hidden, args.repeat).items():
        print(f"  {name:16s} {secs * 1e6:9.1f} us")

    if args.layer:
        print("K=5 context LSTM, T=15, B=32, 128 -> 512, forward + backward")
        for flag in ("1", "0"):
            env = dict(os.environ, SALADRL_NUMBA=flag)
            res = subprocess.run([sys.executable, __file__, "--layer-only", "--hidden", str(args.hidden)],
                                 env=env, capture_output=True, text=True, check=True)
            info = json.loads(res.stdout.strip().splitlines()[-1])
            print(f"  {info['backend']:6s} {info['seconds'] * 1e3:9.1f} ms")


if __name__ == "__main__":
    main()
