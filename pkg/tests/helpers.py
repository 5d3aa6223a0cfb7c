"""Shared test utilities."""
import numpy as np


def check_gradients(store, loss_fn, analytic, rng, max_entries=40, h=1e-6, rtol=1e-4, atol=1e-8):
    """Compare ``analytic[name]`` with central differences of ``loss_fn()``.

    At most ``max_entries`` randomly chosen entries per parameter are probed.
    Returns the largest share of the tolerance ``rtol * scale + atol`` used by
    any entry, so anything at or below 1.0 passed.
    """
    worst = 0.0
    for name, value in store.values.items():
        flat = value.reshape(-1)
        idx = np.arange(flat.size) if flat.size <= max_entries else rng.choice(flat.size, max_entries, False)
        grad = analytic[name].reshape(-1)
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            up = loss_fn()
            flat[i] = old - h
            down = loss_fn()
            flat[i] = old
            num = (up - down) / (2 * h)
            err = abs(num - grad[i])
            scale = max(abs(num), abs(grad[i]))
            assert err <= rtol * scale + atol, f"{name}[{i}]: analytic {grad[i]!r} numeric {num!r}"
            worst = max(worst, err / (rtol * scale + atol))
    return worst


def jitter(store, rng, scale=0.1):
    for v in store.values.values():
        v += rng.normal(0.0, scale, size=v.shape)


def grads_of(store):
    return {k: g.copy() for k, g in store.grad.items()}
