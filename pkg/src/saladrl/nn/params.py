"""Named parameters, gradient accumulators and the Adam optimizer."""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_VERSION = 1


class NonFiniteError(FloatingPointError):
    """A NaN or infinity showed up where only finite numbers are allowed."""


def check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
        raise NonFiniteError(f"{name}: {bad} non-finite entries")


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


class ParamStore:
    """Parameters plus matching gradient buffers.

    Layers read parameters with ``store[name]`` and add into ``store.grad[name]``.
    Nothing outside :func:`adam_step` (or an explicit :meth:`load_values`) ever
    writes parameter values.
    """

    def __init__(self, dtype=np.float64):
        self.dtype = dtype
        self.values: dict[str, np.ndarray] = {}
        self.grad: dict[str, np.ndarray] = {}
        self.adam = AdamState()

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.values:
            raise KeyError(f"parameter {name!r} already exists")
        value = np.ascontiguousarray(value, dtype=self.dtype)
        self.values[name] = value
        self.grad[name] = np.zeros_like(value)
        return value

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def names(self) -> list[str]:
        return list(self.values)

    def zero_grad(self) -> None:
        for g in self.grad.values():
            g.fill(0.0)

    def num_params(self) -> int:
        return sum(v.size for v in self.values.values())

    def copy(self) -> "ParamStore":
        """Deep copy of the values (gradients zeroed, optimizer state dropped)."""
        out = ParamStore(self.dtype)
        for k, v in self.values.items():
            out.add(k, v.copy())
        return out

    def load_values(self, other: "ParamStore | dict[str, np.ndarray]") -> None:
        src = other.values if isinstance(other, ParamStore) else other
        for k, v in self.values.items():
            if src[k].shape != v.shape:
                raise ValueError(f"{k}: shape {src[k].shape} does not match {v.shape}")
            v[...] = src[k]


def adam_step(store: ParamStore, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, names=None) -> None:
    """One bias-corrected Adam update using the accumulated gradients."""
    names = store.names() if names is None else list(names)
    for k in names:
        check_finite(f"gradient of {k}", store.grad[k])
    st = store.adam
    st.t += 1
    bc1 = 1.0 - beta1 ** st.t
    bc2 = 1.0 - beta2 ** st.t
    for k in names:
        g = store.grad[k]
        if k not in st.m:
            st.m[k] = np.zeros_like(g)
            st.v[k] = np.zeros_like(g)
        m, v = st.m[k], st.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        store.values[k] -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------------------
# checkpoint files: a zip archive with header.json plus one .npy per tensor


def save_params(path: str | Path, stores: dict[str, ParamStore], meta: dict | None = None) -> None:
    tensors = {}
    header = {"format": "saladrl-params", "version": CHECKPOINT_VERSION, "meta": meta or {}, "tensors": []}
    for group, store in stores.items():
        for name, val in store.values.items():
            key = f"{group}/{name}"
            tensors[key] = val
            header["tensors"].append({"name": key, "shape": list(val.shape), "dtype": str(val.dtype)})
        if store.adam.t:
            header.setdefault("adam_t", {})[group] = store.adam.t
            for name in store.adam.m:
                tensors[f"{group}/{name}@m"] = store.adam.m[name]
                tensors[f"{group}/{name}@v"] = store.adam.v[name]
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("header.json", json.dumps(header, indent=1, sort_keys=True))
        for key, val in tensors.items():
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(val), allow_pickle=False)
            zf.writestr(f"tensors/{key}.npy", buf.getvalue())


def read_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with zipfile.ZipFile(path) as zf:
        header = json.loads(zf.read("header.json"))
        if header.get("format") != "saladrl-params":
            raise ValueError(f"{path}: not a parameter checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')!r}")
        tensors = {}
        for info in zf.infolist():
            if info.filename.startswith("tensors/"):
                key = info.filename[len("tensors/"):-len(".npy")]
                tensors[key] = np.load(io.BytesIO(zf.read(info)), allow_pickle=False)
    return header, tensors


def load_params(path: str | Path, stores: dict[str, ParamStore]) -> dict:
    """Fill ``stores`` in place from a checkpoint; returns the header's meta."""
    header, tensors = read_checkpoint(path)
    for group, store in stores.items():
        store.load_values({n: tensors[f"{group}/{n}"] for n in store.names()})
        t = header.get("adam_t", {}).get(group, 0)
        store.adam = AdamState(t=t)
        if t:
            for n in store.names():
                if f"{group}/{n}@m" in tensors:
                    store.adam.m[n] = tensors[f"{group}/{n}@m"].copy()
                    store.adam.v[n] = tensors[f"{group}/{n}@v"].copy()
    return header["meta"]
