"""Metrics rows, smoothing and multi-seed aggregation."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER = ("step", "episode", "score", "fraction", "epsilon", "seed")


@dataclass(frozen=True)
class MetricsRow:
    step: int
    episode: int
    score: int
    fraction: float
    epsilon: float
    seed: int

    def cells(self) -> list[str]:
        return [str(self.step), str(self.episode), str(self.score), f"{self.fraction:.6f}",
                f"{self.epsilon:.6f}", str(self.seed)]


class MetricsWriter:
    """Appends rows to a CSV, flushing after each one so partial runs stay readable."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(HEADER)
        self._last_step = -1

    def write(self, row: MetricsRow) -> None:
        if row.step <= self._last_step:
            raise ValueError("metrics rows must be strictly ordered by step")
        if not 0.0 <= row.fraction <= 1.0:
            raise ValueError(f"fraction {row.fraction} outside [0, 1]")
        self._last_step = row.step
        self._w.writerow(row.cells())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)
    cols = list(zip(*rows)) if rows else [[] for _ in HEADER]
    return {name: np.asarray(col, dtype=np.float64) for name, col in zip(HEADER, cols)}


def moving_average(values, window: int, steps=None) -> np.ndarray:
    """Trailing mean.

    Without ``steps`` the window counts entries.  With ``steps`` (same length,
    non-decreasing) entry i averages every value whose step lies in
    ``(steps[i] - window, steps[i]]``.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return v.copy()
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(1, v.size + 1)
    if steps is None:
        lo = np.maximum(idx - window, 0)
    else:
        s = np.asarray(steps, dtype=np.float64)
        lo = np.searchsorted(s, s - window, side="right")
    return (csum[idx] - csum[lo]) / (idx - lo)


def aggregate(paths, window: int = 20_000, grid: int = 1000) -> dict[str, np.ndarray]:
    """Smooth each seed's fraction curve and report mean and std across seeds.

    Curves are sampled every ``grid`` steps (the latest value at or before
    each grid point; 0 before a seed's first episode ends).
    """
    curves = []
    max_step = 0
    for p in paths:
        m = read_metrics(p)
        if m["step"].size:
            curves.append((m["step"], moving_average(m["fraction"], window, m["step"])))
            max_step = max(max_step, int(m["step"][-1]))
    points = np.arange(grid, max_step + grid, grid) if max_step else np.zeros(0)
    table = np.zeros((len(curves), points.size))
    for i, (steps, smooth) in enumerate(curves):
        pos = np.searchsorted(steps, points, side="right") - 1
        table[i] = np.where(pos >= 0, smooth[np.maximum(pos, 0)], 0.0)
    mean = table.mean(axis=0) if curves else np.zeros(points.size)
    std = table.std(axis=0) if curves else np.zeros(points.size)
    return {"step": points, "mean": mean, "std": std, "n_seeds": np.full(points.size, len(curves))}


def write_aggregate(result: dict[str, np.ndarray], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "mean_fraction", "std_fraction", "n_seeds"])
        for s, m, sd, n in zip(result["step"], result["mean"], result["std"], result["n_seeds"]):
            w.writerow([int(s), f"{m:.6f}", f"{sd:.6f}", int(n)])
