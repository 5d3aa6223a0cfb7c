"""The SaladWorld levels: loading, validation and walkthroughs."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..engine import Command, WorldError, WorldSpec, initial_state, parse_command, step
from .catalog import CATALOG, LEVELS, LevelCatalogEntry
from .levelfile import load_path, parse, serialize

__all__ = ["CATALOG", "LEVELS", "LevelCatalogEntry", "load_level", "walkthrough", "walkthrough_text", "walkthrough_scores",
           "check_level", "parse", "serialize", "load_path", "level_text"]


def _check_range(n: int) -> None:
    if n not in CATALOG:
        raise ValueError(f"level must be in 1..{len(CATALOG)}, got {n!r}")


def level_text(n: int) -> str:
    _check_range(n)
    return resources.files(__package__).joinpath("levels", f"level{n}.toml").read_text(encoding="utf-8")


def check_level(world: WorldSpec, entry: LevelCatalogEntry) -> None:
    """Raise :class:`WorldError` listing every count that differs from the catalog."""
    actual = {
        "rooms": len(world.rooms),
        "objects": len(world.objects),
        "subtasks": len(world.subtasks),
        "actions": len(world.action_set),
        "max score": world.max_score,
    }
    expected = {
        "rooms": entry.expected_rooms,
        "objects": entry.expected_objects,
        "subtasks": entry.expected_subtasks,
        "actions": entry.expected_action_count,
        "max score": entry.max_score,
    }
    bad = [f"{k}: expected {expected[k]}, got {actual[k]}" for k in expected if expected[k] != actual[k]]
    if bad:
        raise WorldError(f"level {entry.level} does not match the catalog: " + "; ".join(bad))


@lru_cache(maxsize=None)
def load_level(n: int) -> WorldSpec:
    world = parse(level_text(n))
    check_level(world, CATALOG[n])
    return world


def walkthrough_text(n: int) -> list[str]:
    _check_range(n)
    raw = resources.files(__package__).joinpath("levels", f"level{n}.walk").read_text(encoding="utf-8")
    lines = (line.split("#", 1)[0].strip() for line in raw.splitlines())
    return [line for line in lines if line]


def walkthrough(n: int) -> list[Command]:
    world = load_level(n)
    return [parse_command(world, line) for line in walkthrough_text(n)]


def walkthrough_scores(n: int) -> list[int]:
    """Distinct cumulative scores seen while replaying the walkthrough."""
    world = load_level(n)
    state = initial_state(world)
    scores = []
    for cmd in walkthrough(n):
        tr = step(world, state, cmd)
        if tr.reward:
            scores.append(tr.next_state.score)
        state = tr.next_state
    return scores
