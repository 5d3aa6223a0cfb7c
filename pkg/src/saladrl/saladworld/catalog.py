"""Expected characteristics of the seven levels, transcribed from the benchmark tables.

This table is kept separate from the level files on purpose: the files are the
thing under test and the numbers below are the reference they are checked against.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class LevelCatalogEntry:
    level: int
    expected_rooms: int
    expected_objects: int
    expected_subtasks: int
    expected_action_count: int
    # every cumulative score the level can show during an episode
    expected_scores: tuple[int, ...]

    @property
    def max_score(self) -> int:
        return self.expected_scores[-1]


CATALOG: dict[int, LevelCatalogEntry] = {
    1: LevelCatalogEntry(1, 4, 2, 2, 8, (10, 15)),
    2: LevelCatalogEntry(2, 7, 4, 3, 15, (5, 10, 15, 20)),
    3: LevelCatalogEntry(3, 7, 4, 3, 15, (5, 10, 15, 20)),
    4: LevelCatalogEntry(4, 9, 8, 4, 50, (5, 10, 15, 20, 25)),
    5: LevelCatalogEntry(5, 11, 15, 5, 141, (5, 10, 15, 20, 25, 30)),
    6: LevelCatalogEntry(6, 12, 20, 6, 283, (5, 10, 15, 20, 25, 30, 35)),
    7: LevelCatalogEntry(7, 12, 20, 7, 295, (5, 10, 15, 20, 25, 30, 35, 40)),
}

LEVELS = tuple(CATALOG)
