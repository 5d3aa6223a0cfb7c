"""History encoders for the tabular learners.

An encoder consumes the episode one step at a time and exposes a hashable
``key()`` that stands in for the state.  Only the LI encoder looks at the
hidden state, and only to produce the text that ``look`` and ``inventory``
would print there.
"""
from __future__ import annotations

from collections import deque

from ..engine import GameState, WorldSpec, describe_inventory, describe_room

ENCODERS = ("memoryless", "li", "window", "recurrent")


class MemorylessEncoder:
    """The latest feedback text is the whole state."""

    name = "memoryless"

    def reset(self, feedback: str, world: WorldSpec, state: GameState) -> None:
        self._key = feedback

    def observe(self, action: int, feedback: str, world: WorldSpec, state: GameState) -> None:
        self._key = feedback

    def key(self):
        return self._key


class LookInventoryEncoder:
    """State key is the text ``look`` plus ``inventory`` would print right now."""

    name = "li"

    def reset(self, feedback, world, state):
        self._key = describe_room(world, state) + " | " + describe_inventory(world, state)

    def observe(self, action, feedback, world, state):
        self.reset(feedback, world, state)

    def key(self):
        return self._key


class WindowEncoder:
    """The last ``m`` (action, feedback) pairs, oldest first."""

    name = "window"

    def __init__(self, m: int = 3):
        if m < 1:
            raise ValueError("window must hold at least one step")
        self.m = m

    def reset(self, feedback, world, state):
        self._buf = deque([(-1, feedback)], maxlen=self.m)

    def observe(self, action, feedback, world, state):
        self._buf.append((action, feedback))

    def key(self):
        return tuple(self._buf)


def make_encoder(name: str, window: int = 3):
    if name == "memoryless":
        return MemorylessEncoder()
    if name == "li":
        return LookInventoryEncoder()
    if name == "window":
        return WindowEncoder(window)
    raise ValueError(f"no tabular encoder called {name!r}; choose from memoryless, li, window")
