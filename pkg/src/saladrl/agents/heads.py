from __future__ import annotations


class ScoreHeadMap:
    """Map cumulative scores to value heads, round-robin in order of first appearance.

    The first score ever seen gets head 0, the next new score head 1, and so
    on modulo K.  A score never changes head once assigned.
    """

    def __init__(self, heads: int, table: dict[int, int] | None = None):
        if heads < 1:
            raise ValueError("need at least one head")
        self.heads = heads
        self.table: dict[int, int] = {}
        for score, head in (table or {}).items():
            if not 0 <= head < heads:
                raise ValueError(f"head {head} out of range for K={heads}")
            self.table[int(score)] = int(head)

    def __call__(self, score: int) -> int:
        score = int(score)
        head = self.table.get(score)
        if head is None:
            head = len(self.table) % self.heads
            self.table[score] = head
        return head

    def peek(self, score: int) -> int | None:
        return self.table.get(int(score))

    def heads_used(self) -> set[int]:
        return set(self.table.values())

    def to_dict(self) -> dict:
        return {"heads": self.heads, "table": [[s, h] for s, h in self.table.items()]}

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreHeadMap":
        return cls(data["heads"], {s: h for s, h in data["table"]})
