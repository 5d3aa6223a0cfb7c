"""Run configuration: what to train, for how long, and where to write it."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from ..agents.config import AgentConfig
from ..agents.gating import GATINGS

AGENTS = ("recurrent", "window", "memoryless", "li")


@dataclass
class RunConfig:
    level: int | str = 1           # level number or path to a level file
    agent: str = "recurrent"
    seeds: list[int] = field(default_factory=lambda: [0])
    steps: int = 100_000           # G_max
    oracle_gating: bool = False
    out: str = "runs/default"
    eval_episodes: int = 1
    save_checkpoint: bool = True
    agent_cfg: AgentConfig = field(default_factory=AgentConfig)

    def __post_init__(self):
        if isinstance(self.agent_cfg, dict):
            self.agent_cfg = AgentConfig.from_dict(self.agent_cfg)
        if self.agent not in AGENTS:
            raise ValueError(f"unknown agent {self.agent!r}; choose from {', '.join(AGENTS)}")
        if self.agent_cfg.gating not in GATINGS:
            raise ValueError(f"unknown gating {self.agent_cfg.gating!r}")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if isinstance(self.level, int) and not 1 <= self.level <= 7:
            raise ValueError("level must be in 1..7 or a path to a level file")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["agent_cfg"] = {k: v for k, v in d["agent_cfg"].items() if v is not None}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown run settings: {', '.join(sorted(unknown))}")
        data = dict(data)
        if "agent_cfg" in data:
            data["agent_cfg"] = AgentConfig.from_dict(data["agent_cfg"])
        return cls(**data)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_dict(tomli.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))
