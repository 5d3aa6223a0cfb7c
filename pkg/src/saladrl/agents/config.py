from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass
class AgentConfig:
    gamma: float = 0.9
    lr: float = 0.001
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_anneal_steps: int = 1_000_000
    heads: int = 5
    gating: str = "none"
    mask_threshold: float = 0.001
    softness: float = 0.0
    encoder: str = "recurrent"
    window: int = 3
    seq_len: int = 15            # l
    min_history: int = 6         # n
    target_sync: int = 1000      # I_update, in environment steps
    look_every: int = 20         # I_look
    episode_cap: int | None = None   # T; None means 100 on level 1, 200 elsewhere
    batch_size: int = 32
    update_every: int = 4
    replay_capacity: int = 5000
    tau_p: float = 0.25
    tau_n: float = 0.25
    tabular_lr: float = 0.5
    classifier: bool = True
    train_forced_look: bool = False
    cqlh_variant: str = "next"   # "next": bootstrap Q(h_{t+1}, a_t); "current": Q(h_t, a_t)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.heads < 1:
            raise ValueError("heads must be at least 1")
        if self.min_history < 1 or self.min_history > self.seq_len:
            raise ValueError("need 1 <= min_history <= seq_len")
        if self.tau_p < 0 or self.tau_n < 0 or self.tau_p + self.tau_n > 1:
            raise ValueError("tau_p and tau_n must be non-negative with tau_p + tau_n <= 1")
        if self.cqlh_variant not in ("next", "current"):
            raise ValueError("cqlh_variant is 'next' or 'current'")

    def cap_for(self, level: int) -> int:
        if self.episode_cap is not None:
            return self.episode_cap
        return 100 if level == 1 else 200

    def epsilon(self, step: int) -> float:
        """Linear anneal from eps_start to eps_end, flat afterwards."""
        if self.eps_anneal_steps <= 0 or step >= self.eps_anneal_steps:
            return self.eps_end
        frac = step / self.eps_anneal_steps
        return self.eps_start + frac * (self.eps_end - self.eps_start)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown agent settings: {', '.join(sorted(unknown))}")
        return cls(**data)
