"""A logistic admissibility classifier over hashed history features.

For every action ``a`` the model predicts ``xi(h, a) = sigmoid(w_a . phi(h) + b_a)``.
It learns from bandit feedback: after executing ``a`` only row ``a`` is
updated with the observed admissibility bit.
"""
from __future__ import annotations

import zlib

import numpy as np

from ..nn.layers import LOGIT_CLAMP, sigmoid


def _h(text: str, dim: int) -> int:
    return zlib.crc32(text.encode("utf-8")) % dim


class HistoryFeatures:
    """Sparse features of the episode so far, built from feedback text only.

    Tracked: tokens of the latest feedback, the latest room description, the
    latest feedback of a state-changing action that was not a move, and the
    pair of the last two.  Room descriptions are recognised by their
    ``-= name =-`` banner.
    """

    def __init__(self, dim: int = 1 << 12):
        self.dim = dim

    def reset(self, feedback: str) -> None:
        self.last = feedback
        self.room = feedback if feedback.startswith("-=") else ""
        self.event = ""

    def observe(self, feedback: str, admissible: int) -> None:
        self.last = feedback
        if feedback.startswith("-="):
            self.room = _strip_score(feedback)
        elif admissible:
            self.event = _strip_score(feedback)

    def features(self) -> np.ndarray:
        d = self.dim
        feats = {_h("bias", d), _h("room=" + self.room, d), _h("event=" + self.event, d),
                 _h("pair=" + self.room + "|" + self.event, d)}
        feats.update(_h("tok=" + t, d) for t in self.last.lower().split())
        return np.fromiter(sorted(feats), dtype=np.int64)


def _strip_score(text: str) -> str:
    cut = text.find(" Your score has just")
    return text if cut < 0 else text[:cut]


class LogisticAdmissibility:
    def __init__(self, n_actions: int, dim: int = 1 << 12, lr: float = 0.5):
        self.n_actions = n_actions
        self.dim = dim
        self.lr = lr
        self.W = np.zeros((n_actions, dim))
        self.b = np.zeros(n_actions)

    def logits(self, feats: np.ndarray) -> np.ndarray:
        return self.W[:, feats].sum(axis=1) + self.b

    def predict(self, feats: np.ndarray) -> np.ndarray:
        return sigmoid(np.clip(self.logits(feats), -LOGIT_CLAMP, LOGIT_CLAMP))

    def update(self, feats: np.ndarray, action: int, e: int) -> float:
        """One SGD step on the executed action's BCE; returns the new estimate."""
        z = self.W[action, feats].sum() + self.b[action]
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -LOGIT_CLAMP, LOGIT_CLAMP)))
        g = p - e
        step = self.lr * g / np.sqrt(len(feats))
        self.W[action, feats] -= step
        self.b[action] -= step
        z = self.W[action, feats].sum() + self.b[action]
        return float(1.0 / (1.0 + np.exp(-np.clip(z, -LOGIT_CLAMP, LOGIT_CLAMP))))

    def state_dict(self) -> dict:
        nz = np.nonzero(self.W)
        return {"n_actions": self.n_actions, "dim": self.dim, "lr": self.lr, "b": self.b.tolist(),
                "rows": nz[0].tolist(), "cols": nz[1].tolist(), "vals": self.W[nz].tolist()}

    @classmethod
    def from_state_dict(cls, data: dict) -> "LogisticAdmissibility":
        out = cls(data["n_actions"], data["dim"], data["lr"])
        out.b[:] = data["b"]
        out.W[data["rows"], data["cols"]] = data["vals"]
        return out
