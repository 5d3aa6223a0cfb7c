"""Agent checkpoints.

Recurrent agents use the parameter archive from :mod:`saladrl.nn.params`
with the run config, architecture and score-to-head table in its header.
Tabular agents use a zip holding ``header.json`` and ``tabular.json``.
"""
from __future__ import annotations

import json
import zipfile
from pathlib import Path

from ..agents import LogisticAdmissibility, ScoreHeadMap
from ..nn import ArchitectureConfig, load_params, save_params
from ..nn.params import read_checkpoint
from .config import RunConfig

TABULAR_VERSION = 1


def save_learner(path: str | Path, learner, run: RunConfig) -> None:
    from .train import RecurrentLearner

    if isinstance(learner, RecurrentLearner):
        agent = learner.agent
        meta = {"kind": "recurrent", "run": run.to_dict(), "arch": agent.arch.to_dict(),
                "j_map": agent.j_map.to_dict(), "updates": agent.updates}
        save_params(path, {"online": agent.net.store, "target": agent.target.store}, meta)
        return
    header = {"format": "saladrl-tabular", "version": TABULAR_VERSION, "run": run.to_dict(),
              "actions": learner.agent.n_actions}
    body = {"agent": learner.agent.state_dict(),
            "classifier": learner.classifier.state_dict() if learner.classifier is not None else None}
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("header.json", json.dumps(header, sort_keys=True))
        zf.writestr("tabular.json", json.dumps(body))


def load_learner(path: str | Path, world=None):
    """Rebuild the learner saved at ``path``. Returns (learner, run config, world)."""
    from .train import make_learner, resolve_level

    with zipfile.ZipFile(path) as zf:
        header = json.loads(zf.read("header.json"))
    if header.get("format") == "saladrl-tabular":
        if header.get("version") != TABULAR_VERSION:
            raise ValueError(f"{path}: unsupported tabular checkpoint version {header.get('version')!r}")
        run = RunConfig.from_dict(header["run"])
        world = world or resolve_level(run.level)
        if header["actions"] != len(world.action_set):
            raise ValueError(f"checkpoint scores {header['actions']} actions, level has {len(world.action_set)}")
        learner = make_learner(world, run, 0)
        with zipfile.ZipFile(path) as zf:
            body = json.loads(zf.read("tabular.json"))
        learner.agent.load_state_dict(body["agent"])
        if body["classifier"] is not None:
            learner.classifier = LogisticAdmissibility.from_state_dict(body["classifier"])
        return learner, run, world

    header, _ = read_checkpoint(path)
    meta = header["meta"]
    run = RunConfig.from_dict(meta["run"])
    world = world or resolve_level(run.level)
    arch = ArchitectureConfig(**meta["arch"])
    if arch.action_count != len(world.action_set):
        raise ValueError(f"checkpoint scores {arch.action_count} actions, level has {len(world.action_set)}")
    learner = make_learner(world, run, 0)
    agent = learner.agent
    load_params(path, {"online": agent.net.store, "target": agent.target.store})
    agent.j_map = ScoreHeadMap.from_dict(meta["j_map"])
    agent.updates = meta.get("updates", 0)
    return learner, run, world
