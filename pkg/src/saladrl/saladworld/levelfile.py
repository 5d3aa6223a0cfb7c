"""Reading and writing level files.

Level files are TOML.  The layout is documented in ``docs/level-format.md``;
:func:`serialize` writes the canonical form, so ``parse(serialize(w)) == w``.
"""
from __future__ import annotations

from pathlib import Path

import tomli
import tomli_w

from ..engine import (ActionTemplate, Door, Exit, GameObject, MealRule, Room, SubtaskSpec,
                      WorldError, WorldSpec)

FORMAT_VERSION = 1


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise WorldError(f"{where}: missing field {key!r}")
    return table[key]


def from_dict(data: dict) -> WorldSpec:
    level = _require(data, "level", "file")
    version = level.get("format", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise WorldError(f"unsupported level format {version!r}")

    rooms = []
    for rid, spec in _require(data, "rooms", "file").items():
        exits = []
        for direction, target in spec.get("exits", {}).items():
            if isinstance(target, str):
                exits.append(Exit(direction, target))
            else:
                exits.append(Exit(direction, _require(target, "to", f"rooms.{rid}.exits"), target.get("door")))
        rooms.append(Room(rid, spec.get("name", rid.replace("_", " ")), tuple(exits)))

    doors = tuple(
        Door(did, spec.get("name", did.replace("_", " ")), _require(spec, "key", f"doors.{did}"),
             bool(spec.get("closed", True)))
        for did, spec in data.get("doors", {}).items()
    )
    objects = tuple(
        GameObject(oid, spec.get("name", oid.replace("_", " ")), _require(spec, "kind", f"objects.{oid}"),
                   _require(spec, "location", f"objects.{oid}"), spec.get("role"), spec.get("key"),
                   bool(spec.get("sharp", False)))
        for oid, spec in data.get("objects", {}).items()
    )
    subtasks = tuple(
        SubtaskSpec(_require(s, "id", "subtasks"), int(_require(s, "points", "subtasks")),
                    tuple(tuple(c) for c in _require(s, "when", "subtasks")), s.get("description", ""))
        for s in data.get("subtasks", [])
    )
    templates = tuple(
        ActionTemplate(_require(a, "template", "actions"), tuple(a.get("domains", ())), bool(a.get("distinct", False)))
        for a in _require(data, "actions", "file")
    )
    meal = None
    if "meal" in level:
        meal = MealRule(level["meal"]["room"], tuple(level["meal"]["requires"]))
    return WorldSpec(
        level=int(_require(level, "number", "level")),
        name=level.get("name", ""),
        start=_require(level, "start", "level"),
        rooms=tuple(rooms),
        doors=doors,
        objects=objects,
        subtasks=subtasks,
        templates=templates,
        meal=meal,
        expected_actions=level.get("actions"),
    )


def to_dict(world: WorldSpec) -> dict:
    level: dict = {"format": FORMAT_VERSION, "number": world.level, "name": world.name, "start": world.start}
    if world.expected_actions is not None:
        level["actions"] = world.expected_actions
    if world.meal is not None:
        level["meal"] = {"room": world.meal.room, "requires": list(world.meal.requires)}
    rooms = {}
    for r in world.rooms:
        exits = {}
        for ex in r.exits:
            exits[ex.direction] = ex.to if ex.door is None else {"to": ex.to, "door": ex.door}
        rooms[r.id] = {"name": r.name, "exits": exits}
    doors = {d.id: {"name": d.name, "key": d.key, "closed": d.closed} for d in world.doors}
    objects = {}
    for o in world.objects:
        entry = {"name": o.name, "kind": o.kind, "location": o.location}
        if o.role is not None:
            entry["role"] = o.role
        if o.key is not None:
            entry["key"] = o.key
        if o.sharp:
            entry["sharp"] = True
        objects[o.id] = entry
    out = {"level": level, "rooms": rooms}
    if doors:
        out["doors"] = doors
    out["objects"] = objects
    out["subtasks"] = [
        {"id": s.id, "points": s.points, "description": s.description, "when": [list(c) for c in s.conditions]}
        for s in world.subtasks
    ]
    out["actions"] = [
        {"template": t.pattern, "domains": list(t.domains), **({"distinct": True} if t.distinct else {})}
        for t in world.templates
    ]
    return out


def parse(text: str) -> WorldSpec:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise WorldError(f"level file is not valid TOML: {exc}") from exc
    return from_dict(data)


def serialize(world: WorldSpec) -> str:
    return tomli_w.dumps(to_dict(world))


def load_path(path: str | Path) -> WorldSpec:
    return parse(Path(path).read_text(encoding="utf-8"))
