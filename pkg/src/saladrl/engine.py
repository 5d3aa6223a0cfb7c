"""Deterministic text-game simulator.

A world is an immutable :class:`WorldSpec`; a game is a sequence of immutable
:class:`GameState` values produced by :func:`step`.  Everything here is pure,
so simulations can run side by side without sharing mutable data.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

DIRECTIONS = ("north", "south", "east", "west")
OPPOSITE = {"north": "south", "south": "north", "east": "west", "west": "east"}

VERBS = ("go", "take", "put", "insert", "open", "slice", "prepare", "look", "inventory")
OBJECT_KINDS = ("portable", "key", "food", "fixture")
FIXTURE_ROLES = ("surface", "container", "locker", "scenery")
MEAL = "meal"

# location codes: 0..R-1 rooms, R + j on/inside object j
INVENTORY = -1

# object flag bits
SLICED = 1
PREPARED = 2
OPEN = 4
FLAG_NAMES = {"sliced": SLICED, "prepared": PREPARED, "open": OPEN}

MESSAGES = {
    "no_exit": "You can't go that way.",
    "door_closed": "The {door} is closed.",
    "take": "You take the {obj}.",
    "take_from": "You take the {obj} from the {fixture}.",
    "already_have": "You already have the {obj}.",
    "not_here": "You can't see any {obj} here.",
    "cannot_take": "The {obj} can't be taken.",
    "not_carrying": "You aren't carrying the {obj}.",
    "put": "You put the {obj} on the {fixture}.",
    "insert": "You put the {obj} into the {fixture}.",
    "not_surface": "You can't put things on the {obj}.",
    "not_container": "You can't put things into the {obj}.",
    "locked": "The {obj} is locked.",
    "unlock": "You unlock the {target} with the {obj}.",
    "already_open": "The {target} is already open.",
    "wrong_key": "The {obj} doesn't fit the {target}.",
    "cannot_open": "The {target} can't be opened.",
    "slice": "You slice the {obj} with the {tool}.",
    "already_sliced": "The {obj} is already sliced.",
    "not_sharp": "You can't slice anything with the {tool}.",
    "not_food": "You can't slice the {obj}.",
    "prepare": "You prepare the {obj}.",
    "already_prepared": "The {obj} is already prepared.",
    "not_sliced": "The {obj} needs to be sliced first.",
    "meal": "You prepare a delicious meal.",
    "meal_not_ready": "You don't have everything you need for the meal.",
    "meal_wrong_room": "You can't prepare a meal here.",
    "meal_done": "The meal is already prepared.",
    "inventory_empty": "You are carrying nothing.",
    "inventory": "You are carrying: {items}.",
    "room": "-= {room} =- You are in the {room}.",
    "room_sees": "You see {items}.",
    "room_on": "On the {fixture} is {items}.",
    "room_in": "In the {fixture} is {items}.",
    "room_exits": "Exits: {exits}.",
    "room_no_exits": "There are no exits.",
    "door_state": "the {door} is {state}",
    "score": "Your score has just gone up by {points} points.",
    "score_down": "Your score has just gone down by {points} points.",
    "done": "You have completed every task!",
}


class WorldError(ValueError):
    """A level definition breaks one of the world invariants."""


class CommandError(ValueError):
    """A command could not be parsed or is not part of the action set."""

    def __init__(self, message: str, token: str | None = None):
        super().__init__(message)
        self.token = token


@dataclass(frozen=True)
class Exit:
    direction: str
    to: str
    door: str | None = None


@dataclass(frozen=True)
class Room:
    id: str
    name: str
    exits: tuple[Exit, ...] = ()


@dataclass(frozen=True)
class Door:
    id: str
    name: str
    key: str
    closed: bool = True


@dataclass(frozen=True)
class GameObject:
    id: str
    name: str
    kind: str
    location: str
    role: str | None = None
    key: str | None = None
    sharp: bool = False


@dataclass(frozen=True)
class SubtaskSpec:
    """One-shot reward: ``points`` the first time every condition holds.

    Conditions are tuples: ``("at", obj, place)``, ``("door_open", door)``,
    ``("visited", room)``, ``("flag", obj, flag)``, ``("meal",)``.
    """

    id: str
    points: int
    conditions: tuple[tuple[str, ...], ...]
    description: str = ""


@dataclass(frozen=True)
class ActionTemplate:
    pattern: str
    domains: tuple[str, ...] = ()
    distinct: bool = False


@dataclass(frozen=True)
class MealRule:
    room: str
    requires: tuple[str, ...]


@dataclass(frozen=True)
class Command:
    verb: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return " ".join((self.verb,) + self.args)


class Transition(NamedTuple):
    next_state: "GameState"
    feedback: str
    reward: int
    admissible: int
    done: bool


@dataclass(frozen=True, slots=True)
class GameState:
    """Hidden state.  Locations are integer codes, see :meth:`WorldSpec.place_name`."""

    agent_room: int
    object_location: tuple[int, ...]
    door_open: tuple[bool, ...]
    object_flags: tuple[int, ...]
    subtask_done: int
    visited_rooms: int
    score: int
    meal_prepared: bool = False

    def inventory(self) -> tuple[int, ...]:
        return tuple(i for i, loc in enumerate(self.object_location) if loc == INVENTORY)


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


@dataclass(frozen=True)
class WorldSpec:
    level: int
    name: str
    start: str
    rooms: tuple[Room, ...]
    doors: tuple[Door, ...]
    objects: tuple[GameObject, ...]
    subtasks: tuple[SubtaskSpec, ...]
    templates: tuple[ActionTemplate, ...]
    meal: MealRule | None = None
    expected_actions: int | None = None

    # derived, filled by __post_init__
    action_set: tuple[Command, ...] = field(init=False, repr=False, compare=False)
    _c: "_Compiled" = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        validate_world(self)
        actions = expand_templates(self)
        if self.expected_actions is not None and len(actions) != self.expected_actions:
            raise WorldError(
                f"action set has {len(actions)} commands, level declares {self.expected_actions}"
            )
        object.__setattr__(self, "action_set", actions)
        object.__setattr__(self, "_c", _Compiled(self, actions))

    # ---- lookups -------------------------------------------------------
    def room_id(self, index: int) -> str:
        return self.rooms[index].id

    def object_id(self, index: int) -> str:
        return self.objects[index].id

    def action_index(self, cmd: Command) -> int:
        try:
            return self._c.action_index[cmd]
        except KeyError:
            raise CommandError(f"command not in action set: {self.command_text(cmd)!r}") from None

    def command_text(self, cmd: Command | int) -> str:
        if isinstance(cmd, int):
            return self._c.action_text[cmd]
        return self._c._text(cmd)

    def place_name(self, code: int) -> str:
        if code == INVENTORY:
            return "inventory"
        r = len(self.rooms)
        return self.rooms[code].id if code < r else self.objects[code - r].id

    def location_of(self, state: GameState, obj: str) -> str:
        return self.place_name(state.object_location[self._c.object_index[obj]])

    def inventory_ids(self, state: GameState) -> frozenset[str]:
        return frozenset(self.objects[i].id for i in state.inventory())

    def visited_ids(self, state: GameState) -> frozenset[str]:
        return frozenset(r.id for i, r in enumerate(self.rooms) if state.visited_rooms >> i & 1)

    def door_is_open(self, state: GameState, door: str) -> bool:
        return state.door_open[self._c.door_index[door]]

    def subtasks_done(self, state: GameState) -> tuple[str, ...]:
        return tuple(s.id for i, s in enumerate(self.subtasks) if state.subtask_done >> i & 1)

    @property
    def max_score(self) -> int:
        return sum(s.points for s in self.subtasks if s.points > 0)

    def vocabulary(self) -> list[str]:
        """Every token that can appear in feedback or command text, sorted."""
        words: set[str] = set()
        for template in MESSAGES.values():
            words.update(_tokens(re.sub(r"\{[a-z]+\}", " ", template)))
        words.update(("open", "closed", "and", "a", "an", "the"))
        for thing in itertools.chain(self.rooms, self.doors, self.objects):
            words.update(_tokens(thing.name))
        words.update(DIRECTIONS)
        words.update(VERBS)
        words.update(("on", "into", "with", MEAL))
        for s in self.subtasks:
            words.update(_tokens(str(abs(s.points))))
        for text in self._c.action_text:
            words.update(_tokens(text))
        return sorted(words)


# ---------------------------------------------------------------------------
# validation and template expansion


def validate_world(world: WorldSpec) -> None:
    rooms = {r.id: r for r in world.rooms}
    if len(rooms) != len(world.rooms):
        raise WorldError("duplicate room id")
    if world.start not in rooms:
        raise WorldError(f"start room {world.start!r} does not exist")
    doors = {d.id: d for d in world.doors}
    objects = {o.id: o for o in world.objects}
    if len(objects) != len(world.objects):
        raise WorldError("duplicate object id")
    names = [x.name for x in itertools.chain(world.objects, world.doors)]
    if len(set(names)) != len(names):
        raise WorldError("object and door names must be unique")
    door_sides: dict[str, int] = {}
    for room in world.rooms:
        seen = set()
        for ex in room.exits:
            if ex.direction not in DIRECTIONS:
                raise WorldError(f"room {room.id!r}: unknown direction {ex.direction!r}")
            if ex.direction in seen:
                raise WorldError(f"room {room.id!r}: duplicate exit {ex.direction!r}")
            seen.add(ex.direction)
            if ex.to not in rooms:
                raise WorldError(f"room {room.id!r}: exit leads to unknown room {ex.to!r}")
            back = [e for e in rooms[ex.to].exits if e.direction == OPPOSITE[ex.direction]]
            if not back or back[0].to != room.id or back[0].door != ex.door:
                raise WorldError(
                    f"exits are not symmetric: {room.id} {ex.direction} -> {ex.to} has no matching "
                    f"{OPPOSITE[ex.direction]} exit"
                )
            if ex.door is not None:
                if ex.door not in doors:
                    raise WorldError(f"room {room.id!r}: unknown door {ex.door!r}")
                door_sides[ex.door] = door_sides.get(ex.door, 0) + 1
    for door in world.doors:
        if door_sides.get(door.id, 0) != 2:
            raise WorldError(f"door {door.id!r} must sit on exactly one pair of exits")
        if door.key not in objects:
            raise WorldError(f"door {door.id!r}: key object {door.key!r} does not exist")
    for obj in world.objects:
        if obj.kind not in OBJECT_KINDS:
            raise WorldError(f"object {obj.id!r}: unknown kind {obj.kind!r}")
        if obj.kind == "fixture":
            if obj.role not in FIXTURE_ROLES:
                raise WorldError(f"fixture {obj.id!r}: unknown role {obj.role!r}")
            if obj.location not in rooms:
                raise WorldError(f"fixture {obj.id!r} must be placed in a room")
            if obj.role == "locker" and obj.key not in objects:
                raise WorldError(f"locker {obj.id!r}: key object {obj.key!r} does not exist")
        else:
            host = objects.get(obj.location)
            if obj.location not in rooms and not (host is not None and host.kind == "fixture"
                                                   and host.role in ("surface", "container", "locker")):
                raise WorldError(f"object {obj.id!r}: bad initial location {obj.location!r}")
    for sub in world.subtasks:
        for cond in sub.conditions:
            kind = cond[0]
            if kind == "at" and (cond[1] not in objects or cond[2] not in set(rooms) | set(objects)):
                raise WorldError(f"subtask {sub.id!r}: bad condition {cond!r}")
            if kind == "door_open" and cond[1] not in doors:
                raise WorldError(f"subtask {sub.id!r}: unknown door {cond[1]!r}")
            if kind == "visited" and cond[1] not in rooms:
                raise WorldError(f"subtask {sub.id!r}: unknown room {cond[1]!r}")
            if kind == "flag" and (cond[1] not in objects or cond[2] not in FLAG_NAMES):
                raise WorldError(f"subtask {sub.id!r}: bad flag condition {cond!r}")
            if kind == "meal" and world.meal is None:
                raise WorldError(f"subtask {sub.id!r}: meal condition without a meal rule")
            if kind not in ("at", "door_open", "visited", "flag", "meal"):
                raise WorldError(f"subtask {sub.id!r}: unknown condition {kind!r}")
    if world.meal is not None:
        sub_ids = {s.id for s in world.subtasks}
        if world.meal.room not in rooms or not set(world.meal.requires) <= sub_ids:
            raise WorldError("meal rule references unknown room or subtask")
    if len({s.id for s in world.subtasks}) != len(world.subtasks):
        raise WorldError("duplicate subtask id")


def domain_members(world: WorldSpec, domain: str) -> list[str]:
    objs = world.objects
    if domain == "direction":
        return list(DIRECTIONS)
    if domain == "portable":
        return [o.id for o in objs if o.kind != "fixture"]
    if domain in ("food", "key"):
        return [o.id for o in objs if o.kind == domain]
    if domain in ("surface", "container", "locker", "scenery"):
        return [o.id for o in objs if o.kind == "fixture" and o.role == domain]
    if domain == "lockable":
        return [d.id for d in world.doors] + [o.id for o in objs if o.role == "locker"]
    raise WorldError(f"unknown template domain {domain!r}")


def expand_templates(world: WorldSpec) -> tuple[Command, ...]:
    out: list[Command] = []
    for tpl in world.templates:
        words = tpl.pattern.split()
        verb = words[0]
        if verb not in VERBS:
            raise WorldError(f"template {tpl.pattern!r}: unknown verb")
        pools = [domain_members(world, d) for d in tpl.domains]
        for combo in itertools.product(*pools):
            if tpl.distinct and len(set(combo)) < len(combo):
                continue
            args = []
            for w in words[1:]:
                m = re.fullmatch(r"\{(\d)\}", w)
                if m:
                    args.append(combo[int(m.group(1))])
                elif w not in ("on", "into", "with"):
                    args.append(w)
            out.append(Command(verb, tuple(args)))
    if len(set(out)) != len(out):
        raise WorldError("action templates produce duplicate commands")
    return tuple(out)


# ---------------------------------------------------------------------------
# compiled form used by the hot path

_GO, _TAKE, _PUT, _INSERT, _OPEN, _SLICE, _PREPARE, _MEAL, _LOOK, _INV = range(10)


class _Compiled:
    def __init__(self, world: WorldSpec, actions: Sequence[Command]):
        self.n_rooms = R = len(world.rooms)
        self.room_index = {r.id: i for i, r in enumerate(world.rooms)}
        self.object_index = {o.id: i for i, o in enumerate(world.objects)}
        self.door_index = {d.id: i for i, d in enumerate(world.doors)}
        self.display = {o.id: o.name for o in world.objects}
        self.display.update({d.id: d.name for d in world.doors})
        self.start = self.room_index[world.start]
        self.exits: list[dict[str, tuple[int, int]]] = []
        for room in world.rooms:
            self.exits.append({
                ex.direction: (self.room_index[ex.to], self.door_index[ex.door] if ex.door else -1)
                for ex in room.exits
            })
        self.door_rooms = [set() for _ in world.doors]
        for i, ex_map in enumerate(self.exits):
            for _, (_, d) in ex_map.items():
                if d >= 0:
                    self.door_rooms[d].add(i)
        self.fixture_room = [self.room_index[o.location] if o.kind == "fixture" else -1
                             for o in world.objects]
        self.initial_location = tuple(
            self.room_index[o.location] if o.location in self.room_index
            else R + self.object_index[o.location] for o in world.objects
        )
        self.initial_flags = tuple(0 for _ in world.objects)
        self.initial_doors = tuple(not d.closed for d in world.doors)
        self.conditions = [tuple(self._compile_cond(c) for c in s.conditions) for s in world.subtasks]
        self.points = [s.points for s in world.subtasks]
        self.all_done = (1 << len(world.subtasks)) - 1
        if world.meal is not None:
            sub_index = {s.id: i for i, s in enumerate(world.subtasks)}
            self.meal_room = self.room_index[world.meal.room]
            self.meal_mask = sum(1 << sub_index[s] for s in world.meal.requires)
        else:
            self.meal_room, self.meal_mask = -1, 0
        self.action_index = {c: i for i, c in enumerate(actions)}
        self.ops = [self._compile_cmd(c) for c in actions]
        self.action_text = [self._text(c) for c in actions]
        self.look_index = self.action_index.get(Command("look"), -1)
        self.inventory_index = self.action_index.get(Command("inventory"), -1)

    def _compile_cond(self, cond):
        kind = cond[0]
        if kind == "at":
            place = cond[2]
            code = self.room_index[place] if place in self.room_index else self.n_rooms + self.object_index[place]
            return ("at", self.object_index[cond[1]], code)
        if kind == "door_open":
            return ("door_open", self.door_index[cond[1]])
        if kind == "visited":
            return ("visited", self.room_index[cond[1]])
        if kind == "flag":
            return ("flag", self.object_index[cond[1]], FLAG_NAMES[cond[2]])
        return ("meal",)

    def _ref(self, ident: str) -> tuple[str, int]:
        if ident in self.object_index:
            return ("obj", self.object_index[ident])
        if ident in self.door_index:
            return ("door", self.door_index[ident])
        raise WorldError(f"unknown identifier {ident!r}")

    def _compile_cmd(self, cmd: Command):
        v, a = cmd.verb, cmd.args
        if v == "go":
            return (_GO, a[0], None)
        if v == "look":
            return (_LOOK, None, None)
        if v == "inventory":
            return (_INV, None, None)
        if v == "prepare" and a == (MEAL,):
            return (_MEAL, None, None)
        if v == "open":
            return (_OPEN, self._ref(a[0]), self.object_index[a[1]])
        code = {"take": _TAKE, "put": _PUT, "insert": _INSERT, "slice": _SLICE, "prepare": _PREPARE}[v]
        return (code, self.object_index[a[0]], self.object_index[a[1]] if len(a) > 1 else None)

    def _text(self, cmd: Command) -> str:
        d = [self.display.get(x, x) for x in cmd.args]
        if cmd.verb == "put":
            return f"put {d[0]} on {d[1]}"
        if cmd.verb == "insert":
            return f"insert {d[0]} into {d[1]}"
        if cmd.verb in ("open", "slice"):
            return f"{cmd.verb} {d[0]} with {d[1]}"
        return " ".join([cmd.verb] + d)


# ---------------------------------------------------------------------------
# dynamics


def initial_state(world: WorldSpec) -> GameState:
    c = world._c
    state = GameState(
        agent_room=c.start,
        object_location=c.initial_location,
        door_open=c.initial_doors,
        object_flags=c.initial_flags,
        subtask_done=0,
        visited_rooms=1 << c.start,
        score=0,
    )
    for i, conds in enumerate(c.conditions):
        if all(_holds(c, state, cond) for cond in conds):
            raise WorldError(f"subtask {world.subtasks[i].id!r} is already satisfied in the initial state")
    return state


def _holds(c: _Compiled, s: GameState, cond) -> bool:
    kind = cond[0]
    if kind == "at":
        return s.object_location[cond[1]] == cond[2]
    if kind == "visited":
        return bool(s.visited_rooms >> cond[1] & 1)
    if kind == "door_open":
        return s.door_open[cond[1]]
    if kind == "flag":
        return bool(s.object_flags[cond[1]] & cond[2])
    return s.meal_prepared


def _visible(world: WorldSpec, s: GameState, obj: int) -> bool:
    c = world._c
    loc = s.object_location[obj]
    if loc == s.agent_room:
        return True
    if loc >= c.n_rooms:
        host = loc - c.n_rooms
        if c.fixture_room[host] != s.agent_room:
            return False
        return world.objects[host].role != "locker" or bool(s.object_flags[host] & OPEN)
    return False


def _with(tup: tuple, i: int, value) -> tuple:
    return tup[:i] + (value,) + tup[i + 1:]


def _apply(world: WorldSpec, s: GameState, op) -> tuple[GameState, str]:
    """Core transition without reward bookkeeping: returns (state, message)."""
    c = world._c
    objs = world.objects
    code, a, b = op
    M = MESSAGES
    if code == _LOOK:
        return s, describe_room(world, s)
    if code == _INV:
        return s, describe_inventory(world, s)
    if code == _GO:
        ex = c.exits[s.agent_room].get(a)
        if ex is None:
            return s, M["no_exit"]
        room, door = ex
        if door >= 0 and not s.door_open[door]:
            return s, M["door_closed"].format(door=world.doors[door].name)
        moved = GameState(room, s.object_location, s.door_open, s.object_flags, s.subtask_done,
                          s.visited_rooms | (1 << room), s.score, s.meal_prepared)
        return moved, describe_room(world, moved)
    if code == _TAKE:
        o = objs[a]
        if o.kind == "fixture":
            return s, M["cannot_take"].format(obj=o.name)
        loc = s.object_location[a]
        if loc == INVENTORY:
            return s, M["already_have"].format(obj=o.name)
        if not _visible(world, s, a):
            return s, M["not_here"].format(obj=o.name)
        ns = _replace_loc(s, a, INVENTORY)
        if loc >= c.n_rooms:
            return ns, M["take_from"].format(obj=o.name, fixture=objs[loc - c.n_rooms].name)
        return ns, M["take"].format(obj=o.name)
    if code in (_PUT, _INSERT):
        o, f = objs[a], objs[b]
        if s.object_location[a] != INVENTORY:
            return s, M["not_carrying"].format(obj=o.name)
        if c.fixture_room[b] != s.agent_room:
            return s, M["not_here"].format(obj=f.name)
        if code == _PUT:
            if f.role != "surface":
                return s, M["not_surface"].format(obj=f.name)
            return _replace_loc(s, a, c.n_rooms + b), M["put"].format(obj=o.name, fixture=f.name)
        if f.role == "locker" and not s.object_flags[b] & OPEN:
            return s, M["locked"].format(obj=f.name)
        if f.role not in ("container", "locker"):
            return s, M["not_container"].format(obj=f.name)
        return _replace_loc(s, a, c.n_rooms + b), M["insert"].format(obj=o.name, fixture=f.name)
    if code == _OPEN:
        kind, t = a
        key = objs[b]
        if kind == "door":
            door = world.doors[t]
            if s.agent_room not in c.door_rooms[t]:
                return s, M["not_here"].format(obj=door.name)
            if s.door_open[t]:
                return s, M["already_open"].format(target=door.name)
            if s.object_location[b] != INVENTORY:
                return s, M["not_carrying"].format(obj=key.name)
            if door.key != key.id:
                return s, M["wrong_key"].format(obj=key.name, target=door.name)
            ns = GameState(s.agent_room, s.object_location, _with(s.door_open, t, True), s.object_flags,
                           s.subtask_done, s.visited_rooms, s.score, s.meal_prepared)
            return ns, M["unlock"].format(target=door.name, obj=key.name)
        target = objs[t]
        if target.kind != "fixture" or target.role != "locker":
            return s, M["cannot_open"].format(target=target.name)
        if c.fixture_room[t] != s.agent_room:
            return s, M["not_here"].format(obj=target.name)
        if s.object_flags[t] & OPEN:
            return s, M["already_open"].format(target=target.name)
        if s.object_location[b] != INVENTORY:
            return s, M["not_carrying"].format(obj=key.name)
        if target.key != key.id:
            return s, M["wrong_key"].format(obj=key.name, target=target.name)
        return _replace_flag(s, t, OPEN), M["unlock"].format(target=target.name, obj=key.name)
    if code == _SLICE:
        food, tool = objs[a], objs[b]
        if s.object_location[b] != INVENTORY:
            return s, M["not_carrying"].format(obj=tool.name)
        if not tool.sharp:
            return s, M["not_sharp"].format(tool=tool.name)
        if food.kind != "food":
            return s, M["not_food"].format(obj=food.name)
        if s.object_location[a] != INVENTORY and not _visible(world, s, a):
            return s, M["not_here"].format(obj=food.name)
        if s.object_flags[a] & SLICED:
            return s, M["already_sliced"].format(obj=food.name)
        return _replace_flag(s, a, SLICED), M["slice"].format(obj=food.name, tool=tool.name)
    if code == _PREPARE:
        food = objs[a]
        if s.object_location[a] != INVENTORY and not _visible(world, s, a):
            return s, M["not_here"].format(obj=food.name)
        if not s.object_flags[a] & SLICED:
            return s, M["not_sliced"].format(obj=food.name)
        if s.object_flags[a] & PREPARED:
            return s, M["already_prepared"].format(obj=food.name)
        return _replace_flag(s, a, PREPARED), M["prepare"].format(obj=food.name)
    if code == _MEAL:
        if s.meal_prepared:
            return s, M["meal_done"]
        if s.agent_room != c.meal_room:
            return s, M["meal_wrong_room"]
        if s.subtask_done & c.meal_mask != c.meal_mask:
            return s, M["meal_not_ready"]
        ns = GameState(s.agent_room, s.object_location, s.door_open, s.object_flags, s.subtask_done,
                       s.visited_rooms, s.score, True)
        return ns, M["meal"]
    raise AssertionError(f"unhandled op {op!r}")


def _replace_loc(s: GameState, obj: int, loc: int) -> GameState:
    return GameState(s.agent_room, _with(s.object_location, obj, loc), s.door_open, s.object_flags,
                     s.subtask_done, s.visited_rooms, s.score, s.meal_prepared)


def _replace_flag(s: GameState, obj: int, bit: int) -> GameState:
    return GameState(s.agent_room, s.object_location, s.door_open,
                     _with(s.object_flags, obj, s.object_flags[obj] | bit),
                     s.subtask_done, s.visited_rooms, s.score, s.meal_prepared)


def _settle_rewards(c: _Compiled, s: GameState) -> tuple[GameState, int]:
    done, reward = s.subtask_done, 0
    for i, conds in enumerate(c.conditions):
        if done >> i & 1:
            continue
        if all(_holds(c, s, cond) for cond in conds):
            done |= 1 << i
            reward += c.points[i]
    if reward == 0 and done == s.subtask_done:
        return s, 0
    return GameState(s.agent_room, s.object_location, s.door_open, s.object_flags, done,
                     s.visited_rooms, s.score + reward, s.meal_prepared), reward


def _op(world: WorldSpec, cmd: Command | int):
    if isinstance(cmd, int):
        if not 0 <= cmd < len(world.action_set):
            raise CommandError(f"action index {cmd} out of range")
        return world._c.ops[cmd]
    return world._c.ops[world.action_index(cmd)]


def _compose(message: str, reward: int, done: bool) -> str:
    parts = [message]
    if reward > 0:
        parts.append(MESSAGES["score"].format(points=reward))
    elif reward < 0:
        parts.append(MESSAGES["score_down"].format(points=-reward))
    if done:
        parts.append(MESSAGES["done"])
    return " ".join(parts)


def step(world: WorldSpec, state: GameState, cmd: Command | int) -> Transition:
    """Apply one command.  ``cmd`` may be a :class:`Command` or its action index."""
    c = world._c
    moved, message = _apply(world, state, _op(world, cmd))
    if moved is state:
        return Transition(state, _compose(message, 0, False), 0, 0, state.subtask_done == c.all_done)
    nxt, reward = _settle_rewards(c, moved)
    done = nxt.subtask_done == c.all_done
    return Transition(nxt, _compose(message, reward, done), reward, int(nxt != state), done)


def render_feedback(world: WorldSpec, state: GameState, cmd: Command | int, next_state: GameState) -> str:
    """Feedback text for a transition previously produced by :func:`step`."""
    _, message = _apply(world, state, _op(world, cmd))
    reward = next_state.score - state.score
    done = next_state != state and next_state.subtask_done == world._c.all_done
    return _compose(message, reward, done)


def admissible_set_oracle(world: WorldSpec, state: GameState) -> frozenset[Command]:
    """Commands whose execution changes the hidden state, found by probing :func:`step`."""
    return frozenset(world.action_set[i] for i in admissible_indices(world, state))


def admissible_indices(world: WorldSpec, state: GameState) -> list[int]:
    out = []
    for i in range(len(world.action_set)):
        if step(world, state, i).next_state != state:
            out.append(i)
    return out


# ---------------------------------------------------------------------------
# text


def _join(names: Sequence[str]) -> str:
    names = [f"a {n}" if n[0] not in "aeiou" else f"an {n}" for n in names]
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def describe_room(world: WorldSpec, s: GameState) -> str:
    c = world._c
    room = world.rooms[s.agent_room]
    M = MESSAGES
    parts = [M["room"].format(room=room.name)]
    here = [i for i, loc in enumerate(s.object_location) if loc == s.agent_room]
    if here:
        parts.append(M["room_sees"].format(items=_join([world.objects[i].name for i in here])))
    for host in here:
        obj = world.objects[host]
        if obj.kind != "fixture" or obj.role == "scenery":
            continue
        if obj.role == "locker" and not s.object_flags[host] & OPEN:
            continue
        inside = [world.objects[i].name for i, loc in enumerate(s.object_location) if loc == c.n_rooms + host]
        if inside:
            key = "room_on" if obj.role == "surface" else "room_in"
            parts.append(M[key].format(fixture=obj.name, items=_join(inside)))
    exits = []
    for ex in room.exits:
        if ex.door is None:
            exits.append(ex.direction)
        else:
            d = c.door_index[ex.door]
            state = "open" if s.door_open[d] else "closed"
            exits.append(f"{ex.direction} ({M['door_state'].format(door=world.doors[d].name, state=state)})")
    parts.append(M["room_exits"].format(exits=", ".join(exits)) if exits else M["room_no_exits"])
    return " ".join(parts)


def describe_inventory(world: WorldSpec, s: GameState) -> str:
    items = [world.objects[i].name for i in s.inventory()]
    if not items:
        return MESSAGES["inventory_empty"]
    return MESSAGES["inventory"].format(items=", ".join(items))


def initial_feedback(world: WorldSpec, state: GameState) -> str:
    return describe_room(world, state)


# ---------------------------------------------------------------------------
# parsing

_ALIASES = {"get": "take", "i": "inventory", "l": "look", "n": "north", "s": "south",
            "e": "east", "w": "west"}


def parse_command(world: WorldSpec, text: str) -> Command:
    """Parse free text such as ``"put lettuce on counter"`` into a :class:`Command`.

    Tokens are whitespace separated and case-insensitive; multi-word object
    names are matched longest first.
    """
    tokens = text.lower().split()
    if not tokens:
        raise CommandError("empty command", token="")
    verb = _ALIASES.get(tokens[0], tokens[0])
    if verb in DIRECTIONS and len(tokens) == 1:
        return Command("go", (verb,))
    if verb not in VERBS:
        raise CommandError(f"unknown verb {tokens[0]!r}", token=tokens[0])
    rest = tokens[1:]
    if verb in ("look", "inventory"):
        if rest:
            raise CommandError(f"unexpected {rest[0]!r}", token=rest[0])
        return Command(verb)
    if verb == "go":
        if len(rest) != 1 or _ALIASES.get(rest[0], rest[0]) not in DIRECTIONS:
            bad = rest[0] if rest else ""
            raise CommandError(f"unknown direction {bad!r}", token=bad)
        return Command("go", (_ALIASES.get(rest[0], rest[0]),))
    sep = {"put": "on", "insert": "into", "open": "with", "slice": "with"}.get(verb)
    if sep is None:
        names = [" ".join(rest)]
    else:
        if sep not in rest:
            raise CommandError(f"expected {sep!r} in {text!r}", token=sep)
        k = rest.index(sep)
        names = [" ".join(rest[:k]), " ".join(rest[k + 1:])]
    if verb == "prepare" and names == [MEAL]:
        return Command("prepare", (MEAL,))
    return Command(verb, tuple(_resolve(world, n) for n in names))


def _resolve(world: WorldSpec, name: str) -> str:
    by_name = world._c.display
    for ident, display in by_name.items():
        if display == name or ident == name.replace(" ", "_"):
            return ident
    # longest known name that starts the phrase, so "blue key please" points at "please"
    words = name.split()
    if not words:
        raise CommandError("missing object name", token="")
    known = set(by_name.values())
    for cut in range(len(words) - 1, 0, -1):
        if " ".join(words[:cut]) in known:
            raise CommandError(f"unexpected {words[cut]!r}", token=words[cut])
    raise CommandError(f"unknown object {name!r}", token=words[0])


def run_commands(world: WorldSpec, commands: Iterable[Command | str], state: GameState | None = None
                 ) -> list[Transition]:
    """Replay a command sequence from ``state`` (default: the initial state)."""
    state = initial_state(world) if state is None else state
    out = []
    for cmd in commands:
        if isinstance(cmd, str):
            cmd = parse_command(world, cmd)
        tr = step(world, state, cmd)
        out.append(tr)
        state = tr.next_state
    return out


def state_key(world: WorldSpec, state: GameState) -> Mapping[str, object]:
    """Readable snapshot of a state, handy for debugging and tests."""
    return {
        "room": world.room_id(state.agent_room),
        "inventory": sorted(world.inventory_ids(state)),
        "locations": {o.id: world.place_name(state.object_location[i]) for i, o in enumerate(world.objects)},
        "doors": {d.id: state.door_open[i] for i, d in enumerate(world.doors)},
        "subtasks": list(world.subtasks_done(state)),
        "score": state.score,
    }
