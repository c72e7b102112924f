"""Problem instance data model for system synthesis on mesh NoC platforms.

A :class:`Specification` bundles a 2D mesh platform, a set of periodic
applications (task graphs whose edges are messages) and the mapping options
that say which tile may execute which task, at what worst-case execution time
and dynamic energy cost.  All quantities are integers.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

INT_LIMIT = 2**63 - 1


class SpecError(Exception):
    """Base class for instance loading errors."""


class SpecSyntaxError(SpecError):
    """Input is not well-formed JSON."""


class SchemaError(SpecError):
    """Input JSON has missing, extra or mistyped keys."""


class ValidationError(SpecError):
    """Input parses but violates a model invariant."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        first = report.violations[0]
        super().__init__(f"{first.rule}: {first.entity}")


class UnknownTile(KeyError):
    pass


@dataclass(frozen=True)
class Task:
    id: str
    app: str
    period: int


@dataclass(frozen=True)
class Message:
    id: str
    src: str
    dst: str
    size: int


@dataclass(frozen=True)
class Application:
    id: str
    period: int
    tasks: tuple[Task, ...]
    messages: tuple[Message, ...]


@dataclass(frozen=True)
class Tile:
    id: str
    x: int
    y: int
    area: int
    static_energy: int
    type_tag: str


@dataclass(frozen=True)
class Platform:
    width: int
    height: int
    tiles: tuple[Tile, ...]
    link_delay: int

    @cached_property
    def tile_by_id(self) -> dict[str, Tile]:
        return {t.id: t for t in self.tiles}

    @cached_property
    def tile_at(self) -> dict[tuple[int, int], Tile]:
        return {(t.x, t.y): t for t in self.tiles}

    def manhattan(self, a: str, b: str) -> int:
        ta, tb = self.tile_by_id[a], self.tile_by_id[b]
        return abs(ta.x - tb.x) + abs(ta.y - tb.y)


@dataclass(frozen=True)
class MappingOption:
    task: str
    tile: str
    wcet: int
    dyn_energy: int


@dataclass(frozen=True)
class Specification:
    platform: Platform
    applications: tuple[Application, ...]
    mappings: tuple[MappingOption, ...]

    @cached_property
    def tasks(self) -> dict[str, Task]:
        return {t.id: t for app in self.applications for t in app.tasks}

    @cached_property
    def messages(self) -> dict[str, Message]:
        return {m.id: m for app in self.applications for m in app.messages}

    @cached_property
    def options(self) -> dict[str, list[MappingOption]]:
        """Mapping options per task, in file order."""
        out: dict[str, list[MappingOption]] = {t: [] for t in self.tasks}
        for opt in self.mappings:
            out.setdefault(opt.task, []).append(opt)
        return out

    @cached_property
    def message_app(self) -> dict[str, Application]:
        return {m.id: app for app in self.applications for m in app.messages}

    @cached_property
    def task_app(self) -> dict[str, Application]:
        return {t.id: app for app in self.applications for t in app.tasks}

    @cached_property
    def incident(self) -> dict[str, list[Message]]:
        """Messages touching each task, in declaration order."""
        out: dict[str, list[Message]] = {t: [] for t in self.tasks}
        for m in self.messages.values():
            out[m.src].append(m)
            out[m.dst].append(m)
        return out

    @cached_property
    def incoming(self) -> dict[str, list[Message]]:
        out: dict[str, list[Message]] = {t: [] for t in self.tasks}
        for m in self.messages.values():
            out[m.dst].append(m)
        return out

    @cached_property
    def min_wcet(self) -> dict[str, int]:
        return {t: min(o.wcet for o in opts) for t, opts in self.options.items()}

    @cached_property
    def min_dyn(self) -> dict[str, int]:
        return {t: min(o.dyn_energy for o in opts) for t, opts in self.options.items()}

    @cached_property
    def hyper(self) -> int:
        return hyperperiod(self)

    @cached_property
    def task_order(self) -> list[str]:
        """Tasks in topological order, application by application."""
        order = []
        for app in self.applications:
            order.extend(topological_order(app))
        return order


@dataclass(frozen=True)
class Violation:
    rule: str
    entity: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, rule: str, entity: str) -> None:
        self.violations.append(Violation(rule, entity))

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}


def topological_order(app: Application) -> list[str]:
    """Kahn's algorithm, ties broken by declaration order.  Raises ValueError on cycles."""
    index = {t.id: i for i, t in enumerate(app.tasks)}
    indeg = {t.id: 0 for t in app.tasks}
    succ: dict[str, list[str]] = defaultdict(list)
    for m in app.messages:
        if m.src in indeg and m.dst in indeg:
            succ[m.src].append(m.dst)
            indeg[m.dst] += 1
    ready = sorted((t for t, d in indeg.items() if d == 0), key=index.__getitem__)
    order = []
    while ready:
        t = ready.pop(0)
        order.append(t)
        for s in succ[t]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
                ready.sort(key=index.__getitem__)
    if len(order) != len(app.tasks):
        raise ValueError(f"cyclic task graph in application {app.id}")
    return order


def hyperperiod(spec: Specification) -> int:
    """Least common multiple of all application periods (1 if there are none)."""
    h = 1
    for app in spec.applications:
        h = math.lcm(h, app.period)
        if h > INT_LIMIT:
            raise OverflowError("hyperperiod exceeds 64-bit range")
    return h


def neighbors(platform: Platform, tile: str) -> set[str]:
    try:
        t = platform.tile_by_id[tile]
    except KeyError:
        raise UnknownTile(tile) from None
    out = set()
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        n = platform.tile_at.get((t.x + dx, t.y + dy))
        if n is not None:
            out.add(n.id)
    return out


def validate_spec(spec: Specification) -> ValidationReport:
    """Collect every invariant violation; an empty report means the instance is valid."""
    report = ValidationReport()
    plat = spec.platform

    if plat.width <= 0 or plat.height <= 0:
        report.add("non-positive mesh dimension", f"{plat.width}x{plat.height}")
    if plat.link_delay <= 0:
        report.add("non-positive link delay", "platform")
    if len(plat.tiles) != plat.width * plat.height:
        report.add("tile count mismatch", f"{len(plat.tiles)}")
    seen_tiles: set[str] = set()
    seen_xy: set[tuple[int, int]] = set()
    for t in plat.tiles:
        if t.id in seen_tiles:
            report.add("duplicate tile id", t.id)
        seen_tiles.add(t.id)
        if not (0 <= t.x < plat.width and 0 <= t.y < plat.height):
            report.add("tile out of bounds", t.id)
        if (t.x, t.y) in seen_xy:
            report.add("duplicate tile coordinates", t.id)
        seen_xy.add((t.x, t.y))
        if t.area < 0 or t.static_energy < 0:
            report.add("negative tile cost", t.id)

    seen_apps: set[str] = set()
    task_app: dict[str, str] = {}
    seen_msgs: set[str] = set()
    for app in spec.applications:
        if app.id in seen_apps:
            report.add("duplicate application id", app.id)
        seen_apps.add(app.id)
        if app.period <= 0:
            report.add("non-positive period", app.id)
        for t in app.tasks:
            if t.id in task_app:
                report.add("duplicate task id", t.id)
            task_app[t.id] = app.id
            if t.period != app.period:
                report.add("task period differs from application period", t.id)
        for m in app.messages:
            if m.id in seen_msgs:
                report.add("duplicate message id", m.id)
            seen_msgs.add(m.id)
            if m.size <= 0:
                report.add("non-positive message size", m.id)
            if m.src == m.dst:
                report.add("self message", m.id)
            for end in (m.src, m.dst):
                if end not in task_app:
                    report.add("unknown task", f"{m.id}:{end}")
                elif task_app[end] != app.id:
                    report.add("cross-application message", m.id)
        try:
            topological_order(app)
        except ValueError:
            report.add("cyclic task graph", app.id)

    periods = {t.id: t.period for app in spec.applications for t in app.tasks}
    has_option: set[str] = set()
    seen_pairs: set[tuple[str, str]] = set()
    for opt in spec.mappings:
        ent = f"{opt.task}@{opt.tile}"
        if opt.task not in periods:
            report.add("unknown task", ent)
            continue
        if opt.tile not in seen_tiles:
            report.add("unknown tile", ent)
            continue
        if (opt.task, opt.tile) in seen_pairs:
            report.add("duplicate mapping option", ent)
        seen_pairs.add((opt.task, opt.tile))
        if opt.wcet <= 0:
            report.add("non-positive wcet", ent)
        elif opt.wcet > periods[opt.task]:
            report.add("wcet exceeds period", ent)
        if opt.dyn_energy < 0:
            report.add("negative dynamic energy", ent)
        has_option.add(opt.task)
    for t in periods:
        if t not in has_option:
            report.add("unmappable task", t)
    return report


# -- serialization ---------------------------------------------------------

_TOP_KEYS = {"platform", "applications", "mappings"}
_PLATFORM_KEYS = {"width", "height", "linkDelay", "tiles"}
_TILE_KEYS = {"id", "x", "y", "area", "staticEnergy", "type"}
_APP_KEYS = {"id", "period", "tasks", "messages"}
_TASK_KEYS = {"id"}
_MSG_KEYS = {"id", "src", "dst", "size"}
_MAP_KEYS = {"task", "tile", "wcet", "dynEnergy"}


def _obj(value, keys: set[str], where: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{where}: expected object")
    missing = keys - value.keys()
    extra = value.keys() - keys
    if missing:
        raise SchemaError(f"{where}: missing keys {sorted(missing)}")
    if extra:
        raise SchemaError(f"{where}: unexpected keys {sorted(extra)}")
    return value


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected integer")
    return value


def _str(value, where: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{where}: expected string")
    return value


def _list(value, where: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{where}: expected array")
    return value


def spec_from_dict(doc) -> Specification:
    """Build a Specification from parsed JSON, checking the schema but not the invariants."""
    doc = _obj(doc, _TOP_KEYS, "instance")
    p = _obj(doc["platform"], _PLATFORM_KEYS, "platform")
    tiles = []
    for i, t in enumerate(_list(p["tiles"], "platform.tiles")):
        w = f"platform.tiles[{i}]"
        t = _obj(t, _TILE_KEYS, w)
        tiles.append(Tile(_str(t["id"], w), _int(t["x"], w), _int(t["y"], w),
                          _int(t["area"], w), _int(t["staticEnergy"], w), _str(t["type"], w)))
    platform = Platform(_int(p["width"], "platform"), _int(p["height"], "platform"),
                        tuple(tiles), _int(p["linkDelay"], "platform"))
    apps = []
    for i, a in enumerate(_list(doc["applications"], "applications")):
        w = f"applications[{i}]"
        a = _obj(a, _APP_KEYS, w)
        aid, period = _str(a["id"], w), _int(a["period"], w)
        tasks = tuple(Task(_str(_obj(t, _TASK_KEYS, f"{w}.tasks[{j}]")["id"], w), aid, period)
                      for j, t in enumerate(_list(a["tasks"], w)))
        msgs = []
        for j, m in enumerate(_list(a["messages"], w)):
            mw = f"{w}.messages[{j}]"
            m = _obj(m, _MSG_KEYS, mw)
            msgs.append(Message(_str(m["id"], mw), _str(m["src"], mw), _str(m["dst"], mw), _int(m["size"], mw)))
        apps.append(Application(aid, period, tasks, tuple(msgs)))
    mappings = []
    for i, m in enumerate(_list(doc["mappings"], "mappings")):
        w = f"mappings[{i}]"
        m = _obj(m, _MAP_KEYS, w)
        mappings.append(MappingOption(_str(m["task"], w), _str(m["tile"], w),
                                      _int(m["wcet"], w), _int(m["dynEnergy"], w)))
    return Specification(platform, tuple(apps), tuple(mappings))


def load_spec(data: str | bytes) -> Specification:
    """Parse and validate an instance document.

    Raises SpecSyntaxError, SchemaError or ValidationError (in that order of checking).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(str(exc)) from exc
    spec = spec_from_dict(doc)
    report = validate_spec(spec)
    if report:
        raise ValidationError(report)
    return spec


def spec_to_dict(spec: Specification) -> dict:
    p = spec.platform
    return {
        "platform": {
            "width": p.width,
            "height": p.height,
            "linkDelay": p.link_delay,
            "tiles": [{"id": t.id, "x": t.x, "y": t.y, "area": t.area,
                       "staticEnergy": t.static_energy, "type": t.type_tag} for t in p.tiles],
        },
        "applications": [
            {"id": a.id, "period": a.period,
             "tasks": [{"id": t.id} for t in a.tasks],
             "messages": [{"id": m.id, "src": m.src, "dst": m.dst, "size": m.size} for m in a.messages]}
            for a in spec.applications
        ],
        "mappings": [{"task": m.task, "tile": m.tile, "wcet": m.wcet, "dynEnergy": m.dyn_energy}
                     for m in spec.mappings],
    }


def dump_spec(spec: Specification, indent: int | None = 1) -> str:
    return json.dumps(spec_to_dict(spec), indent=indent)


def make_spec(platform: Platform, applications: Iterable[Application],
              mappings: Iterable[MappingOption]) -> Specification:
    return Specification(platform, tuple(applications), tuple(mappings))


def mesh_platform(width: int, height: int, *, area: int = 1, static_energy: int = 1,
                  link_delay: int = 1, type_tag: str = "T0") -> Platform:
    """Homogeneous mesh with tiles named ``t{x}_{y}`` in row-major order."""
    tiles = tuple(Tile(f"t{x}_{y}", x, y, area, static_energy, type_tag)
                  for y in range(height) for x in range(width))
    return Platform(width, height, tiles, link_delay)
