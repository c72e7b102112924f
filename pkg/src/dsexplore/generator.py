"""Seeded generator of synthetic system-synthesis instances.

Applications are series-parallel task graphs: a tree of series and parallel
compositions is grown from a single leaf and then materialized, series as a
chain and parallel as a fork/join pair of fresh tasks around both branches,
so every application has one source and one sink.

Randomness comes from numpy's PCG64 generator seeded with ``seed``.  Draws
happen in this fixed order:

1. per tile type: area, static energy;
2. per tile (row-major): its type;
3. per application: period, then the series-parallel growth (leaf index,
   composition coin per step), then one size per message;
4. per task (application order, then task index): per tile type a wcet and a
   dynamic energy, then the set of option tiles.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, fields

import numpy as np

from .model import (Application, MappingOption, Message, Platform, Specification, Task, Tile,
                    validate_spec)


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class GenParams:
    seed: int = 0
    nTasksPerApp: int = 6
    nApps: int = 1
    pParallel: float = 0.5
    periodSet: tuple[int, ...] = (50, 100)
    meshW: int = 2
    meshH: int = 2
    optionsPerTask: int = 2
    wcetRange: tuple[int, int] = (1, 8)
    dynRange: tuple[int, int] = (1, 10)
    sizeRange: tuple[int, int] = (1, 3)
    areaRange: tuple[int, int] = (1, 10)
    staticRange: tuple[int, int] = (1, 10)
    tileTypes: int = 2
    linkDelay: int = 1

    def validate(self) -> None:
        for name in ("nTasksPerApp", "nApps", "meshW", "meshH", "optionsPerTask", "tileTypes", "linkDelay"):
            if getattr(self, name) < 1:
                raise ParamError(f"{name} must be positive")
        if not 0.0 <= self.pParallel <= 1.0:
            raise ParamError("pParallel must lie in [0, 1]")
        if not self.periodSet or min(self.periodSet) < 1:
            raise ParamError("periodSet must hold positive periods")
        for name in ("wcetRange", "sizeRange"):
            lo, hi = getattr(self, name)
            if lo < 1 or lo > hi:
                raise ParamError(f"{name} must be a non-empty range of positive integers")
        for name in ("dynRange", "areaRange", "staticRange"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ParamError(f"{name} must be a non-empty range of non-negative integers")
        if self.optionsPerTask > self.meshW * self.meshH:
            raise ParamError("more options per task than tiles")

    @classmethod
    def from_dict(cls, doc: dict) -> "GenParams":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ParamError(f"unknown parameters: {sorted(extra)}")
        conv = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**conv)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


class _SP:
    __slots__ = ("kind", "left", "right")

    def __init__(self):
        self.kind = "leaf"
        self.left = self.right = None


def sp_graph(n_tasks: int, p_parallel: float, rng: np.random.Generator) -> tuple[int, list[tuple[int, int]]]:
    """Random series-parallel DAG with ``n_tasks`` vertices.

    A uniformly chosen leaf is expanded into a parallel composition with
    probability ``p_parallel`` (when the three extra vertices still fit) and
    into a series composition otherwise.  Returns the vertex count and the
    edge list; vertex ids follow a depth-first materialization order.
    """
    if n_tasks < 1:
        raise ParamError("n_tasks must be positive")
    root = _SP()
    leaves = [root]
    count = 1
    while count < n_tasks:
        i = int(rng.integers(len(leaves)))
        coin = float(rng.random())
        node = leaves[i]
        node.left, node.right = _SP(), _SP()
        if coin < p_parallel and count + 3 <= n_tasks:
            node.kind = "par"
            count += 3
        else:
            node.kind = "ser"
            count += 1
        leaves[i] = node.left
        leaves.append(node.right)

    edges: list[tuple[int, int]] = []
    next_id = 0

    def fresh() -> int:
        nonlocal next_id
        next_id += 1
        return next_id - 1

    def build(node: _SP) -> tuple[int, int]:
        if node.kind == "leaf":
            v = fresh()
            return v, v
        if node.kind == "ser":
            s1, e1 = build(node.left)
            s2, e2 = build(node.right)
            edges.append((e1, s2))
            return s1, e2
        fork = fresh()
        s1, e1 = build(node.left)
        s2, e2 = build(node.right)
        join = fresh()
        edges.extend([(fork, s1), (fork, s2), (e1, join), (e2, join)])
        return fork, join

    build(root)
    return next_id, edges


def _draw(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def generate(params: GenParams) -> Specification:
    params.validate()
    rng = np.random.Generator(np.random.PCG64(params.seed))

    type_cost = [(_draw(rng, params.areaRange), _draw(rng, params.staticRange))
                 for _ in range(params.tileTypes)]
    tiles = []
    for y in range(params.meshH):
        for x in range(params.meshW):
            ty = int(rng.integers(params.tileTypes))
            area, static = type_cost[ty]
            tiles.append(Tile(f"t{x}_{y}", x, y, area, static, f"T{ty}"))
    platform = Platform(params.meshW, params.meshH, tuple(tiles), params.linkDelay)

    apps = []
    for a in range(params.nApps):
        aid = f"a{a}"
        period = int(params.periodSet[int(rng.integers(len(params.periodSet)))])
        n, edges = sp_graph(params.nTasksPerApp, params.pParallel, rng)
        tasks = tuple(Task(f"{aid}t{i}", aid, period) for i in range(n))
        msgs = tuple(Message(f"{aid}m{j}", f"{aid}t{u}", f"{aid}t{v}", _draw(rng, params.sizeRange))
                     for j, (u, v) in enumerate(edges))
        apps.append(Application(aid, period, tasks, msgs))

    mappings = []
    for app in apps:
        for task in app.tasks:
            per_type = [(min(_draw(rng, params.wcetRange), app.period), _draw(rng, params.dynRange))
                        for _ in range(params.tileTypes)]
            chosen = sorted(int(i) for i in rng.choice(len(tiles), size=params.optionsPerTask, replace=False))
            for i in chosen:
                wcet, dyn = per_type[int(tiles[i].type_tag[1:])]
                mappings.append(MappingOption(task.id, tiles[i].id, wcet, dyn))

    spec = Specification(platform, tuple(apps), tuple(mappings))
    report = validate_spec(spec)
    if report:
        raise ParamError(f"generated instance is invalid: {report.violations[0]}")
    return spec


class Feasibility(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


def check_feasible(spec: Specification, timeout_ms: int) -> Feasibility:
    """Look for a single solution with the anytime explorer (s3, latency only)."""
    from .explore import ExplorationConfig, Termination, explore
    from .objectives import ObjectiveSpec

    cfg = ExplorationConfig(strategy="s3", objectives=ObjectiveSpec(("latency",)),
                            timeout_ms=timeout_ms, snapshot_every_ms=0, max_solutions=1)
    run = explore(spec, cfg)
    if run.front:
        return Feasibility.FEASIBLE
    if run.termination is Termination.COMPLETED:
        return Feasibility.INFEASIBLE
    return Feasibility.UNKNOWN
