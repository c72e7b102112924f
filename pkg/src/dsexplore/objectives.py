"""Area, energy and latency of design points, exact and under-estimated.

All three objectives are minimized:

* area: summed area of allocated tiles.  A tile is allocated when a task is
  bound to it or a route passes through it (routers count as hardware);
* energy: static energy of allocated tiles plus, per task, the dynamic energy
  of its bound option times the number of executions per hyperperiod;
* latency: the latest finishing time of any task under the earliest schedule,
  every application being released at time 0 of its period.

:func:`under_estimate` is admissible: for every feasible completion of a
partial assignment it is componentwise no larger than :func:`evaluate`.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import Specification
from .search import Assignment, Solution

OBJECTIVES = ("area", "energy", "latency")


class IncompleteSolution(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveSpec:
    enabled: tuple[str, ...] = OBJECTIVES

    def __post_init__(self):
        if not self.enabled:
            raise ValueError("at least one objective must be enabled")
        unknown = set(self.enabled) - set(OBJECTIVES)
        if unknown:
            raise ValueError(f"unknown objectives: {sorted(unknown)}")
        if len(set(self.enabled)) != len(self.enabled):
            raise ValueError("duplicate objectives")

    @classmethod
    def parse(cls, text: str) -> "ObjectiveSpec":
        return cls(tuple(s.strip() for s in text.split(",") if s.strip()))

    def project(self, area: int, energy: int, latency: int) -> tuple[int, ...]:
        full = {"area": area, "energy": energy, "latency": latency}
        return tuple(full[name] for name in self.enabled)

    def __len__(self) -> int:
        return len(self.enabled)


ALL = ObjectiveSpec()


def allocated_tiles(spec: Specification, assignment: Assignment) -> set[str]:
    tiles = {spec.options[t][o].tile for t, o in assignment.bindings.items()}
    for m in assignment.routes:
        path = assignment.path(spec, m)
        if path is not None:
            tiles.update(path)
    return tiles


def _static_terms(spec: Specification, tiles: set[str]) -> tuple[int, int]:
    by_id = spec.platform.tile_by_id
    return sum(by_id[t].area for t in tiles), sum(by_id[t].static_energy for t in tiles)


def evaluate(spec: Specification, solution: Solution, objectives: ObjectiveSpec = ALL) -> tuple[int, ...]:
    """Exact objective vector of a complete solution."""
    if set(solution.bindings) != set(spec.tasks):
        raise IncompleteSolution("unbound tasks")
    missing = [m for m in spec.messages if m not in solution.routes]
    if missing:
        raise IncompleteSolution(f"unrouted messages: {missing}")
    asg = solution.as_assignment()
    for m, msg in spec.messages.items():
        if asg.path(spec, m)[-1] != asg.tile_of(spec, msg.dst):
            raise IncompleteSolution(f"route of {m} does not reach its destination")
    area, static = _static_terms(spec, allocated_tiles(spec, asg))
    hyper = spec.hyper
    dyn = sum(hyper // spec.tasks[t].period * spec.options[t][o].dyn_energy
              for t, o in solution.bindings.items())
    latency = 0
    for t, o in solution.bindings.items():
        try:
            start = solution.schedule[t]
        except KeyError:
            raise IncompleteSolution(f"no start time for {t}") from None
        latency = max(latency, start + spec.options[t][o].wcet)
    return objectives.project(area, static + dyn, latency)


def _hops_lower_bound(spec: Specification, asg: Assignment, mid: str) -> int:
    plat = spec.platform
    m = spec.messages[mid]
    dst = asg.tile_of(spec, m.dst)
    dst_tiles = [dst] if dst is not None else [o.tile for o in spec.options[m.dst]]
    path = asg.path(spec, mid)
    if path is None:
        src_tiles = [o.tile for o in spec.options[m.src]]
        return min(plat.manhattan(s, d) for s in src_tiles for d in dst_tiles)
    done = len(path) - 1
    return done + min(plat.manhattan(path[-1], d) for d in dst_tiles)


def under_estimate(spec: Specification, assignment: Assignment, objectives: ObjectiveSpec = ALL) -> tuple[int, ...]:
    """Componentwise lower bound on the objectives of every completion."""
    area, static = _static_terms(spec, allocated_tiles(spec, assignment))
    hyper = spec.hyper
    dyn = 0
    wcet: dict[str, int] = {}
    for t, task in spec.tasks.items():
        o = assignment.bindings.get(t)
        if o is None:
            dyn += hyper // task.period * spec.min_dyn[t]
            wcet[t] = spec.min_wcet[t]
        else:
            opt = spec.options[t][o]
            dyn += hyper // task.period * opt.dyn_energy
            wcet[t] = opt.wcet

    latency = 0
    if "latency" in objectives.enabled:
        delay = spec.platform.link_delay
        finish: dict[str, int] = {}
        for t in spec.task_order:
            start = 0
            for m in spec.incoming[t]:
                hops = _hops_lower_bound(spec, assignment, m.id)
                start = max(start, finish[m.src] + hops * m.size * delay)
            finish[t] = start + wcet[t]
            latency = max(latency, finish[t])
    return objectives.project(area, static + dyn, latency)
