"""Front files and their post-hoc verification.

A front file is a JSON array of ``{vector, bindings, routes, schedule}``:
``bindings`` maps task ids to tile ids, ``routes`` maps message ids to tile
paths (source tile first), and ``schedule`` maps task ids and hop labels
(``message#index``) to start times.

:func:`verify_solution` does not trust the search: it re-checks every timing
constraint by substitution and expands every job slot by slot over the
hyperperiod to look for overlaps on tiles and directed links.
"""
from __future__ import annotations

import json

import numpy as np

from .model import Specification, neighbors
from .objectives import ALL, ObjectiveSpec, evaluate
from .search import Solution, hop_label


class FrontError(ValueError):
    """Front file is malformed or refers to entities missing from the instance."""


ENTRY_KEYS = {"vector", "bindings", "routes", "schedule"}


def solution_to_entry(spec: Specification, sol: Solution) -> dict:
    return {
        "vector": list(sol.objectives),
        "bindings": {t: spec.options[t][o].tile for t, o in sorted(sol.bindings.items())},
        "routes": {m: list(p) for m, p in sorted(sol.routes.items())},
        "schedule": dict(sorted(sol.schedule.items())),
    }


def dump_front(spec: Specification, front) -> str:
    return json.dumps([solution_to_entry(spec, s) for s in front], indent=1)


def load_front(text: str) -> list[dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FrontError(f"malformed front JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise FrontError("front must be a JSON array")
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or not ENTRY_KEYS <= entry.keys():
            raise FrontError(f"entry {i}: expected keys {sorted(ENTRY_KEYS)}")
    return doc


def entry_to_solution(spec: Specification, entry: dict) -> Solution:
    """Rebuild a Solution; raises FrontError on references unknown to ``spec``."""
    bindings = {}
    for task, tile in entry["bindings"].items():
        if task not in spec.tasks:
            raise FrontError(f"unknown task {task!r}")
        idx = [i for i, o in enumerate(spec.options[task]) if o.tile == tile]
        if not idx:
            raise FrontError(f"task {task!r} has no option on tile {tile!r}")
        bindings[task] = idx[0]
    routes = {}
    for msg, path in entry["routes"].items():
        if msg not in spec.messages:
            raise FrontError(f"unknown message {msg!r}")
        if any(t not in spec.platform.tile_by_id for t in path) or not path:
            raise FrontError(f"route of {msg!r} uses unknown tiles")
        routes[msg] = tuple(path)
    schedule = {}
    for label, start in entry["schedule"].items():
        if not isinstance(start, int) or isinstance(start, bool):
            raise FrontError(f"start time of {label!r} is not an integer")
        schedule[label] = start
    return Solution(bindings=bindings, routes=routes, schedule=schedule,
                    objectives=tuple(entry["vector"]))


def verify_solution(spec: Specification, sol: Solution, objectives: ObjectiveSpec = ALL) -> list[str]:
    """Every problem found in ``sol``; empty when it is feasible and its vector recomputes."""
    problems = []
    missing = set(spec.tasks) - set(sol.bindings)
    if missing:
        return [f"unbound tasks {sorted(missing)}"]
    missing = set(spec.messages) - set(sol.routes)
    if missing:
        return [f"unrouted messages {sorted(missing)}"]
    plat = spec.platform
    delay = plat.link_delay
    wcet = {t: spec.options[t][o].wcet for t, o in sol.bindings.items()}
    tile = {t: spec.options[t][o].tile for t, o in sol.bindings.items()}
    start = sol.schedule

    occupants: dict[tuple, list[tuple[int, int, int, str]]] = {}
    for t, task in spec.tasks.items():
        if t not in start:
            problems.append(f"no start time for {t}")
            continue
        if not 0 <= start[t] <= task.period - wcet[t]:
            problems.append(f"{t} starts outside its window")
        occupants.setdefault(("tile", tile[t]), []).append((start[t], wcet[t], task.period, t))

    for mid, m in spec.messages.items():
        path = sol.routes[mid]
        period = spec.message_app[mid].period
        if path[0] != tile[m.src] or path[-1] != tile[m.dst]:
            problems.append(f"route of {mid} does not connect its endpoints")
            continue
        if len(set(path)) != len(path):
            problems.append(f"route of {mid} revisits a tile")
        d = m.size * delay
        prev, prev_end = m.src, None
        if m.src in start:
            prev_end = start[m.src] + wcet[m.src]
        for i in range(len(path) - 1):
            if path[i + 1] not in neighbors(plat, path[i]):
                problems.append(f"route of {mid} jumps from {path[i]} to {path[i + 1]}")
            label = hop_label(mid, i)
            if label not in start:
                problems.append(f"no start time for {label}")
                prev_end = None
                continue
            s = start[label]
            if not 0 <= s <= period - d:
                problems.append(f"{label} starts outside its window")
            if prev_end is not None and s < prev_end:
                problems.append(f"{label} starts before {prev} finishes")
            occupants.setdefault(("link", path[i], path[i + 1]), []).append((s, d, period, label))
            prev, prev_end = label, s + d
        if prev_end is not None and m.dst in start and start[m.dst] < prev_end:
            problems.append(f"{m.dst} starts before message {mid} arrives")

    hyper = spec.hyper
    for res, jobs in occupants.items():
        if len(jobs) < 2:
            continue
        busy = np.zeros(hyper, dtype=np.int64)
        slots = np.arange(hyper)
        for s, w, p, _ in jobs:
            busy += (slots - s) % p < w
        if busy.max() > 1:
            problems.append(f"periodic overlap on {res}")

    if not problems:
        try:
            vector = evaluate(spec, sol, objectives)
        except ValueError as exc:
            problems.append(str(exc))
        else:
            if tuple(vector) != tuple(sol.objectives):
                problems.append(f"vector {list(sol.objectives)} recomputes as {list(vector)}")
    return problems
