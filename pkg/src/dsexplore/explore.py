"""Anytime multi-objective exploration.

Four strategies drive :class:`~dsexplore.search.SearchState`:

``s1``
    Branch and bound on complete solutions.  Each accepted solution must
    dominate the incumbent; when the enumeration runs dry the incumbent is
    Pareto-optimal, it is confirmed, and a fresh pass looks for solutions not
    dominated by any confirmed optimum.  Stops when a pass finds nothing.
``s2``
    Same scheme, but the improvement and blocking tests are also applied to
    partial assignments through their objective under-estimates.
``s3``
    One enumeration pass feeding an archive of nondominated solutions.
    Partial assignments whose under-estimate is already dominated are cut.
``s4``
    Two objectives only.  Lexicographic optima for both objective orders give
    the extreme points; the box between two known neighbours is then searched
    for its own lexicographic extremes until a box turns out empty.

Whatever the strategy, the archive exposed in snapshots only ever improves:
every earlier point is weakly dominated by some later one.
"""
from __future__ import annotations

import enum
import math
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .model import Specification
from .objectives import ALL, ObjectiveSpec, evaluate, under_estimate
from .pareto import Point, dominates, make_archive
from .search import Assignment, SearchInterrupted, SearchState, SearchStats, Solution
from .metrics import pairwise_distance

STRATEGIES = ("s1", "s2", "s3", "s4")


class ConfigError(ValueError):
    pass


class Termination(str, enum.Enum):
    COMPLETED = "Completed"
    TIMEOUT = "Timeout"
    INTERRUPTED = "Interrupted"


@dataclass(frozen=True)
class ExplorationConfig:
    strategy: str = "s3"
    objectives: ObjectiveSpec = ALL
    archive: str = "quadtree"
    estimation: bool = True
    timeout_ms: int = 0             # 0 disables the timeout
    seed: int = 0
    check_every: int = 1
    snapshot_every_ms: int = 1000   # 0 disables timer snapshots
    max_solutions: int = 0          # stop after this many accepted solutions; 0 = no limit

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "s4" and len(self.objectives) != 2:
            raise ConfigError("strategy s4 needs exactly two objectives")
        if self.archive not in ("list", "quadtree"):
            raise ConfigError(f"unknown archive kind {self.archive!r}")
        if self.check_every < 1:
            raise ConfigError("check_every must be positive")
        if self.timeout_ms < 0 or self.snapshot_every_ms < 0 or self.max_solutions < 0:
            raise ConfigError("negative time or count limit")


SNAPSHOT_COLUMNS = ("elapsed_ms", "archive_size", "solutions", "nodes", "prunes",
                    "dl_conflicts", "periodic_violations")


@dataclass
class Snapshot:
    elapsed_ms: int
    vectors: list[tuple[int, ...]]
    solutions: int
    nodes: int
    prunes: int
    dl_conflicts: int
    periodic_violations: int
    reason: str = "timer"

    def row(self) -> list[int]:
        return [self.elapsed_ms, len(self.vectors), self.solutions, self.nodes, self.prunes,
                self.dl_conflicts, self.periodic_violations]


@dataclass
class ExplorationRun:
    config: ExplorationConfig
    front: list[Solution]
    snapshots: list[Snapshot]
    termination: Termination
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def vectors(self) -> set[tuple[int, ...]]:
        return {s.objectives for s in self.front}


class _Stop(Exception):
    """Internal: accepted-solution limit reached."""


class _Explorer:
    def __init__(self, spec: Specification, config: ExplorationConfig,
                 stop: threading.Event | None, on_snapshot: Callable[[Snapshot], None] | None):
        self.spec = spec
        self.cfg = config
        self.obj = config.objectives
        self.stop = stop
        self.on_snapshot = on_snapshot
        self.t0 = time.monotonic()
        self.deadline = self.t0 + config.timeout_ms / 1000 if config.timeout_ms else math.inf
        self.next_timer = (self.t0 + config.snapshot_every_ms / 1000
                           if config.snapshot_every_ms else math.inf)
        self.snapshots: list[Snapshot] = []
        self.done = SearchStats()
        self.search: SearchState | None = None
        self.accepted = 0
        self.next_id = 0
        self.termination = Termination.COMPLETED
        self.current: Callable[[], list[Solution]] = lambda: []

    # -- plumbing ---------------------------------------------------------------

    def should_stop(self) -> bool:
        now = time.monotonic()
        if now >= self.next_timer:
            self.snapshot("timer")
            step = self.cfg.snapshot_every_ms / 1000
            self.next_timer += step * max(1, math.ceil((now - self.next_timer) / step))
        if now >= self.deadline:
            self.termination = Termination.TIMEOUT
            return True
        if self.stop is not None and self.stop.is_set():
            self.termination = Termination.INTERRUPTED
            return True
        return False

    def new_search(self) -> SearchState:
        if self.search is not None:
            self._absorb()
        self.search = SearchState(self.spec, self.cfg.check_every, self.should_stop)
        return self.search

    def _absorb(self) -> None:
        for name in vars(self.done):
            setattr(self.done, name, getattr(self.done, name) + getattr(self.search.stats, name))
        self.search = None

    def totals(self) -> SearchStats:
        out = replace(self.done)
        if self.search is not None:
            for name in vars(out):
                setattr(out, name, getattr(out, name) + getattr(self.search.stats, name))
        return out

    def snapshot(self, reason: str) -> None:
        t = self.totals()
        snap = Snapshot(int((time.monotonic() - self.t0) * 1000),
                        sorted(s.objectives for s in self.current()),
                        t.solutions, t.nodes, t.prunes, t.dl_conflicts, t.periodic_violations, reason)
        self.snapshots.append(snap)
        if self.on_snapshot is not None:
            self.on_snapshot(snap)

    def lower_bound(self, asg: Assignment) -> tuple[int, ...]:
        return under_estimate(self.spec, asg, self.obj)

    def evaluated(self, sol: Solution) -> Solution:
        sol.objectives = evaluate(self.spec, sol, self.obj)
        return sol

    def accept(self, sol: Solution) -> Solution:
        sol.id = self.next_id
        self.next_id += 1
        self.accepted += 1
        return sol

    def check_limit(self) -> None:
        if self.cfg.max_solutions and self.accepted >= self.cfg.max_solutions:
            self.termination = Termination.INTERRUPTED
            raise _Stop()

    # -- strategies ---------------------------------------------------------------

    def run(self) -> list[Solution]:
        return getattr(self, "_" + self.cfg.strategy)()

    def _s1(self) -> list[Solution]:
        return self._branch_and_bound(partial=False)

    def _s2(self) -> list[Solution]:
        return self._branch_and_bound(partial=self.cfg.estimation)

    def _branch_and_bound(self, partial: bool) -> list[Solution]:
        optima = make_archive(self.cfg.archive, len(self.obj))
        confirmed: dict[int, Solution] = {}
        inc: list[Solution] = []      # current incumbent, at most one
        self.current = lambda: list(confirmed.values()) + inc

        def pruner(asg: Assignment) -> bool:
            lb = self.lower_bound(asg)
            if optima.is_dominated(lb):
                return True
            return bool(inc) and not dominates(lb, inc[0].objectives)

        try:
            while True:
                search = self.new_search()
                while (sol := search.solve_next(pruner if partial else None)) is not None:
                    v = self.evaluated(sol).objectives
                    if optima.is_dominated(v) or (inc and not dominates(v, inc[0].objectives)):
                        continue
                    inc[:] = [self.accept(sol)]
                    self.snapshot("archive")
                    self.check_limit()
                if not inc:
                    break
                best = inc.pop()
                optima.insert(Point(best.objectives, best.id))
                confirmed[best.id] = best
        except (SearchInterrupted, _Stop):
            pass
        return self.current()

    def _s3(self) -> list[Solution]:
        archive = make_archive(self.cfg.archive, len(self.obj))
        kept: dict[int, Solution] = {}
        self.current = lambda: [kept[p.payload] for p in archive.points()]

        def pruner(asg: Assignment) -> bool:
            return archive.is_dominated(self.lower_bound(asg))

        search = self.new_search()
        try:
            while (sol := search.solve_next(pruner if self.cfg.estimation else None)) is not None:
                v = self.evaluated(sol).objectives
                if archive.is_dominated(v):
                    continue
                self.accept(sol)
                report = archive.insert(Point(v, sol.id))
                for p in report.removed:
                    del kept[p.payload]
                kept[sol.id] = sol
                self.snapshot("archive")
                self.check_limit()
        except (SearchInterrupted, _Stop):
            pass
        return self.current()

    def _s4(self) -> list[Solution]:
        archive = make_archive(self.cfg.archive, 2)
        kept: dict[int, Solution] = {}
        self.current = lambda: [kept[p.payload] for p in archive.points()]

        def confirm(sol: Solution) -> None:
            if archive.insert(Point(sol.objectives, sol.id)).inserted:
                kept[sol.id] = sol
                self.snapshot("archive")
                self.check_limit()

        try:
            a = self._lex((0, 1), (math.inf, math.inf))
            if a is None:
                return []
            confirm(a)
            b = self._lex((1, 0), (math.inf, math.inf))
            confirm(b)
            boxes = [(a, b)] if a.objectives != b.objectives else []
            while boxes:
                left, right = boxes.pop(0)
                c = self._lex((0, 1), (right.objectives[0], left.objectives[1]))
                if c is None:
                    continue
                confirm(c)
                d = self._lex((1, 0), (right.objectives[0], c.objectives[1]))
                if d is None:
                    continue
                confirm(d)
                boxes.append((c, d))
        except (SearchInterrupted, _Stop):
            pass
        return self.current()

    def _lex(self, order: tuple[int, int], upper: tuple[float, float]) -> Solution | None:
        """Lexicographic optimum inside the open box ``v < upper``."""
        first, second = order
        best = self._minimize(first, upper, None)
        if best is None:
            return None
        return self._minimize(second, upper, (first, best.objectives[first]))

    def _minimize(self, key: int, upper: tuple[float, float],
                  cap: tuple[int, int] | None) -> Solution | None:
        """Single-objective descent on objective ``key`` within the box, with an
        optional non-strict cap ``v[cap[0]] <= cap[1]``."""
        inc: list[Solution] = []

        def admissible(v: Sequence[int]) -> bool:
            if v[0] >= upper[0] or v[1] >= upper[1]:
                return False
            return cap is None or v[cap[0]] <= cap[1]

        def pruner(asg: Assignment) -> bool:
            lb = self.lower_bound(asg)
            return not admissible(lb) or (bool(inc) and lb[key] >= inc[0].objectives[key])

        search = self.new_search()
        while (sol := search.solve_next(pruner if self.cfg.estimation else None)) is not None:
            v = self.evaluated(sol).objectives
            if not admissible(v) or (inc and v[key] >= inc[0].objectives[key]):
                continue
            inc[:] = [sol]
        if not inc:
            return None
        return self.accept(inc[0])


def explore(spec: Specification, config: ExplorationConfig = ExplorationConfig(), *,
            stop: threading.Event | None = None,
            on_snapshot: Callable[[Snapshot], None] | None = None) -> ExplorationRun:
    """Run one exploration; interruptible via ``stop`` or KeyboardInterrupt."""
    config.validate()
    ex = _Explorer(spec, config, stop, on_snapshot)
    try:
        front = ex.run()
    except KeyboardInterrupt:
        ex.termination = Termination.INTERRUPTED
        front = ex.current()
    if ex.search is not None:
        ex._absorb()
    ex.snapshot("final")
    front = sorted(front, key=lambda s: (s.objectives, s.id))
    return ExplorationRun(config, front, ex.snapshots, ex.termination, ex.done)


def select_diverse(front: Sequence[Solution], n: int,
                   distance: str | Callable[[Solution, Solution], float] = "hamming") -> list[Solution]:
    """Greedy max-min selection of ``n`` mutually distant solutions.

    Starts from the solution with the lexicographically smallest objective
    vector and repeatedly adds the one farthest from the chosen set.  Ties go to
    the smaller solution id.  In a metric space the minimum pairwise distance of
    the result is at least half the best achievable.
    """
    if n < 1:
        raise ValueError("n must be positive")
    items = list(front)
    if len(items) <= n:
        return items
    dist = distance if callable(distance) else (lambda a, b: pairwise_distance(a, b, distance))
    first = min(items, key=lambda s: (tuple(s.objectives), s.id))
    chosen = [first]
    rest = [s for s in items if s is not first]
    gap = {id(s): dist(first, s) for s in rest}
    while len(chosen) < n:
        pick = max(rest, key=lambda s: (gap[id(s)], -s.id))
        chosen.append(pick)
        rest.remove(pick)
        for s in rest:
            gap[id(s)] = min(gap[id(s)], dist(pick, s))
    return chosen
