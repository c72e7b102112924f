"""Backtracking search over binding, routing and periodic phase decisions.

Decisions are taken in a fixed discipline:

* tasks are bound in topological order of their task graph;
* as soon as both endpoints of a message are bound the message is routed,
  one hop at a time, towards the destination tile;
* whenever the earliest schedule violates the periodic non-overlap criterion
  for two jobs sharing a tile or a directed link, the engine branches on the
  phase ``k`` of that pair, which turns the disjunctive criterion into two
  difference constraints.

Every decision posts its timing consequences into a :class:`DLSolver`.  Each
posted constraint is tagged with the set of decision levels it depends on, so
a negative cycle yields the decisions responsible for it.  When all
alternatives of a choice point fail for explained reasons the engine jumps
back to the deepest responsible decision; once any subtree produced a
solution or was pruned, failures above it fall back to chronological
backtracking.

:meth:`SearchState.solve_next` enumerates solutions lazily; successive calls
resume where the previous one stopped, so no complete assignment is returned
twice.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .dlsolver import DLSolver
from .model import Specification, neighbors


class SearchInterrupted(Exception):
    """Raised from inside the search when the stop callback fires."""


@dataclass(frozen=True)
class Bind:
    task: str
    option: int


@dataclass(frozen=True)
class Hop:
    message: str
    src: str
    dst: str


@dataclass(frozen=True)
class Phase:
    """Periodic separation of two jobs sharing a resource.

    ``k >= 0`` means job ``a`` leads ``b`` inside their common gcd window,
    ``k < 0`` the reverse.
    """
    pair: tuple
    k: int

    @property
    def direction(self) -> str:
        return "forward" if self.k >= 0 else "backward"


Decision = Bind | Hop | Phase


@dataclass
class Assignment:
    """Partial decision state.

    ``routes[m]`` holds the tiles visited after the source tile; a message is
    in ``complete`` once its route reaches the destination tile.
    """
    bindings: dict[str, int] = field(default_factory=dict)
    routes: dict[str, list[str]] = field(default_factory=dict)
    complete: set[str] = field(default_factory=set)
    phases: dict[tuple, int] = field(default_factory=dict)

    def tile_of(self, spec: Specification, task: str) -> str | None:
        o = self.bindings.get(task)
        return None if o is None else spec.options[task][o].tile

    def path(self, spec: Specification, message: str) -> list[str] | None:
        """Full tile path of a message, or None while its source is unbound."""
        m = spec.messages[message]
        src = self.tile_of(spec, m.src)
        if src is None:
            return None
        return [src] + self.routes.get(message, [])

    def copy(self) -> "Assignment":
        return Assignment(dict(self.bindings), {m: list(r) for m, r in self.routes.items()},
                          set(self.complete), dict(self.phases))


@dataclass
class Solution:
    """A complete, feasible design point with its earliest schedule."""
    id: int = 0
    bindings: dict[str, int] = field(default_factory=dict)
    routes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    phases: dict[tuple, int] = field(default_factory=dict)
    schedule: dict[str, int] = field(default_factory=dict)
    objectives: tuple[int, ...] = ()

    def design_key(self) -> tuple:
        return (tuple(sorted(self.bindings.items())), tuple(sorted(self.routes.items())))

    def assignment_key(self) -> tuple:
        return self.design_key() + (tuple(sorted(self.phases.items(), key=repr)),)

    def as_assignment(self) -> Assignment:
        return Assignment(dict(self.bindings), {m: list(r[1:]) for m, r in self.routes.items()},
                          set(self.routes), dict(self.phases))


def hop_label(message: str, index: int) -> str:
    return f"{message}#{index}"


def periodic_ok(s_a: int, w_a: int, p_a: int, s_b: int, w_b: int, p_b: int) -> bool:
    """Two strictly periodic non-preemptive jobs never overlap iff their start
    offset modulo gcd(p_a, p_b) leaves room for both executions."""
    g = math.gcd(p_a, p_b)
    r = (s_b - s_a) % g
    return w_a <= r <= g - w_b


def phase_domain(w_a: int, p_a: int, w_b: int, p_b: int) -> list[int]:
    """Phases ``k`` compatible with the start windows ``[0, p - w]`` of both jobs,
    forward phases first (0, 1, ...), then backward ones (-1, -2, ...)."""
    g = math.gcd(p_a, p_b)
    if w_a + w_b > g:
        return []
    lo = -(p_a - w_a)
    hi = p_b - w_b
    # need k*g + w_a <= hi and k*g + g - w_b >= lo
    k_max = (hi - w_a) // g
    k_min = -((-(lo + w_b - g)) // g)
    fwd = [k for k in range(0, k_max + 1) if k >= k_min]
    bwd = [k for k in range(-1, k_min - 1, -1) if k <= k_max]
    return fwd + bwd


def route_extend(spec: Specification, assignment: Assignment, message: str) -> list[tuple[str, str]]:
    """Admissible next links ``(head, next)`` for a partially routed message.

    A neighbour of the route head is admissible when it is unvisited and some
    destination candidate stays reachable through unvisited tiles.  Links are
    ordered by remaining Manhattan distance, then tile id.  An empty result on an
    incomplete route is a dead end.
    """
    plat = spec.platform
    m = spec.messages[message]
    path = assignment.path(spec, message)
    if path is None:
        raise ValueError(f"source of {message} is unbound")
    dst_tile = assignment.tile_of(spec, m.dst)
    targets = {dst_tile} if dst_tile is not None else {o.tile for o in spec.options[m.dst]}
    head = path[-1]
    if dst_tile is not None and head == dst_tile:
        return []
    visited = set(path)
    out = []
    for n in neighbors(plat, head):
        if n in visited:
            continue
        if n in targets or _reachable(plat, n, targets, visited):
            out.append(n)
    out.sort(key=lambda n: (min(plat.manhattan(n, t) for t in targets), n))
    return [(head, n) for n in out]


def _reachable(plat, start: str, targets: set[str], blocked: set[str]) -> bool:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if u in targets:
            return True
        for v in neighbors(plat, u):
            if v not in seen and v not in blocked:
                seen.add(v)
                queue.append(v)
    return False


def resource_pairs(spec: Specification, assignment: Assignment) -> list[tuple]:
    """Jobs sharing a tile or a directed link, as ``(resource, job_a, job_b)``.

    Jobs are ``("t", task)`` or ``("h", message, hop_index)``; resources are
    ``("tile", id)`` or ``("link", u, v)``.  The order is deterministic.
    """
    users: dict[tuple, list[tuple]] = {}
    for task in sorted(assignment.bindings):
        users.setdefault(("tile", assignment.tile_of(spec, task)), []).append(("t", task))
    for msg in sorted(assignment.routes):
        path = assignment.path(spec, msg)
        for i in range(len(path) - 1):
            users.setdefault(("link", path[i], path[i + 1]), []).append(("h", msg, i))
    pairs = []
    for res in sorted(users):
        jobs = sorted(users[res])
        for i in range(len(jobs)):
            for j in range(i + 1, len(jobs)):
                pairs.append((res, jobs[i], jobs[j]))
    return pairs


def job_timing(spec: Specification, assignment: Assignment, job: tuple) -> tuple[int, int]:
    """(duration, period) of a task or hop job."""
    if job[0] == "t":
        task = job[1]
        return spec.options[task][assignment.bindings[task]].wcet, spec.tasks[task].period
    m = spec.messages[job[1]]
    return m.size * spec.platform.link_delay, spec.message_app[m.id].period


def job_label(job: tuple) -> str:
    return job[1] if job[0] == "t" else hop_label(job[1], job[2])


def periodic_check(spec: Specification, assignment: Assignment, schedule: dict[str, int]) -> Optional[tuple]:
    """First resource pair (in :func:`resource_pairs` order) whose jobs overlap
    periodically under ``schedule``, or None when the schedule is conflict-free."""
    for pair in resource_pairs(spec, assignment):
        _, a, b = pair
        w_a, p_a = job_timing(spec, assignment, a)
        w_b, p_b = job_timing(spec, assignment, b)
        if not periodic_ok(schedule[job_label(a)], w_a, p_a, schedule[job_label(b)], w_b, p_b):
            return pair
    return None


def schedule_constraints(spec: Specification, assignment: Assignment) -> Iterator[tuple[str, str, int]]:
    """All difference constraints ``x - y <= c`` (over job labels and ``"0"``)
    implied by the determined part of an assignment."""
    delay = spec.platform.link_delay
    for task, o in assignment.bindings.items():
        opt = spec.options[task][o]
        yield ("0", task, 0)
        yield (task, "0", spec.tasks[task].period - opt.wcet)
    for mid, m in spec.messages.items():
        src_tile = assignment.tile_of(spec, m.src)
        if src_tile is None:
            continue
        w_src = spec.options[m.src][assignment.bindings[m.src]].wcet
        hops = assignment.routes.get(mid, [])
        d = m.size * delay
        p = spec.message_app[mid].period
        prev, prev_dur = m.src, w_src
        for i in range(len(hops)):
            h = hop_label(mid, i)
            yield ("0", h, 0)
            yield (h, "0", p - d)
            yield (prev, h, -prev_dur)
            prev, prev_dur = h, d
        if mid in assignment.complete:
            yield (prev, m.dst, -prev_dur)
    for (res, a, b), k in assignment.phases.items():
        w_a, p_a = job_timing(spec, assignment, a)
        w_b, p_b = job_timing(spec, assignment, b)
        g = math.gcd(p_a, p_b)
        la, lb = job_label(a), job_label(b)
        yield (la, lb, -(w_a + k * g))
        yield (lb, la, g - w_b + k * g)


def post_schedule_constraints(spec: Specification, assignment: Assignment, dl: DLSolver,
                              var_of: dict[str, int] | None = None):
    """Assert every timing constraint of ``assignment`` into ``dl``.

    Variables are created on demand in ``var_of`` (label -> variable).  Returns
    None when consistent, otherwise the ConflictSet of the first failing
    assertion; constraint tags are the labels ``(x, y)`` involved.
    """
    if var_of is None:
        var_of = {}

    def var(label: str) -> int:
        if label not in var_of:
            var_of[label] = dl.add_var(label)
        return var_of[label]

    var("0")
    for x, y, c in schedule_constraints(spec, assignment):
        conflict = dl.assert_constraint(var(x), var(y), c, (x, y))
        if conflict is not None:
            return conflict
    return None


# -- engine ------------------------------------------------------------------

PrunePredicate = Callable[[Assignment], bool]
"""Returns True when the (partial) assignment can be discarded."""

_PRUNED = object()


@dataclass
class _Frame:
    kind: str                       # "bind" | "hop" | "phase"
    subject: object                 # task id, message id, or pair
    alts: list
    pre: frozenset                  # levels that make this choice point exist
    next: int = 0
    mark: int = 0
    current: object = None
    undo: list = field(default_factory=list)
    acc: set = field(default_factory=set)
    blocked: bool = False


@dataclass
class SearchStats:
    nodes: int = 0
    prunes: int = 0
    dl_conflicts: int = 0
    periodic_violations: int = 0
    backjumps: int = 0
    solutions: int = 0


class SearchState:
    """Resumable depth-first enumeration of feasible complete assignments."""

    def __init__(self, spec: Specification, check_every: int = 1,
                 should_stop: Callable[[], bool] | None = None):
        if check_every < 1:
            raise ValueError("check_every must be positive")
        self.spec = spec
        self.check_every = check_every
        self.should_stop = should_stop
        self.stats = SearchStats()
        self.asg = Assignment()
        self.dl = DLSolver()
        self.zero = self.dl.add_var("0")
        self.task_var = {t: self.dl.add_var(t) for t in spec.task_order}
        self.hop_vars: dict[str, list[int]] = {m: [] for m in spec.messages}
        self.bind_level: dict[str, int] = {}
        self.hop_levels: dict[str, list[int]] = {m: [] for m in spec.messages}
        self.tile_jobs: dict[str, list[tuple]] = {}
        self.link_jobs: dict[tuple, list[tuple]] = {}
        self.frames: list[_Frame] = []
        # resource -> version, bumped on any job or phase change; with the job
        # start values it forms the signature of a resource last seen clean
        self.res_version: dict[tuple, int] = {}
        self.res_clean: dict[tuple, tuple] = {}
        self.delay = spec.platform.link_delay
        self.decisions: list[Decision] = []
        self._since_check = 0
        self._resume = False
        self._started = False
        self.exhausted = False
        self._next_id = 0
        self._pruner: PrunePredicate | None = None
        for t in spec.task_order:
            # s_t >= 0 holds in every assignment
            self.dl.assert_constraint(self.zero, self.task_var[t], 0, frozenset())

    # -- public -------------------------------------------------------------

    def solve_next(self, pruner: PrunePredicate | None = None) -> Solution | None:
        """Next solution not discarded by ``pruner``; None once the tree is exhausted."""
        self._pruner = pruner
        if self.exhausted:
            return None
        if self._resume:
            self._resume = False
            if not self._backtrack(None, False):
                return self._finish()
        self._started = True
        while True:
            self._tick()
            self.stats.nodes += 1
            outcome = self._visit()
            if isinstance(outcome, Solution):
                self._resume = True
                self.stats.solutions += 1
                return outcome
            if outcome is _PRUNED:
                self.stats.prunes += 1
                ok = self._backtrack(None, False)
            else:
                ok = self._push(outcome)
            if not ok:
                return self._finish()

    def solutions(self, pruner: PrunePredicate | None = None) -> Iterator[Solution]:
        while (sol := self.solve_next(pruner)) is not None:
            yield sol

    @property
    def level(self) -> int:
        return len(self.frames)

    def schedule(self) -> dict[str, int]:
        """Earliest start times of all determined jobs, relative to time 0."""
        z = self.dl.value(self.zero)
        out = {t: self.dl.value(v) - z for t, v in self.task_var.items() if t in self.asg.bindings}
        for m, vs in self.hop_vars.items():
            for i, v in enumerate(vs):
                out[hop_label(m, i)] = self.dl.value(v) - z
        return out

    # -- node processing ------------------------------------------------------

    def _finish(self):
        self.exhausted = True
        return None

    def _tick(self):
        if self.should_stop is not None and self.should_stop():
            raise SearchInterrupted()

    def _visit(self):
        nxt = self._next_variable()
        self._since_check += 1
        if nxt is None or self._since_check >= self.check_every:
            self._since_check = 0
            if self._pruner is not None and self._pruner(self.asg):
                return _PRUNED
            pair = self._violated_pair()
            if pair is not None:
                self.stats.periodic_violations += 1
                return self._phase_frame(pair)
        if nxt is None:
            return self._solution()
        return nxt

    def _next_variable(self) -> _Frame | None:
        spec, asg = self.spec, self.asg
        n_bound = len(asg.bindings)
        if n_bound:
            last = spec.task_order[n_bound - 1]
            for m in spec.incident[last]:
                if m.id in asg.complete:
                    continue
                if m.src in asg.bindings and m.dst in asg.bindings:
                    return self._hop_frame(m.id)
        if n_bound < len(spec.task_order):
            task = spec.task_order[n_bound]
            return _Frame("bind", task, list(range(len(spec.options[task]))), frozenset())
        return None

    def _hop_frame(self, mid: str) -> _Frame:
        m = self.spec.messages[mid]
        pre = {self.bind_level[m.src], self.bind_level[m.dst], *self.hop_levels[mid]}
        alts = route_extend(self.spec, self.asg, mid)
        return _Frame("hop", mid, alts, frozenset(pre))

    def _job(self, job: tuple) -> tuple[int, int, int, set]:
        """(variable, duration, period, defining levels) of a job."""
        spec, asg = self.spec, self.asg
        if job[0] == "t":
            task = job[1]
            opt = spec.options[task][asg.bindings[task]]
            return self.task_var[task], opt.wcet, spec.tasks[task].period, {self.bind_level[task]}
        m = spec.messages[job[1]]
        return (self.hop_vars[m.id][job[2]], m.size * self.delay,
                spec.message_app[m.id].period, {self.hop_levels[m.id][job[2]]})

    def _touch(self, res: tuple) -> None:
        self.res_version[res] = self.res_version.get(res, 0) + 1

    def _violated_pair(self) -> tuple | None:
        dl, phases = self.dl, self.asg.phases
        for res, jobs in self._resources():
            n = len(jobs)
            if n < 2:
                continue
            info = [self._job(j) for j in jobs]
            sig = (self.res_version.get(res, 0), tuple(dl.value(x[0]) for x in info))
            if self.res_clean.get(res) == sig:
                continue
            for i in range(n):
                va, wa, pa, _ = info[i]
                sa = dl.value(va)
                for j in range(i + 1, n):
                    pair = (res, jobs[i], jobs[j])
                    if pair in phases:
                        continue
                    vb, wb, pb, _ = info[j]
                    if not periodic_ok(sa, wa, pa, dl.value(vb), wb, pb):
                        return pair
            self.res_clean[res] = sig
        return None

    def _resources(self):
        # same order as resource_pairs(): links sort before tiles
        for link in sorted(self.link_jobs):
            yield ("link",) + link, sorted(self.link_jobs[link])
        for tile in sorted(self.tile_jobs):
            yield ("tile", tile), sorted(self.tile_jobs[tile])

    def _phase_frame(self, pair: tuple) -> _Frame:
        _, a, b = pair
        _, wa, pa, la = self._job(a)
        _, wb, pb, lb = self._job(b)
        return _Frame("phase", pair, phase_domain(wa, pa, wb, pb), frozenset(la | lb))

    def _solution(self) -> Solution:
        spec, asg = self.spec, self.asg
        routes = {m: tuple(asg.path(spec, m)) for m in spec.messages}
        sol = Solution(self._next_id, dict(asg.bindings), routes, dict(asg.phases), self.schedule())
        self._next_id += 1
        return sol

    # -- choice points -----------------------------------------------------------

    def _push(self, frame: _Frame) -> bool:
        self.frames.append(frame)
        if self._try_alternatives(frame):
            return True
        expl, tainted = self._exhausted(frame)
        return self._backtrack(expl, tainted)

    def _try_alternatives(self, frame: _Frame) -> bool:
        level = len(self.frames)
        while frame.next < len(frame.alts):
            alt = frame.alts[frame.next]
            frame.next += 1
            frame.mark = self.dl.mark()
            frame.undo = []
            expl = self._apply(frame, alt, level)
            if expl is None:
                frame.current = alt
                return True
            self.stats.dl_conflicts += 1
            self._undo(frame)
            frame.acc |= expl - {level}
        return False

    def _exhausted(self, frame: _Frame) -> tuple[set | None, bool]:
        self.frames.pop()
        if frame.blocked:
            return None, True
        return frame.acc | frame.pre, False

    def _backtrack(self, expl: set | None, tainted: bool) -> bool:
        """Leave the subtree below the top frame's current alternative.

        ``expl`` is the set of levels explaining the failure, or None for an
        unexplained outcome (solution, prune).  ``tainted`` records that some
        skipped subtree contained such an outcome.
        """
        while self.frames:
            frame = self.frames[-1]
            level = len(self.frames)
            self._undo(frame)
            if expl is not None and level not in expl:
                if frame.next < len(frame.alts):
                    self.stats.backjumps += 1
                tainted = tainted or frame.blocked
                self.frames.pop()
                continue
            if expl is None or tainted:
                frame.blocked = True
            else:
                frame.acc |= expl - {level}
            if self._try_alternatives(frame):
                return True
            expl, tainted = self._exhausted(frame)
        return False

    def _undo(self, frame: _Frame) -> None:
        for fn in reversed(frame.undo):
            fn()
        frame.undo = []
        self.dl.retract_to(frame.mark)
        if frame.current is not None:
            self.decisions.pop()
        frame.current = None

    def _post(self, x: int, y: int, c: int, tag: frozenset) -> set | None:
        conflict = self.dl.assert_constraint(x, y, c, tag)
        if conflict is None:
            return None
        out: set = set()
        for t in conflict.tags():
            out |= t
        return out

    def _apply(self, frame: _Frame, alt, level: int) -> set | None:
        if frame.kind == "bind":
            expl = self._apply_bind(frame, frame.subject, alt, level)
            dec: Decision = Bind(frame.subject, alt)
        elif frame.kind == "hop":
            expl = self._apply_hop(frame, frame.subject, alt, level)
            dec = Hop(frame.subject, alt[0], alt[1])
        else:
            expl = self._apply_phase(frame, frame.subject, alt, level)
            dec = Phase(frame.subject, alt)
        if expl is None:
            self.decisions.append(dec)
        return expl

    def _apply_bind(self, frame: _Frame, task: str, o: int, level: int) -> set | None:
        spec, asg = self.spec, self.asg
        opt = spec.options[task][o]
        asg.bindings[task] = o
        self.bind_level[task] = level
        jobs = self.tile_jobs.setdefault(opt.tile, [])
        jobs.append(("t", task))
        self._touch(("tile", opt.tile))

        def undo_bind():
            del asg.bindings[task]
            del self.bind_level[task]
            jobs.pop()
            self._touch(("tile", opt.tile))
            if not jobs:
                del self.tile_jobs[opt.tile]
        frame.undo.append(undo_bind)

        s = self.task_var[task]
        expl = self._post(s, self.zero, spec.tasks[task].period - opt.wcet, frozenset({level}))
        if expl is not None:
            return expl
        for m in spec.incident[task]:
            other = m.dst if m.src == task else m.src
            if other not in asg.bindings:
                continue
            if asg.tile_of(spec, other) != opt.tile:
                # implied by every route: at least Manhattan-distance hops
                expl = self._route_bound(m)
                if expl is not None:
                    return expl
                continue
            # co-located endpoints: the route is complete with zero hops
            asg.routes[m.id] = []
            asg.complete.add(m.id)

            def undo_local(mid=m.id):
                del asg.routes[mid]
                asg.complete.discard(mid)
            frame.undo.append(undo_local)
            w_src = spec.options[m.src][asg.bindings[m.src]].wcet
            tag = frozenset({self.bind_level[m.src], self.bind_level[m.dst]})
            expl = self._post(self.task_var[m.src], self.task_var[m.dst], -w_src, tag)
            if expl is not None:
                return expl
        return None

    def _route_bound(self, m) -> set | None:
        spec, asg = self.spec, self.asg
        plat = spec.platform
        w_src = spec.options[m.src][asg.bindings[m.src]].wcet
        dist = plat.manhattan(asg.tile_of(spec, m.src), asg.tile_of(spec, m.dst))
        tag = frozenset({self.bind_level[m.src], self.bind_level[m.dst]})
        return self._post(self.task_var[m.src], self.task_var[m.dst],
                          -(w_src + dist * m.size * self.delay), tag)

    def _apply_hop(self, frame: _Frame, mid: str, link: tuple[str, str], level: int) -> set | None:
        spec, asg, dl = self.spec, self.asg, self.dl
        m = spec.messages[mid]
        d = m.size * self.delay
        period = spec.message_app[mid].period
        route = asg.routes.setdefault(mid, [])
        route.append(link[1])
        index = len(route) - 1
        var = dl.add_var(hop_label(mid, index))
        self.hop_vars[mid].append(var)
        self.hop_levels[mid].append(level)
        users = self.link_jobs.setdefault(link, [])
        users.append(("h", mid, index))
        self._touch(("link",) + link)
        done = link[1] == asg.tile_of(spec, m.dst)
        if done:
            asg.complete.add(mid)

        def undo_hop():
            route.pop()
            if not route:
                del asg.routes[mid]
            self.hop_vars[mid].pop()
            self.hop_levels[mid].pop()
            users.pop()
            self._touch(("link",) + link)
            if not users:
                del self.link_jobs[link]
            asg.complete.discard(mid)
        frame.undo.append(undo_hop)

        here = frozenset({level})
        expl = self._post(self.zero, var, 0, here)
        if expl is None:
            expl = self._post(var, self.zero, period - d, here)
        if expl is not None:
            return expl
        if index == 0:
            w_src = spec.options[m.src][asg.bindings[m.src]].wcet
            expl = self._post(self.task_var[m.src], var, -w_src, frozenset({level, self.bind_level[m.src]}))
        else:
            prev = self.hop_vars[mid][index - 1]
            expl = self._post(prev, var, -d, frozenset({level, self.hop_levels[mid][index - 1]}))
        if expl is not None:
            return expl
        # the rest of any route still needs Manhattan-distance hops
        rest = spec.platform.manhattan(link[1], asg.tile_of(spec, m.dst))
        return self._post(var, self.task_var[m.dst], -d * (1 + rest), frozenset({level, self.bind_level[m.dst]}))

    def _apply_phase(self, frame: _Frame, pair: tuple, k: int, level: int) -> set | None:
        _, a, b = pair
        va, wa, pa, _ = self._job(a)
        vb, wb, pb, _ = self._job(b)
        g = math.gcd(pa, pb)
        self.asg.phases[pair] = k
        self._touch(pair[0])

        def undo_phase():
            self.asg.phases.pop(pair)
            self._touch(pair[0])
        frame.undo.append(undo_phase)
        tag = frame.pre | {level}
        expl = self._post(va, vb, -(wa + k * g), tag)
        if expl is None:
            expl = self._post(vb, va, g - wb + k * g, tag)
        return expl
