"""Incremental integer difference logic.

Constraints have the form ``x - y <= c``.  The store keeps a potential
function ``pi`` over a graph with an edge ``x -> y`` of weight ``c`` per
constraint, maintaining ``pi[y] <= pi[x] + c`` for every edge.  The earliest
(least non-negative) valuation is ``-pi``.

A new constraint is propagated with a FIFO label-correcting pass starting at
its head; only vertices whose potential drops are touched.  If the pass tries
to lower the potential of the new edge's tail, the new edge closes a negative
cycle, which is read back from the parent pointers of the pass and returned as
a :class:`ConflictSet`.  The store itself is left untouched on conflict.

Every mutation is written to a trail, so :meth:`DLSolver.retract_to` restores
any earlier state exactly.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable


class InvalidMark(ValueError):
    pass


@dataclass(frozen=True)
class DLConstraint:
    x: int
    y: int
    c: int
    tag: Hashable = None


@dataclass(frozen=True)
class ConflictSet:
    constraints: tuple[DLConstraint, ...]

    @property
    def weight(self) -> int:
        return sum(k.c for k in self.constraints)

    def tags(self) -> list:
        return [k.tag for k in self.constraints]

    def __len__(self) -> int:
        return len(self.constraints)


# trail entry kinds
_VAR, _EDGE, _POT = 0, 1, 2


class DLSolver:
    def __init__(self):
        self.labels: list = []
        self.pi: list[int] = []
        self.out: list[list[int]] = []
        self.constraints: list[DLConstraint] = []
        self.trail: list[tuple] = []
        self.rejected: list[ConflictSet] = []

    @property
    def num_vars(self) -> int:
        return len(self.pi)

    def add_var(self, label: Hashable = None) -> int:
        """Create a fresh variable; labels are informational only."""
        self.labels.append(label)
        self.pi.append(0)
        self.out.append([])
        self.trail.append((_VAR,))
        return len(self.pi) - 1

    def mark(self) -> int:
        return len(self.trail)

    def assert_constraint(self, x: int, y: int, c: int, tag: Hashable = None) -> ConflictSet | None:
        """Add ``x - y <= c``.  Returns None if the store stays consistent, else the conflict."""
        n = len(self.pi)
        if not (0 <= x < n and 0 <= y < n):
            raise IndexError(f"unknown variable in {x} - {y} <= {c}")
        con = DLConstraint(x, y, c, tag)
        if x == y:
            if c >= 0:
                self._add_edge(con)
                return None
            conflict = ConflictSet((con,))
            self.rejected.append(conflict)
            return conflict

        pi = self.pi
        if pi[x] + c >= pi[y]:
            self._add_edge(con)
            return None

        # tentative relaxation; committed only if no cycle through x is found
        new = {y: pi[x] + c}
        parent: dict[int, DLConstraint] = {y: con}
        queue = deque([y])
        queued = {y}
        constraints = self.constraints
        while queue:
            u = queue.popleft()
            queued.discard(u)
            du = new[u]
            for idx in self.out[u]:
                e = constraints[idx]
                v = e.y
                dv = du + e.c
                if dv < new.get(v, pi[v]):
                    if v == x:
                        cycle = [e]
                        w = u
                        while w != y:
                            pe = parent[w]
                            cycle.append(pe)
                            w = pe.x
                        cycle.append(con)
                        cycle.reverse()
                        conflict = ConflictSet(tuple(cycle))
                        self.rejected.append(conflict)
                        return conflict
                    new[v] = dv
                    parent[v] = e
                    if v not in queued:
                        queued.add(v)
                        queue.append(v)

        trail = self.trail
        for v in sorted(new):
            trail.append((_POT, v, pi[v]))
            pi[v] = new[v]
        self._add_edge(con)
        return None

    def _add_edge(self, con: DLConstraint) -> None:
        self.constraints.append(con)
        self.out[con.x].append(len(self.constraints) - 1)
        self.trail.append((_EDGE,))

    def retract_to(self, mark: int) -> None:
        if not (0 <= mark <= len(self.trail)):
            raise InvalidMark(mark)
        trail = self.trail
        while len(trail) > mark:
            entry = trail.pop()
            kind = entry[0]
            if kind == _POT:
                self.pi[entry[1]] = entry[2]
            elif kind == _EDGE:
                con = self.constraints.pop()
                self.out[con.x].pop()
            else:
                self.labels.pop()
                self.pi.pop()
                self.out.pop()

    def value(self, v: int) -> int:
        """Earliest value of ``v`` before canonical shifting."""
        return -self.pi[v]

    def solution(self) -> dict[int, int]:
        """Earliest integer valuation, shifted so that the smallest value is 0."""
        if not self.pi:
            return {}
        vals = [-p for p in self.pi]
        low = min(vals)
        return {i: v - low for i, v in enumerate(vals)}

    def state(self) -> tuple:
        """Hashable snapshot of the logical store content, used by tests."""
        return (tuple(self.pi), tuple(self.constraints), tuple(tuple(o) for o in self.out))
