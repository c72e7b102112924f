"""Pareto dominance and nondominated archives (all objectives minimized).

Two archives share one interface: :class:`ListArchive`, a flat list that
doubles as a reference implementation, and :class:`QuadTreeArchive`, which
indexes points by successorship codes to skip most dominance comparisons.

``is_dominated`` never mutates the archive; only ``insert`` does.  Search
code therefore uses ``is_dominated`` for partial assignments and defers
``insert`` to complete solutions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterator, Sequence


class LengthMismatch(ValueError):
    pass


def dominates(a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and differs somewhere."""
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} != {len(b)}")
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


def weakly_dominates(a: Sequence[int], b: Sequence[int]) -> bool:
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} != {len(b)}")
    return all(x <= y for x, y in zip(a, b))


def nondominated(vectors) -> set[tuple]:
    """Distinct nondominated vectors of an iterable (quadratic, for small inputs)."""
    vs = set(map(tuple, vectors))
    return {v for v in vs if not any(dominates(u, v) for u in vs)}


@dataclass(frozen=True)
class Point:
    vector: tuple[int, ...]
    payload: Hashable = None


@dataclass
class InsertReport:
    inserted: bool
    removed: list[Point] = field(default_factory=list)


class _Archive:
    def __init__(self, dim: int | None = None):
        self.dim = dim
        self.comparisons = 0

    def _check_len(self, vector) -> tuple:
        vector = tuple(vector)
        if self.dim is None:
            self.dim = len(vector)
        elif len(vector) != self.dim:
            raise LengthMismatch(f"expected {self.dim} objectives, got {len(vector)}")
        return vector

    def vectors(self) -> set[tuple]:
        return {p.vector for p in self.points()}

    def points(self) -> list[Point]:
        raise NotImplementedError

    def __len__(self) -> int:
        return len(self.points())

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points())

    def dump(self) -> str:
        return json.dumps([{"vector": list(p.vector), "payload": p.payload} for p in self.points()])


class ListArchive(_Archive):
    def __init__(self, dim: int | None = None):
        super().__init__(dim)
        self._points: list[Point] = []

    def points(self) -> list[Point]:
        return list(self._points)

    def is_dominated(self, vector) -> bool:
        """True iff a stored point dominates or equals ``vector``."""
        vector = self._check_len(vector)
        for p in self._points:
            self.comparisons += 1
            if all(x <= y for x, y in zip(p.vector, vector)):
                return True
        return False

    def insert(self, point: Point) -> InsertReport:
        vector = self._check_len(point.vector)
        point = Point(vector, point.payload)
        keep, removed = [], []
        for p in self._points:
            self.comparisons += 1
            if all(x <= y for x, y in zip(p.vector, vector)):
                return InsertReport(False)
            if all(x <= y for x, y in zip(vector, p.vector)):
                removed.append(p)
            else:
                keep.append(p)
        keep.append(point)
        self._points = keep
        return InsertReport(True, removed)

    def state_hash(self) -> int:
        return hash(tuple(self._points))


class _Node:
    __slots__ = ("point", "children")

    def __init__(self, point: Point):
        self.point = point
        self.children: dict[int, _Node] = {}


class QuadTreeArchive(_Archive):
    """Nondominated archive stored as a k-dimensional quad-tree.

    A child hangs below its parent under the successorship code whose bit
    ``i`` is set iff ``child[i] >= parent[i]``.  Since stored points are
    mutually nondominated the all-zero and all-one codes never occur.
    """

    def __init__(self, dim: int | None = None):
        super().__init__(dim)
        self.root: _Node | None = None
        self._size = 0
        self._order: dict[int, list[int]] = {}

    def _compare(self, v: tuple, node: _Node, cache: dict | None = None) -> tuple[int, bool]:
        """Successorship code of ``v`` relative to ``node`` and whether ``v <= node``
        componentwise; one counted comparison, memoized per call site in ``cache``."""
        if cache is not None and node in cache:
            return cache[node]
        self.comparisons += 1
        code, below = 0, True
        for i, (x, y) in enumerate(zip(v, node.point.vector)):
            if x >= y:
                code |= 1 << i
            if x > y:
                below = False
        if cache is not None:
            cache[node] = (code, below)
        return code, below

    def points(self) -> list[Point]:
        out = []
        if self.root is not None:
            stack = [self.root]
            while stack:
                n = stack.pop()
                out.append(n.point)
                stack.extend(n.children[c] for c in sorted(n.children, reverse=True))
        return out

    def __len__(self) -> int:
        return self._size

    def is_dominated(self, vector) -> bool:
        """True iff a stored point dominates or equals ``vector``; read-only."""
        return self._find_dominator(self._check_len(vector), None)

    def _find_dominator(self, v: tuple, cache: dict | None) -> bool:
        if self.root is None:
            return False
        full = (1 << self.dim) - 1
        stack = [self.root]
        while stack:
            node = stack.pop()
            code, _ = self._compare(v, node, cache)
            if code == full:
                return True
            # a dominator q below this node needs q[i] < node[i] wherever v[i] < node[i]
            for c in self._order.get(code) or self._subcodes(code):
                child = node.children.get(c)
                if child is not None:
                    stack.append(child)
        return False

    def _subcodes(self, code: int) -> list[int]:
        """Sub-masks of ``code`` in push order, so that children sharing most
        orthant bits with the query are popped first."""
        subs = [c for c in range(code + 1) if c & ~code == 0]
        subs.sort(key=lambda c: (bin(c).count("1"), c))
        self._order[code] = subs
        return subs

    def insert(self, point: Point) -> InsertReport:
        vector = self._check_len(point.vector)
        point = Point(vector, point.payload)
        cache: dict = {}
        if self._find_dominator(vector, cache):
            return InsertReport(False)
        removed: list[Point] = []
        # survivors of detached subtrees, as (parent, code, points): every point of the
        # subtree hanging at ``code`` below ``parent`` can go straight back into that slot
        orphans: list[tuple[_Node | None, int, list[Point]]] = []
        if self.root is not None:
            code, below = self._compare(vector, self.root, cache)
            if below:
                orphans.append((None, 0, self._harvest(self.root, vector, cache, removed)))
                self.root = None
            else:
                self._remove_below(self.root, code, vector, cache, removed, orphans)
        self._size -= len(removed) + sum(len(pts) for _, _, pts in orphans)
        self._place(point, self.root, cache)
        for parent, code, pts in orphans:
            for p in pts:
                if parent is None:
                    self._place(p, self.root)
                elif code in parent.children:
                    self._place(p, parent.children[code])
                else:
                    parent.children[code] = _Node(p)
                    self._size += 1
        return InsertReport(True, removed)

    def _remove_below(self, node: _Node, code: int, v: tuple, cache: dict,
                      removed: list, orphans: list) -> None:
        """Detach every subtree of ``node`` whose root ``v`` dominates."""
        stack = [(node, code)]
        while stack:
            n, code = stack.pop()
            # a point q >= v below n needs q[i] >= n[i] wherever v[i] >= n[i]
            for c in sorted(n.children):
                if c & code != code:
                    continue
                child = n.children[c]
                child_code, below = self._compare(v, child, cache)
                if below:
                    del n.children[c]
                    orphans.append((n, c, self._harvest(child, v, cache, removed)))
                else:
                    stack.append((child, child_code))

    def _harvest(self, node: _Node, v: tuple, cache: dict, removed: list) -> list[Point]:
        """Split a detached subtree into points dominated by ``v`` (appended to
        ``removed``) and survivors (returned, parents before children)."""
        orphans = []
        removed.append(node.point)
        stack = [node.children[c] for c in sorted(node.children, reverse=True)]
        while stack:
            n = stack.pop()
            if self._compare(v, n, cache)[1]:
                removed.append(n.point)
            else:
                orphans.append(n.point)
            stack.extend(n.children[c] for c in sorted(n.children, reverse=True))
        return orphans

    def _place(self, point: Point, node: _Node | None, cache: dict | None = None) -> None:
        """Insert ``point`` into the subtree rooted at ``node`` (an empty tree when None)."""
        self._size += 1
        new = _Node(point)
        if node is None:
            self.root = new
            return
        while True:
            code, _ = self._compare(point.vector, node, cache)
            child = node.children.get(code)
            if child is None:
                node.children[code] = new
                return
            node = child

    def state_hash(self) -> int:
        def rep(n: _Node) -> Any:
            return (n.point, tuple((c, rep(n.children[c])) for c in sorted(n.children)))
        return hash(rep(self.root) if self.root is not None else None)


def make_archive(kind: str, dim: int | None = None) -> ListArchive | QuadTreeArchive:
    if kind == "list":
        return ListArchive(dim)
    if kind == "quadtree":
        return QuadTreeArchive(dim)
    raise ValueError(f"unknown archive kind {kind!r}")


def archive_check(archive, vector) -> bool:
    return archive.is_dominated(vector)


def archive_insert(archive, point: Point) -> InsertReport:
    return archive.insert(point)
