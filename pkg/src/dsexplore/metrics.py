"""Front quality indicators and solution distances."""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .pareto import LengthMismatch

log = logging.getLogger(__name__)


class EmptyFront(ValueError):
    pass


class SpecMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    bounds: tuple[tuple[float, float], ...]
    cells: int

    def __post_init__(self):
        if self.cells < 1:
            raise ValueError("cells must be positive")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty bound [{lo}, {hi}]")


def grid_cells(front: Sequence[Sequence[float]], grid: GridSpec) -> tuple[list[tuple[int, ...]], int]:
    """Cell index of every vector plus the number of vectors clamped into the box."""
    b = grid.cells
    cells, clamped = [], 0
    for v in front:
        if len(v) != len(grid.bounds):
            raise LengthMismatch("vector and grid dimensions differ")
        idx, out = [], False
        for x, (lo, hi) in zip(v, grid.bounds):
            u = (x - lo) / (hi - lo)
            if u < 0.0 or u > 1.0:
                out = True
                u = min(max(u, 0.0), 1.0)
            idx.append(min(int(u * b), b - 1))
        clamped += out
        cells.append(tuple(idx))
    if clamped:
        log.warning("%d vectors outside the reference box were clamped", clamped)
    return cells, clamped


def entropy(front: Sequence[Sequence[float]], grid: GridSpec) -> float:
    """Normalized Shannon entropy of the grid-cell occupancy of ``front``.

    1.0 means every point sits in its own cell (as spread out as the grid and
    the front size allow); 0.0 means a single occupied cell.
    """
    if len(front) == 0:
        raise EmptyFront("entropy of an empty front")
    cells, _ = grid_cells(front, grid)
    n = len(front)
    denom = math.log(min(n, grid.cells ** len(grid.bounds)))
    if denom == 0.0:
        return 0.0
    h = 0.0 - sum(c / n * math.log(c / n) for c in Counter(cells).values())
    return h / denom


def epsilon_indicator(approx: Sequence[Sequence[float]], reference: Sequence[Sequence[float]],
                      bounds: Sequence[tuple[float, float]] | None = None) -> float:
    """Additive epsilon indicator of ``approx`` relative to ``reference``.

    The smallest shift that makes every reference point weakly dominated by
    some shifted approximation point.  With ``bounds`` each objective is first
    divided by the width of its reference interval.
    """
    if not approx or not reference:
        raise EmptyFront("epsilon indicator needs two non-empty fronts")
    k = len(reference[0])
    if any(len(v) != k for v in approx) or any(len(v) != k for v in reference):
        raise LengthMismatch("fronts have different objective counts")
    scale = [1.0] * k if bounds is None else [hi - lo for lo, hi in bounds]
    worst = -math.inf
    for r in reference:
        best = min(max((a[i] - r[i]) / scale[i] for i in range(k)) for a in approx)
        worst = max(worst, best)
    return max(worst, 0.0)


def decision_hamming(s1, s2) -> int:
    """Tasks bound differently, plus route links used by exactly one solution,
    plus phase decisions present in only one solution or with different values."""
    if set(s1.bindings) != set(s2.bindings) or set(s1.routes) != set(s2.routes):
        raise SpecMismatch("solutions belong to different specifications")
    d = sum(s1.bindings[t] != s2.bindings[t] for t in s1.bindings)
    d += len(_links(s1) ^ _links(s2))
    for key in set(s1.phases) | set(s2.phases):
        if s1.phases.get(key) != s2.phases.get(key):
            d += 1
    return d


def _links(sol) -> set[tuple]:
    return {(m, path[i], path[i + 1]) for m, path in sol.routes.items() for i in range(len(path) - 1)}


def objective_euclidean(s1, s2) -> float:
    a, b = s1.objectives, s2.objectives
    if len(a) != len(b):
        raise LengthMismatch("objective vectors differ in length")
    return math.dist(a, b)


DISTANCES = {"hamming": decision_hamming, "euclidean": objective_euclidean}


def pairwise_distance(s1, s2, kind: str = "hamming") -> float:
    try:
        fn = DISTANCES[kind]
    except KeyError:
        raise ValueError(f"unknown distance kind {kind!r}") from None
    return fn(s1, s2)
