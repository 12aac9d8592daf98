"""Finite-time consensus schedules built on hypercube subgraphs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import GraphFormatError, PreconditionError
from .signed_graph import POSITIVE, SignedGraph, has_perfect_matching

LABELING_SEARCH_MAX_M = 4
VERIFY_TOL = 1e-12


@dataclass(frozen=True)
class PairSchedule:
    """Ordered node pairs, applied first to last; every pair must be a
    positive edge of the host graph."""

    n: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for i, j in self.pairs:
            if i == j or not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"invalid pair ({i}, {j}) for n={self.n}")

    def __len__(self):
        return len(self.pairs)

    def check_host(self, g: SignedGraph) -> None:
        for i, j in self.pairs:
            if g.sign(i, j) != POSITIVE:
                raise PreconditionError(f"pair ({i}, {j}) is not a positive edge of the graph")


def _cube_edges(m):
    return [(b, b | (1 << c)) for b in range(1 << m) for c in range(m) if not b >> c & 1]


def _check_labeling(m, labeling, g):
    size = 1 << m
    if len(labeling) != size or sorted(labeling) != list(range(size)):
        raise PreconditionError(f"labeling must be a bijection from {{0,1}}^{m} onto 0..{size - 1}")
    if g is not None:
        if g.n != size:
            raise PreconditionError(f"graph has {g.n} vertices, hypercube has {size}")
        for a, b in _cube_edges(m):
            if g.sign(labeling[a], labeling[b]) != POSITIVE:
                raise PreconditionError(
                    f"hypercube edge ({labeling[a]}, {labeling[b]}) missing from the positive graph")


def hypercube_schedule(m: int, labeling: Sequence[int] | None = None,
                       graph: SignedGraph | None = None) -> PairSchedule:
    """Averaging schedule of length m * 2^(m-1) on an m-dimensional hypercube.

    ``labeling[b]`` is the vertex placed at the corner whose coordinates are
    the bits of ``b``. The schedule recursively averages the half with the
    top coordinate 0, then the half with it 1, then pairs each corner with
    its partner across the top coordinate.
    """
    if m < 1:
        raise ValueError("dimension m must be >= 1")
    labeling = list(range(1 << m)) if labeling is None else [int(v) for v in labeling]
    _check_labeling(m, labeling, graph)

    def build(dim, base):
        if dim == 0:
            return []
        half = 1 << (dim - 1)
        out = build(dim - 1, base) + build(dim - 1, base + half)
        # base + half flips coordinate dim-1 of the sub-cube at base
        return out + [(base + b, base + half + b) for b in range(half)]

    # build() splits on the highest bit first, matching "coordinate m fixed to 0 / to 1"
    pairs = [(labeling[a], labeling[b]) for a, b in build(m, 0)]
    return PairSchedule(1 << m, tuple(pairs))


def schedule_product(schedule: PairSchedule, alpha: float) -> np.ndarray:
    """W+_{i_T j_T} ... W+_{i_1 j_1}."""
    prod = np.eye(schedule.n)
    for i, j in schedule.pairs:
        ri, rj = prod[i].copy(), prod[j].copy()
        prod[i] = (1 - alpha) * ri + alpha * rj
        prod[j] = (1 - alpha) * rj + alpha * ri
    return prod


class ScheduleCheck(NamedTuple):
    ok: bool
    residual: float


def verify_schedule(schedule: PairSchedule, n: int | None = None, alpha: float = 0.5) -> ScheduleCheck:
    """Residual max|product - U| of the positive-update product and whether
    it is within 1e-12."""
    n = schedule.n if n is None else n
    if n != schedule.n:
        schedule = PairSchedule(n, schedule.pairs)
    residual = float(np.max(np.abs(schedule_product(schedule, alpha) - 1.0 / n)))
    return ScheduleCheck(residual <= VERIFY_TOL, residual)


def apply_schedule(schedule: PairSchedule, x, alpha: float = 0.5) -> np.ndarray:
    x = np.array(x, dtype=float)
    for i, j in schedule.pairs:
        xi, xj = x[i], x[j]
        x[i] = (1 - alpha) * xi + alpha * xj
        x[j] = (1 - alpha) * xj + alpha * xi
    return x


class FiniteTimeReport(NamedTuple):
    alpha_half: bool
    power_of_two: bool
    perfect_matching: bool
    holds: bool


def finite_time_necessary_checks(g: SignedGraph, alpha: float) -> FiniteTimeReport:
    """Necessary conditions for finite-time consensus: alpha = 1/2, n a power
    of two, and a perfect matching in the positive graph."""
    n = g.n
    half = alpha == 0.5
    pow2 = n >= 1 and n & (n - 1) == 0
    matching, _ = has_perfect_matching(g, restrict_to_positive=True)
    return FiniteTimeReport(half, pow2, matching, half and pow2 and matching)


def find_hypercube_labeling(g: SignedGraph, m: int) -> list[int] | None:
    """Backtracking search for an embedding of the m-cube into the positive
    graph. Returns a labeling usable by :func:`hypercube_schedule`, or
    ``None`` when none exists."""
    if m > LABELING_SEARCH_MAX_M:
        raise ValueError(f"labeling search is limited to m <= {LABELING_SEARCH_MAX_M}; "
                         "supply an explicit labeling instead")
    size = 1 << m
    if g.n != size:
        raise ValueError(f"need n = 2^m = {size} vertices, graph has {g.n}")
    pos = [{v for v, s in g.adjacency[u].items() if s == POSITIVE} for u in range(size)]
    # corners with a smaller index that are adjacent to corner b
    earlier = [[b ^ (1 << c) for c in range(m) if b >> c & 1] for b in range(size)]
    label = [-1] * size
    used = [False] * size

    def place(b):
        if b == size:
            return True
        for v in range(size):
            if used[v] or len(pos[v]) < m:
                continue
            if all(label[a] in pos[v] for a in earlier[b]):
                label[b], used[v] = v, True
                if place(b + 1):
                    return True
                label[b], used[v] = -1, False
        return False

    return label if place(0) else None


def parse_schedule(text: str, n: int | None = None) -> PairSchedule:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError("schedule line must be 'i j'", lineno)
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphFormatError("schedule entries must be integers", lineno) from None
    if n is None:
        n = 1 + max((max(p) for p in pairs), default=1)
    try:
        return PairSchedule(n, tuple(pairs))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def format_schedule(schedule: PairSchedule) -> str:
    return "".join(f"{i} {j}\n" for i, j in schedule.pairs)


def load_schedule(path, n: int | None = None) -> PairSchedule:
    return parse_schedule(Path(path).read_text(), n)


def save_schedule(schedule: PairSchedule, path) -> None:
    Path(path).write_text(format_schedule(schedule))
