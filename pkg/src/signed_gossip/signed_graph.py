"""Signed graphs: representation, file I/O, structural balance and matchings."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import GraphFormatError, PreconditionError

POSITIVE = 1
NEGATIVE = -1

MATCHING_MAX_N = 24

_SIGN_CHARS = {"+": POSITIVE, "-": NEGATIVE}


def _normalize_sign(sign) -> int:
    if sign in _SIGN_CHARS:
        return _SIGN_CHARS[sign]
    if sign in (POSITIVE, NEGATIVE):
        return int(sign)
    raise ValueError(f"invalid edge sign {sign!r}")


@dataclass(frozen=True)
class SignedGraph:
    """Undirected graph on vertices ``0..n-1`` whose edges carry a sign.

    ``edges`` holds ``(u, v, sign)`` triples with ``u < v`` and sign in
    ``{+1, -1}``, sorted lexicographically. Use :meth:`from_edges` to build
    one from loosely ordered input.
    """

    n: int
    edges: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        if not self.edges:
            return
        try:
            e = self.edge_array
        except (TypeError, ValueError):
            for u, v, s in self.edges:
                if s not in (POSITIVE, NEGATIVE):
                    raise ValueError(f"invalid sign {s!r} on edge ({u}, {v})") from None
            raise ValueError("edges must be (u, v, sign) integer triples") from None
        u, v, s = e[:, 0], e[:, 1], e[:, 2]
        loops = np.flatnonzero(u == v)
        if len(loops):
            raise ValueError(f"self-loop at vertex {u[loops[0]]}")
        bad = np.flatnonzero((u < 0) | (v >= self.n) | (u >= v))
        if len(bad):
            k = bad[0]
            raise ValueError(f"edge ({u[k]}, {v[k]}) out of range or not ordered u < v")
        bad = np.flatnonzero((s != POSITIVE) & (s != NEGATIVE))
        if len(bad):
            k = bad[0]
            raise ValueError(f"invalid sign {s[k]!r} on edge ({u[k]}, {v[k]})")
        key = u * self.n + v
        uniq, counts = np.unique(key, return_counts=True)
        if np.any(counts > 1):
            k = uniq[np.argmax(counts > 1)]
            raise ValueError(f"duplicate edge ({k // self.n}, {k % self.n})")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, object]]) -> SignedGraph:
        """Build a graph, accepting edges in either orientation and signs as
        ``+1/-1`` or ``'+'/'-'``."""
        norm = []
        for u, v, s in edges:
            u, v = int(u), int(v)
            norm.append((min(u, v), max(u, v), _normalize_sign(s)))
        return cls(n, tuple(sorted(norm)))

    @cached_property
    def edge_array(self) -> np.ndarray:
        """``edges`` as an ``(m, 3)`` integer array."""
        return np.array(self.edges, dtype=np.int64).reshape(-1, 3)

    @cached_property
    def adjacency(self) -> tuple[dict[int, int], ...]:
        """``adjacency[u][v]`` is the sign of edge ``{u, v}``."""
        adj: list[dict[int, int]] = [{} for _ in range(self.n)]
        for u, v, s in self.edges:
            adj[u][v] = s
            adj[v][u] = s
        return tuple(adj)

    @property
    def positive_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, s in self.edges if s == POSITIVE]

    @property
    def negative_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, s in self.edges if s == NEGATIVE]

    def sign(self, u: int, v: int) -> int | None:
        return self.adjacency[u].get(v)

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def positive_subgraph(self) -> SignedGraph:
        return SignedGraph(self.n, tuple(e for e in self.edges if e[2] == POSITIVE))

    def is_connected(self) -> bool:
        return len(_components(self.n, self.adjacency)) == 1

    def positive_connected(self) -> bool:
        return len(positive_components(self)) == 1

    def has_negative_edges(self) -> bool:
        return any(s == NEGATIVE for _, _, s in self.edges)

    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2


def _components(n, adjacency, keep=lambda s: True) -> list[tuple[int, ...]]:
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v, s in adjacency[u].items():
                if keep(s) and not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(tuple(sorted(comp)))
    return comps


# --- constructors -----------------------------------------------------------


def complete_graph(n: int, negative: Iterable[tuple[int, int]] = ()) -> SignedGraph:
    neg = {(min(u, v), max(u, v)) for u, v in negative}
    edges = tuple((u, v, NEGATIVE if (u, v) in neg else POSITIVE)
                  for u, v in itertools.combinations(range(n), 2))
    return SignedGraph(n, edges)


def ring_graph(n: int, negative: Iterable[tuple[int, int]] = ()) -> SignedGraph:
    neg = {(min(u, v), max(u, v)) for u, v in negative}
    edges = []
    for u in range(n):
        a, b = sorted((u, (u + 1) % n))
        edges.append((a, b, NEGATIVE if (a, b) in neg else POSITIVE))
    return SignedGraph.from_edges(n, edges)


# --- file I/O -----------------------------------------------------------------


def parse_graph(text: str) -> SignedGraph:
    """Parse the ``n m`` / ``u v s`` text format. Errors carry line numbers."""
    header = None
    edges = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise GraphFormatError("header must be 'n m'", lineno)
            try:
                n, m = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError("header must hold two integers", lineno) from None
            if n < 1 or m < 0:
                raise GraphFormatError("need n >= 1 and m >= 0", lineno)
            header = (n, m)
            continue
        if len(parts) != 3:
            raise GraphFormatError("edge line must be 'u v s'", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("edge endpoints must be integers", lineno) from None
        if parts[2] not in _SIGN_CHARS:
            raise GraphFormatError(f"edge sign must be '+' or '-', got {parts[2]!r}", lineno)
        n = header[0]
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}", lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"vertex index out of range [0, {n})", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        edges.append((u, v, parts[2]))
    if header is None:
        raise GraphFormatError("empty graph file")
    if len(edges) != header[1]:
        raise GraphFormatError(f"header announces {header[1]} edges, found {len(edges)}")
    return SignedGraph.from_edges(header[0], edges)


def format_graph(g: SignedGraph) -> str:
    lines = [f"{g.n} {len(g.edges)}"]
    lines += [f"{u} {v} {'+' if s == POSITIVE else '-'}" for u, v, s in g.edges]
    return "\n".join(lines) + "\n"


def load_graph(path) -> SignedGraph:
    return parse_graph(Path(path).read_text())


def save_graph(g: SignedGraph, path) -> None:
    Path(path).write_text(format_graph(g))


# --- structural balance --------------------------------------------------------


class BalanceResult(NamedTuple):
    partition: tuple[tuple[int, ...], ...] | None
    witness: tuple[int, ...] | None

    @property
    def balanced(self) -> bool:
        return self.partition is not None


@dataclass(frozen=True)
class BalanceVerdict:
    """Strong and weak balance of one graph.

    A partition is a tuple of vertex groups. For the degenerate all-positive
    connected graph both partitions hold a single group; callers that need
    ``k >= 2`` groups must check the length.
    """

    strong: tuple[tuple[int, ...], ...] | None
    weak: tuple[tuple[int, ...], ...] | None
    strong_witness: tuple[int, ...] | None = None
    weak_witness: tuple[int, ...] | None = None

    @property
    def witness(self) -> tuple[int, ...] | None:
        # a cycle with exactly one negative edge also has an odd count
        return self.weak_witness or self.strong_witness


def positive_components(g: SignedGraph) -> list[tuple[int, ...]]:
    """Connected components of the positive subgraph, ordered by smallest vertex."""
    return _components(g.n, g.adjacency, keep=lambda s: s == POSITIVE)


def _require_connected(g):
    if not g.is_connected():
        raise PreconditionError("balance is only defined here for connected graphs")


def _canonical_cycle(cycle: Sequence[int]) -> tuple[int, ...]:
    k = cycle.index(min(cycle))
    rot = list(cycle[k:]) + list(cycle[:k])
    rev = [rot[0]] + rot[1:][::-1]
    return tuple(min(rot, rev))


def check_strong_balance(g: SignedGraph) -> BalanceResult:
    """Signed two-colouring by BFS.

    Positive edges force equal parity, negative edges opposite parity. On a
    conflict the BFS-tree paths from both endpoints to their lowest common
    ancestor, closed by the conflicting edge, give a cycle with an odd number
    of negative edges.
    """
    _require_connected(g)
    adj = g.adjacency
    parity = [-1] * g.n
    parent = [-1] * g.n
    depth = [0] * g.n
    parity[0] = 0
    queue = deque([0])
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v, s in adj[u].items():
            if parity[v] < 0:
                parity[v] = parity[u] ^ (s == NEGATIVE)
                parent[v] = u
                depth[v] = depth[u] + 1
                queue.append(v)
    for u, v, s in g.edges:
        if parity[u] ^ parity[v] != (s == NEGATIVE):
            a, b = [u], [v]
            while depth[a[-1]] > depth[b[-1]]:
                a.append(parent[a[-1]])
            while depth[b[-1]] > depth[a[-1]]:
                b.append(parent[b[-1]])
            while a[-1] != b[-1]:
                a.append(parent[a[-1]])
                b.append(parent[b[-1]])
            cycle = a + b[-2::-1]
            return BalanceResult(None, _canonical_cycle(cycle))
    v1 = tuple(v for v in range(g.n) if parity[v] == 0)
    v2 = tuple(v for v in range(g.n) if parity[v] == 1)
    return BalanceResult(tuple(p for p in (v1, v2) if p), None)


def _positive_path(g, src, dst):
    adj = g.adjacency
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v, s in adj[u].items():
            if s == POSITIVE and v not in prev:
                prev[v] = u
                queue.append(v)
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def check_weak_balance(g: SignedGraph) -> BalanceResult:
    """Weak balance holds iff no negative edge lies inside a positive component.

    The positive components are then the only admissible partition. On
    failure the witness is a shortest positive path between the endpoints of
    an offending negative edge, closed by that edge.
    """
    _require_connected(g)
    comps = positive_components(g)
    label = [0] * g.n
    for c, comp in enumerate(comps):
        for v in comp:
            label[v] = c
    for u, v, s in g.edges:
        if s == NEGATIVE and label[u] == label[v]:
            return BalanceResult(None, _canonical_cycle(_positive_path(g, u, v)))
    return BalanceResult(tuple(comps), None)


def balance_verdict(g: SignedGraph) -> BalanceVerdict:
    strong = check_strong_balance(g)
    weak = check_weak_balance(g)
    return BalanceVerdict(strong.partition, weak.partition, strong.witness, weak.witness)


def simple_cycles(g: SignedGraph) -> Iterable[tuple[int, ...]]:
    """Yield every simple cycle (length >= 3) once, in canonical orientation.

    Each cycle starts at its smallest vertex and only visits larger ones; the
    reversed traversal is dropped by requiring second vertex < last vertex.
    Exponential; meant for small graphs.
    """
    adj = [sorted(a) for a in g.adjacency]
    for start in range(g.n):
        path = [start]
        on_path = {start}

        def extend(u):
            for v in adj[u]:
                if v == start and len(path) >= 3 and path[1] < path[-1]:
                    yield tuple(path)
                elif v > start and v not in on_path:
                    path.append(v)
                    on_path.add(v)
                    yield from extend(v)
                    path.pop()
                    on_path.discard(v)

        yield from extend(start)


def cycle_negative_count(g: SignedGraph, cycle: Sequence[int]) -> int:
    k = len(cycle)
    return sum(g.sign(cycle[i], cycle[(i + 1) % k]) == NEGATIVE for i in range(k))


def find_cycle_witness(g: SignedGraph, mode: str) -> tuple[int, ...] | None:
    """Brute-force witness search by cycle enumeration.

    ``mode='odd'`` looks for a cycle with an odd number of negative edges
    (strong balance fails), ``mode='single'`` for a cycle with exactly one
    (weak balance fails). Returns ``None`` when no such cycle exists.
    """
    if mode not in ("odd", "single"):
        raise ValueError("mode must be 'odd' or 'single'")
    for cycle in simple_cycles(g):
        neg = cycle_negative_count(g, cycle)
        if (mode == "odd" and neg % 2 == 1) or (mode == "single" and neg == 1):
            return cycle
    return None


def partition_is_valid(g: SignedGraph, partition) -> bool:
    """Check edge by edge: positive inside groups, negative across groups."""
    label = {}
    for c, group in enumerate(partition):
        for v in group:
            if v in label:
                return False
            label[v] = c
    if sorted(label) != list(range(g.n)):
        return False
    return all((label[u] == label[v]) == (s == POSITIVE) for u, v, s in g.edges)


# --- perfect matching ---------------------------------------------------------


def has_perfect_matching(g: SignedGraph, restrict_to_positive: bool = False):
    """Exact perfect-matching test by bitmask backtracking.

    Returns ``(found, matching)`` where ``matching`` is a tuple of ``n/2``
    disjoint edges when found. Always matches the lowest unmatched vertex
    first; failed masks are memoised, so the cost is O(2^n * n).
    """
    n = g.n
    if n % 2:
        return False, None
    if n > MATCHING_MAX_N:
        raise ValueError(f"perfect matching search limited to n <= {MATCHING_MAX_N}")
    nbr = [0] * n
    for u, v, s in g.edges:
        if restrict_to_positive and s != POSITIVE:
            continue
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u
    full = (1 << n) - 1
    dead = set()
    chosen: list[tuple[int, int]] = []

    def search(mask):
        if mask == full:
            return True
        if mask in dead:
            return False
        free = ~mask & full
        u = (free & -free).bit_length() - 1
        cand = nbr[u] & free
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            chosen.append((u, v))
            if search(mask | (1 << u) | low):
                return True
            chosen.pop()
            cand ^= low
        dead.add(mask)
        return False

    if search(0):
        return True, tuple(chosen)
    return False, None
