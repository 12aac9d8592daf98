"""The i.i.d. node-pair selection process and seeded random streams."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import GraphFormatError
from .signed_graph import SignedGraph

ROW_TOL = 1e-12
KINDS = ("uniform-neighbor", "complete", "ring-half", "custom")


class RngStream:
    """Counter-based (Philox) random stream identified by a seed and a path.

    Trial ``t`` of an experiment seeded with ``s`` uses ``RngStream(s, (t,))``;
    streams with different paths are statistically independent and a stream
    is reproducible from ``(seed, path)`` alone. ``counter`` tracks how many
    variates have been drawn.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self.counter = 0
        ss = np.random.SeedSequence([self.seed, *self.path])
        self._gen = np.random.Generator(np.random.Philox(ss))

    def spawn(self, index: int) -> RngStream:
        return RngStream(self.seed, self.path + (index,))

    def random(self, size=None):
        self.counter += 1 if size is None else int(np.prod(size))
        return self._gen.random(size)

    def integers(self, low, high, size=None):
        self.counter += 1 if size is None else int(np.prod(size))
        return self._gen.integers(low, high, size)

    def uniform(self, low, high, size=None):
        self.counter += 1 if size is None else int(np.prod(size))
        return self._gen.uniform(low, high, size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path}, counter={self.counter})"


@dataclass(frozen=True)
class SelectionModel:
    """Row-stochastic matrix P compliant with a signed graph.

    Node i is drawn uniformly, then picks j with probability ``P[i, j]``;
    the unordered pair {i, j} therefore has probability (p_ij + p_ji)/n.
    """

    n: int
    P: np.ndarray = field(repr=False)
    kind: str = "custom"

    @cached_property
    def pair_measure(self) -> dict[tuple[int, int], float]:
        n, P = self.n, self.P
        return {(i, j): (P[i, j] + P[j, i]) / n
                for i in range(n) for j in range(i + 1, n) if P[i, j] + P[j, i] > 0}

    @cached_property
    def noop_mass(self) -> float:
        """Probability that a drawn node picks itself."""
        return float(np.trace(self.P)) / self.n

    @cached_property
    def cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.P, axis=1)
        # round-off must never route a draw to a trailing zero-probability column
        for i in range(self.n):
            last = np.flatnonzero(self.P[i])[-1]
            cdf[i, last:] = 1.0
        return cdf

    def assumption2(self) -> dict:
        """Diagnostic for the mean-analysis assumption: either every p_ii >= 1/2,
        or P doubly stochastic with n >= 4."""
        diag = bool(np.all(np.diag(self.P) >= 0.5))
        doubly = bool(self.n >= 4 and np.allclose(self.P.sum(axis=0), 1.0, atol=1e-12))
        branch = "diagonal" if diag else ("doubly-stochastic" if doubly else None)
        return {"holds": diag or doubly, "branch": branch}


def validate_matrix(P, g: SignedGraph) -> np.ndarray:
    P = np.array(P, dtype=float)
    if P.shape != (g.n, g.n):
        raise ValueError(f"selection matrix must be {g.n}x{g.n}, got {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise ValueError("selection matrix entries must be finite and nonnegative")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL):
        raise ValueError("selection matrix rows must sum to 1")
    allowed = np.eye(g.n, dtype=bool)
    if g.edges:
        e = g.edge_array
        allowed[e[:, 0], e[:, 1]] = allowed[e[:, 1], e[:, 0]] = True
    bad = np.argwhere((P > 0) & ~allowed)
    if len(bad):
        i, j = bad[0]
        raise ValueError(f"p[{i},{j}] > 0 but {{{i},{j}}} is not an edge")
    return P


def _is_ring(g):
    return g.n >= 3 and len(g.edges) == g.n and all(g.degree(v) == 2 for v in range(g.n)) \
        and g.is_connected()


def make_selection(kind: str, g: SignedGraph, matrix=None) -> SelectionModel:
    """Builtin selection matrices.

    ``uniform-neighbor``: p_ij = 1/deg(i) on edges. ``complete``:
    P = (11' - I)/(n-1), needs a complete graph. ``ring-half``: P = A/2 on a
    ring. ``custom``: validate ``matrix``.
    """
    n = g.n
    if kind == "uniform-neighbor":
        P = np.zeros((n, n))
        for i in range(n):
            nbrs = list(g.adjacency[i])
            if not nbrs:
                raise ValueError(f"vertex {i} is isolated; uniform-neighbor selection undefined")
            P[i, nbrs] = 1.0 / len(nbrs)
    elif kind == "complete":
        if not g.is_complete():
            raise ValueError("complete selection requires a complete graph")
        P = (np.ones((n, n)) - np.eye(n)) / (n - 1)
    elif kind == "ring-half":
        if not _is_ring(g):
            raise ValueError("ring-half selection requires a ring graph")
        P = np.zeros((n, n))
        for u, v, _ in g.edges:
            P[u, v] = P[v, u] = 0.5
    elif kind == "custom":
        if matrix is None:
            raise ValueError("custom selection needs a matrix")
        P = matrix
    else:
        raise ValueError(f"unknown selection kind {kind!r}; expected one of {KINDS}")
    return SelectionModel(n, validate_matrix(P, g), kind)


def load_selection_csv(path, g: SignedGraph) -> SelectionModel:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError:
            raise GraphFormatError("selection CSV entries must be numbers", lineno) from None
    try:
        return make_selection("custom", g, np.array(rows))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def sample_pair(model: SelectionModel, rng: RngStream) -> tuple[int, int] | None:
    """One selection event: ``(initiator, partner)``, or ``None`` for a no-op
    (the drawn node picked itself)."""
    i = int(rng.integers(0, model.n))
    j = int(np.searchsorted(model.cdf[i], rng.random(), side="right"))
    j = min(j, model.n - 1)
    return None if i == j else (i, j)


def sample_pairs(model: SelectionModel, rng: RngStream, size: int):
    """Vectorised block of selection events as arrays ``(i, j)``; ``i == j``
    marks a no-op."""
    i = rng.integers(0, model.n, size)
    u = rng.random(size)
    j = (model.cdf[i] <= u[:, None]).sum(axis=1)
    return i, np.minimum(j, model.n - 1)
