"""Belief update rules and single-trajectory simulation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .selection import RngStream, SelectionModel, sample_pairs
from .signed_graph import POSITIVE, SignedGraph

RULES = ("symmetric", "asymmetric-constrained", "altafini")
TOUCH_FRACTION = 0.05
BLOCK = 1024


@dataclass(frozen=True)
class UpdateParams:
    """Parameters of one update rule.

    ``asym`` gives the probabilities (a, b, c) that only the initiator, only
    the partner, or both update under the asymmetric-constrained rule;
    ``bound`` is the belief limit A of that rule.
    """

    alpha: float = 0.5
    beta: float = 0.0
    rule: str = "symmetric"
    asym: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    bound: float = math.inf

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if len(self.asym) != 3 or min(self.asym) < 0 or abs(sum(self.asym) - 1) > 1e-12:
            raise ValueError("asym probabilities (a, b, c) must be nonnegative and sum to 1")
        if not self.bound > 0:
            raise ValueError("bound A must be positive")
        if self.rule == "altafini" and not 0 < self.beta < 1:
            raise ValueError("the Altafini rule needs beta in (0, 1)")
        if self.rule == "asymmetric-constrained" and not math.isfinite(self.bound):
            raise ValueError("the asymmetric-constrained rule needs a finite bound A")

    @property
    def bounded(self) -> bool:
        return self.rule == "asymmetric-constrained"


# In-place kernels on Python lists. ``u`` is the uniform variate that picks
# the asymmetric branch; the other rules ignore it.


def _symmetric(x, i, j, sign, p, u=None):
    xi, xj = x[i], x[j]
    if sign == POSITIVE:
        a = p.alpha
        x[i] = (1 - a) * xi + a * xj
        x[j] = (1 - a) * xj + a * xi
    else:
        b = p.beta
        x[i] = (1 + b) * xi - b * xj
        x[j] = (1 + b) * xj - b * xi


def _altafini(x, i, j, sign, p, u=None):
    if sign == POSITIVE:
        _symmetric(x, i, j, sign, p)
        return
    xi, xj = x[i], x[j]
    b = p.beta
    x[i] = (1 - b) * xi - b * xj
    x[j] = (1 - b) * xj - b * xi


def _asymmetric(x, i, j, sign, p, u):
    theta = p.alpha if sign == POSITIVE else -p.beta
    A = p.bound
    a, b, _ = p.asym
    xi, xj = x[i], x[j]
    if u >= a + b or u < a:
        x[i] = min(A, max(-A, (1 - theta) * xi + theta * xj))
    if u >= a:
        x[j] = min(A, max(-A, (1 - theta) * xj + theta * xi))


_KERNELS = {"symmetric": _symmetric, "altafini": _altafini,
            "asymmetric-constrained": _asymmetric}


def _step(kernel, x, pair, sign, params, u=None):
    i, j = pair
    if i == j:
        raise ValueError("a selected pair needs two distinct nodes")
    out = [float(v) for v in x]
    kernel(out, i, j, sign, params, u)
    return np.array(out)


def step_symmetric(x, pair, sign, params: UpdateParams) -> np.ndarray:
    """Both endpoints move toward (positive edge) or away from (negative edge)
    each other; everything else is unchanged."""
    return _step(_symmetric, x, pair, sign, params)


def step_altafini(x, pair, sign, params: UpdateParams) -> np.ndarray:
    if not 0 < params.beta < 1:
        raise ValueError("the Altafini rule needs beta in (0, 1)")
    return _step(_altafini, x, pair, sign, params)


def step_asymmetric_constrained(x, pair, sign, params: UpdateParams, rng: RngStream) -> np.ndarray:
    """``pair[0]`` is the initiator. One uniform draw picks whether only the
    initiator, only the partner, or both update; results are clipped to
    [-A, A]."""
    return _step(_asymmetric, x, pair, sign, params, float(rng.random()))


def step_asymmetric_branch(x, pair, sign, params: UpdateParams, u: float) -> np.ndarray:
    """Deterministic form of :func:`step_asymmetric_constrained` for a given
    branch variate ``u`` in [0, 1)."""
    return _step(_asymmetric, x, pair, sign, params, u)


@dataclass(frozen=True)
class StopRule:
    """Early stopping on the spread: converged below ``eps_conv``, diverged
    above ``m_div``. ``None`` disables a side."""

    eps_conv: float | None = 1e-9
    m_div: float | None = None

    @classmethod
    def default(cls, x0) -> StopRule:
        return cls(1e-9, 1e6 * max(1.0, float(np.max(np.abs(x0)))))


@dataclass
class TrajectoryStats:
    """Recorded observables of one run.

    ``pair_max[i, j]`` is the largest |x_i - x_j| seen after any event.
    ``touch_upper``/``touch_lower`` count how often each vertex entered the
    band within ``0.05 * A`` of A / -A (being there at k = 0 counts once).
    ``cluster_since`` is the event index from which every vertex has sat in
    a boundary band with an unchanged assignment, or ``None``.
    """

    k: np.ndarray
    spread: np.ndarray
    x_final: np.ndarray
    events: int
    max_spread: float
    stop_reason: str | None = None
    stop_k: int | None = None
    snapshots: np.ndarray | None = None
    pair_max: np.ndarray | None = None
    touch_upper: np.ndarray | None = None
    touch_lower: np.ndarray | None = None
    cluster_since: int | None = None

    @property
    def cluster(self) -> tuple[int, ...] | None:
        """Boundary sign (+1/-1) per vertex while clustered."""
        if self.cluster_since is None:
            return None
        return tuple(1 if v > 0 else -1 for v in self.x_final)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["k", "spread"]
        if self.snapshots is not None:
            header += [f"x{i}" for i in range(self.snapshots.shape[1])]
        w.writerow(header)
        for r in range(len(self.k)):
            row = [str(int(self.k[r])), repr(float(self.spread[r]))]
            if self.snapshots is not None:
                row += [repr(float(v)) for v in self.snapshots[r]]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def sign_table(g: SignedGraph) -> list[list[int]]:
    table = [[0] * g.n for _ in range(g.n)]
    for u, v, s in g.edges:
        table[u][v] = table[v][u] = s
    return table


def simulate(g: SignedGraph, selection: SelectionModel, params: UpdateParams, x0,
             horizon: int, rng: RngStream, record_every: int = 1,
             stop: StopRule | None = None, snapshots: bool = False,
             track_pairs: bool = True) -> TrajectoryStats:
    """Run up to ``horizon`` selection events.

    Spread and (optionally) the state are recorded at k = 0, every
    ``record_every`` events, and at the last event. Stop conditions are
    evaluated at recorded events only. Self-pair draws advance k without
    changing the state. Random variates are consumed in fixed blocks, so a
    longer horizon with the same stream extends, rather than changes, a run.
    """
    n = g.n
    x = [float(v) for v in x0]
    if len(x) != n:
        raise ValueError(f"x0 has length {len(x)}, graph has {n} vertices")
    if horizon < 0 or record_every < 1:
        raise ValueError("need horizon >= 0 and record_every >= 1")
    A = params.bound
    bounded = params.bounded
    if bounded and any(abs(v) > A for v in x):
        raise ValueError("x0 must lie in [-A, A] under the constrained rule")
    kernel = _KERNELS[params.rule]
    signs = sign_table(g)
    eps = stop.eps_conv if stop is not None and stop.eps_conv is not None else -1.0
    mdiv = stop.m_div if stop is not None and stop.m_div is not None else math.inf

    pm = None
    if track_pairs:
        pm = [[abs(a - b) for b in x] for a in x]
    if math.isfinite(A):
        hi, lo = A - TOUCH_FRACTION * A, -A + TOUCH_FRACTION * A
        band = [1 if v >= hi else (-1 if v <= lo else 0) for v in x]
        up = [int(b == 1) for b in band]
        down = [int(b == -1) for b in band]
        outside = band.count(0)
        cluster_since = 0 if outside == 0 else None
    else:
        band = None

    ks, spreads, snaps = [], [], []

    def record(k):
        s = max(x) - min(x)
        ks.append(k)
        spreads.append(s)
        if snapshots:
            snaps.append(list(x))
        return s

    s = record(0)
    max_spread = s
    reason = None
    if s < eps:
        reason = "converged"
    elif s > mdiv:
        reason = "diverged"
    k = 0
    while reason is None and k < horizon:
        I, J = sample_pairs(selection, rng, BLOCK)
        Ub = rng.random(BLOCK).tolist()
        I, J = I.tolist(), J.tolist()
        for t in range(min(BLOCK, horizon - k)):
            k += 1
            i, j = I[t], J[t]
            if i != j:
                kernel(x, i, j, signs[i][j], params, Ub[t])
                if pm is not None:
                    for v in (i, j):
                        xv, row = x[v], pm[v]
                        for m in range(n):
                            d = abs(xv - x[m])
                            if d > row[m]:
                                row[m] = d
                                pm[m][v] = d
                if band is not None:
                    for v in (i, j):
                        xv = x[v]
                        b = 1 if xv >= hi else (-1 if xv <= lo else 0)
                        if b != band[v]:
                            outside += (b == 0) - (band[v] == 0)
                            band[v] = b
                            if b == 1:
                                up[v] += 1
                            elif b == -1:
                                down[v] += 1
                            cluster_since = k if outside == 0 else None
            if k % record_every == 0 or k == horizon:
                s = record(k)
                if s > max_spread:
                    max_spread = s
                if s < eps:
                    reason = "converged"
                    break
                if s > mdiv:
                    reason = "diverged"
                    break
    if ks[-1] != k:
        s = record(k)
        max_spread = max(max_spread, s)

    stats = TrajectoryStats(
        k=np.array(ks), spread=np.array(spreads), x_final=np.array(x), events=k,
        max_spread=max_spread, stop_reason=reason, stop_k=k if reason else None,
        snapshots=np.array(snaps) if snapshots else None,
        pair_max=np.array(pm) if pm is not None else None,
    )
    if band is not None:
        stats.touch_upper = np.array(up)
        stats.touch_lower = np.array(down)
        stats.cluster_since = cluster_since
    return stats
