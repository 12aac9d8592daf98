"""Monte Carlo harness: repeated trials, classification and phenomenon checks.

Almost-sure statements are checked through finite-horizon proxies: a trial
is *converged* when its spread falls below ``eps_conv``, *diverged* when the
spread exceeds ``m_div`` at any recorded event, *clustered* when every
belief sits within 0.05*A of a boundary with an assignment that held for the
last 10% of the horizon, *oscillating* when some vertex entered both
boundary bands at least twice, and *undetermined* otherwise.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import spectral
from .dynamics import StopRule, UpdateParams, simulate
from .errors import PreconditionError
from .selection import RngStream, SelectionModel
from .signed_graph import BalanceVerdict, SignedGraph, complete_graph

log = logging.getLogger(__name__)

CLASSES = ("converged", "diverged", "clustered", "oscillating", "undetermined")
CLUSTER_WINDOW = 0.1
SURVIVOR_FACTOR = 100.0
# diverged runs are continued to SURVIVOR_RUN_ON * m_div before pair maxima are read
SURVIVOR_RUN_ON = 1e6


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one trial needs apart from its seed.

    ``x0`` is either an explicit belief vector or ``"uniform"``: uniform on
    [-A, A] for the constrained rule and on [-1, 1] otherwise, drawn from the
    trial's own stream. ``m_div=None`` means 10^6 * max(1, ||x0||_inf).
    """

    graph: SignedGraph
    selection: SelectionModel
    params: UpdateParams
    horizon: int
    x0: tuple[float, ...] | str = "uniform"
    record_every: int = 1
    eps_conv: float = 1e-9
    m_div: float | None = None
    track_pairs: bool = True

    def with_beta(self, beta: float) -> ExperimentConfig:
        return replace(self, params=replace(self.params, beta=beta))

    def initial_state(self, rng: RngStream) -> np.ndarray:
        if isinstance(self.x0, str):
            if self.x0 != "uniform":
                raise ValueError(f"unknown x0 spec {self.x0!r}")
            scale = self.params.bound if self.params.bounded else 1.0
            return rng.uniform(-scale, scale, self.graph.n)
        x0 = np.array(self.x0, dtype=float)
        if x0.shape != (self.graph.n,):
            raise ValueError("explicit x0 has the wrong length")
        return x0


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    classification: str
    events: int
    stop_k: int | None
    final_spread: float
    max_spread: float
    x0_norm: float
    pair_max: np.ndarray | None = field(default=None, repr=False)
    cluster: tuple[float, ...] | None = None
    touch_upper: tuple[int, ...] | None = None
    touch_lower: tuple[int, ...] | None = None
    x_final: np.ndarray | None = field(default=None, repr=False)


def trial_streams(base_seed: int, trial: int) -> tuple[RngStream, RngStream]:
    """(dynamics stream, initial-state stream) of one trial."""
    root = RngStream(base_seed, (trial,))
    return root.spawn(0), root.spawn(1)


def classify(stats, config: ExperimentConfig, m_div: float) -> str:
    if stats.stop_reason == "converged" or stats.spread[-1] < config.eps_conv:
        return "converged"
    if stats.max_spread > m_div:
        return "diverged"
    window = math.ceil(CLUSTER_WINDOW * config.horizon)
    if stats.cluster_since is not None and stats.cluster_since <= stats.events - window:
        return "clustered"
    if stats.touch_upper is not None and np.any((stats.touch_upper >= 2) & (stats.touch_lower >= 2)):
        return "oscillating"
    return "undetermined"


def run_trial(config: ExperimentConfig, base_seed: int, trial: int) -> TrialOutcome:
    dyn_rng, x0_rng = trial_streams(base_seed, trial)
    x0 = config.initial_state(x0_rng)
    norm = float(np.max(np.abs(x0)))
    m_div = config.m_div if config.m_div is not None else 1e6 * max(1.0, norm)
    stats = simulate(config.graph, config.selection, config.params, x0, config.horizon,
                     dyn_rng, record_every=config.record_every,
                     stop=StopRule(config.eps_conv, m_div), track_pairs=config.track_pairs)
    label = classify(stats, config, m_div)
    pair_max = stats.pair_max
    if label == "diverged" and config.track_pairs:
        # divergence can be detected before distant pairs ever interacted; the
        # replay extends the same trajectory, since variates come in fixed blocks
        dyn_rng, _ = trial_streams(base_seed, trial)
        pair_max = simulate(config.graph, config.selection, config.params, x0, config.horizon,
                            dyn_rng, record_every=config.record_every,
                            stop=StopRule(None, SURVIVOR_RUN_ON * m_div)).pair_max
    cluster = None
    if label == "clustered":
        A = config.params.bound
        cluster = tuple(A * s for s in stats.cluster)
    return TrialOutcome(
        trial=trial, classification=label, events=stats.events, stop_k=stats.stop_k,
        final_spread=float(stats.spread[-1]), max_spread=float(stats.max_spread),
        x0_norm=norm, pair_max=pair_max, cluster=cluster,
        touch_upper=None if stats.touch_upper is None else tuple(int(v) for v in stats.touch_upper),
        touch_lower=None if stats.touch_lower is None else tuple(int(v) for v in stats.touch_lower),
        x_final=stats.x_final,
    )


def _run_chunk(args):
    config, base_seed, indices = args
    return [run_trial(config, base_seed, t) for t in indices]


def run_trials(config: ExperimentConfig, trials: int, base_seed: int,
               workers: int = 1) -> list[TrialOutcome]:
    """Independent trials 0..trials-1; trial t depends only on (base_seed, t),
    so the result is identical for any ``workers``."""
    indices = list(range(trials))
    if workers <= 1 or trials < 2:
        return [run_trial(config, base_seed, t) for t in indices]
    chunks = [(config, base_seed, indices[w::workers]) for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = [o for chunk in pool.map(_run_chunk, chunks) for o in chunk]
    return sorted(results, key=lambda o: o.trial)


def fractions(outcomes: Sequence[TrialOutcome]) -> dict[str, float]:
    total = len(outcomes)
    counts = {c: 0 for c in CLASSES}
    for o in outcomes:
        counts[o.classification] += 1
    return {c: (counts[c] / total if total else 0.0) for c in CLASSES}


# --- phenomenon checks ---------------------------------------------------------


class NoSurvivorReport(NamedTuple):
    diverged: int
    passed: int
    fraction: float


def no_survivor_check(outcomes: Sequence[TrialOutcome],
                      factor: float = SURVIVOR_FACTOR) -> NoSurvivorReport:
    """Among diverged trials, the fraction in which *every* pair of nodes got
    separated by more than ``factor * ||x0||_inf`` at some event."""
    diverged = [o for o in outcomes if o.classification == "diverged"]
    if not diverged:
        raise ValueError("no diverged trials to check")
    passed = 0
    for o in diverged:
        if o.pair_max is None:
            raise ValueError("trials were run without pair tracking")
        pm = o.pair_max
        worst = min(pm[i, j] for i in range(len(pm)) for j in range(i + 1, len(pm)))
        passed += int(worst > factor * o.x0_norm)
    return NoSurvivorReport(len(diverged), passed, passed / len(diverged))


class LiveOrDieReport(NamedTuple):
    horizon: int
    undetermined_short: float
    undetermined_long: float
    shrinks: bool


def live_or_die_check(config: ExperimentConfig, trials: int, base_seed: int,
                      factor: int = 10, workers: int = 1) -> LiveOrDieReport:
    """Undetermined fraction at ``config.horizon`` and at ``factor`` times it.

    Because variates are consumed in fixed blocks, the long runs extend the
    short ones event for event.
    """
    p = config.params
    if p.rule != "symmetric" or not 0 < p.alpha < 1 or p.beta < 0:
        raise PreconditionError("live-or-die needs the symmetric rule, alpha in (0,1), beta >= 0")
    if not config.graph.positive_connected():
        raise PreconditionError("live-or-die needs a connected positive graph")
    short = fractions(run_trials(config, trials, base_seed, workers))["undetermined"]
    long_cfg = replace(config, horizon=config.horizon * factor)
    long = fractions(run_trials(long_cfg, trials, base_seed, workers))["undetermined"]
    return LiveOrDieReport(config.horizon, short, long, long <= short)


class ClusteringReport(NamedTuple):
    trials: int
    clustered: int
    consistent: int

    @property
    def fraction(self) -> float:
        """Consistent clustered trials over all trials."""
        return self.consistent / self.trials if self.trials else 0.0

    @property
    def consistency(self) -> float:
        """Consistent clustered trials over clustered trials."""
        return self.consistent / self.clustered if self.clustered else 0.0


def clustering_check(outcomes: Sequence[TrialOutcome], balance: BalanceVerdict | None,
                     kind: str = "strong") -> ClusteringReport:
    """Check that clustered trials are constant on each balance group; for
    strong balance the two groups must also sit on opposite boundaries."""
    if kind not in ("strong", "weak"):
        raise ValueError("kind must be 'strong' or 'weak'")
    partition = None if balance is None else getattr(balance, kind)
    if partition is None or len(partition) < 2:
        raise ValueError(f"a {kind} balance verdict with at least two groups is required")
    clustered = consistent = 0
    for o in outcomes:
        if o.classification != "clustered":
            continue
        clustered += 1
        values = [{o.cluster[v] for v in group} for group in partition]
        ok = all(len(vals) == 1 for vals in values)
        if ok and kind == "strong":
            ok = next(iter(values[0])) + next(iter(values[1])) == 0
        consistent += ok
    return ClusteringReport(len(outcomes), clustered, consistent)


def oscillation_check(outcomes: Sequence[TrialOutcome]) -> float:
    """Fraction of trials in which every vertex entered both boundary bands."""
    if not outcomes:
        return 0.0
    hits = 0
    for o in outcomes:
        if o.touch_upper is None:
            raise ValueError("oscillation needs bounded beliefs")
        hits += all(u >= 1 and d >= 1 for u, d in zip(o.touch_upper, o.touch_lower))
    return hits / len(outcomes)


# --- sweeps --------------------------------------------------------------------

SWEEP_COLUMNS = ("beta", "p", "trials", "frac_converged", "frac_diverged", "frac_clustered",
                 "frac_oscillating", "frac_undetermined", "f_value", "beta_star",
                 "beta_natural", "ms_conv_bound", "lambda_star")


@dataclass
class SweepResult:
    rows: list[dict]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            w.writerow(["" if row.get(c) is None else _fmt(row[c]) for c in SWEEP_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def zero_one_diagnostic(self, margin: float = 0.1) -> float:
        """Share of grid points whose converged fraction is within ``margin``
        of 0 or 1."""
        if not self.rows:
            return 0.0
        near = sum(min(r["frac_converged"], 1 - r["frac_converged"]) <= margin for r in self.rows)
        return near / len(self.rows)

    def transition_midpoint(self) -> float | None:
        """First grid value where the converged fraction drops to 1/2 or below."""
        for r in self.rows:
            if r["frac_converged"] <= 0.5:
                return r["beta"]
        return None


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_beta(config: ExperimentConfig, beta_grid: Sequence[float], trials: int,
               base_seed: int, workers: int = 1, with_lambda_star: bool = True) -> SweepResult:
    """Monte Carlo classification fractions along a beta grid, with the
    spectral quantities of each point alongside. Every grid point reuses the
    same trial seeds."""
    grid = list(beta_grid)
    if any(b2 < b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValueError("beta grid must be ascending")
    model = spectral.SpectralModel.build(config.graph, config.selection)
    alpha = config.params.alpha
    try:
        bstar = spectral.beta_star(model, alpha)
    except PreconditionError:
        bstar = None
    bnat = spectral.beta_natural(model, alpha) if model.positive_connected else None
    rows = []
    for beta in grid:
        fr = fractions(run_trials(config.with_beta(beta), trials, base_seed, workers))
        ms = spectral.mean_square_bounds(model, alpha, beta)
        ls = spectral.lambda_star(model, alpha, beta).value if with_lambda_star else None
        rows.append({
            "beta": beta, "p": None, "trials": trials,
            **{f"frac_{c}": fr[c] for c in CLASSES},
            "f_value": ms.f, "beta_star": bstar, "beta_natural": bnat,
            "ms_conv_bound": ms.conv, "lambda_star": ls,
        })
    result = SweepResult(rows)
    log.info("zero-one diagnostic: %.2f of grid points near 0 or 1", result.zero_one_diagnostic())
    return result


# --- random graphs and mean trajectories ----------------------------------------


def er_negative_graph(n: int, p: float, rng: RngStream) -> SignedGraph:
    """Complete graph on n vertices, each edge negative independently with
    probability p."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    iu, ju = np.triu_indices(n, 1)
    neg = rng.random(len(iu)) < p
    return complete_graph(n, zip(iu[neg].tolist(), ju[neg].tolist()))


def mean_trajectory(config: ExperimentConfig, trials: int, base_seed: int,
                    ks: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean and standard error of x(k) at the events ``ks``.

    Needs an explicit x0; runs without early stopping.
    """
    if isinstance(config.x0, str):
        raise ValueError("mean_trajectory needs an explicit x0")
    ks = list(ks)
    horizon = max(ks)
    x0 = np.array(config.x0, dtype=float)
    samples = np.empty((trials, len(ks), len(x0)))
    for t in range(trials):
        dyn_rng, _ = trial_streams(base_seed, t)
        stats = simulate(config.graph, config.selection, config.params, x0, horizon, dyn_rng,
                         snapshots=True, track_pairs=False)
        samples[t] = stats.snapshots[ks]
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(trials)
    return mean, se
