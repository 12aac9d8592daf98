"""Mean and mean-square convergence analysis of the signed gossip dynamics.

All matrices are built from P_dag = (P + P')/n split along the edge signs:
L_pos and L_neg are the weighted Laplacians of the positive and negative
graphs, E{W} = I - alpha*L_pos + beta*L_neg and
E{W^2} = I - 2alpha(1-alpha)*L_pos + 2beta(1+beta)*L_neg.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import numerics
from .errors import ConvergenceError, PreconditionError
from .selection import SelectionModel
from .signed_graph import POSITIVE, SignedGraph

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SpectralModel:
    n: int
    p_dag: np.ndarray
    lap_pos: np.ndarray
    lap_neg: np.ndarray
    terms: tuple[tuple[int, int, float, int], ...]
    assumption2: dict
    positive_connected: bool

    @classmethod
    def build(cls, g: SignedGraph, selection: SelectionModel) -> SpectralModel:
        n = g.n
        if selection.n != n:
            raise ValueError("selection and graph sizes differ")
        P = selection.P
        p_dag = (P + P.T) / n
        e = g.edge_array
        u, v, sign = e[:, 0], e[:, 1], e[:, 2]
        w = p_dag[u, v]
        p_pos = np.zeros((n, n))
        p_neg = np.zeros((n, n))
        for target, mask in ((p_pos, sign == POSITIVE), (p_neg, sign != POSITIVE)):
            target[u[mask], v[mask]] = w[mask]
            target[v[mask], u[mask]] = w[mask]
        live = w > 0
        terms = list(zip(u[live].tolist(), v[live].tolist(), w[live].tolist(),
                         sign[live].tolist()))
        lap_pos = np.diag(p_pos.sum(axis=1)) - p_pos
        lap_neg = np.diag(p_neg.sum(axis=1)) - p_neg
        return cls(n, p_dag, lap_pos, lap_neg, tuple(terms),
                   selection.assumption2(), g.positive_connected())

    @property
    def U(self) -> np.ndarray:
        return numerics.averaging_projector(self.n)

    @property
    def has_negative(self) -> bool:
        return bool(np.any(self.lap_neg != 0))


def _check_params(alpha, beta=0.0):
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if beta < 0:
        raise ValueError("beta must be nonnegative")


def expected_w(model: SpectralModel, alpha: float, beta: float) -> np.ndarray:
    ew = np.eye(model.n) - alpha * model.lap_pos + beta * model.lap_neg
    assert np.allclose(ew.sum(axis=1), 1.0, atol=1e-12), "E{W} rows must sum to 1"
    return ew


def expected_w2(model: SpectralModel, alpha: float, beta: float) -> np.ndarray:
    return (np.eye(model.n) - 2 * alpha * (1 - alpha) * model.lap_pos
            + 2 * beta * (1 + beta) * model.lap_neg)


def f_value(model: SpectralModel, alpha: float, beta: float) -> float:
    """lambda_max(E{W} - U); below 1 the beliefs converge in expectation."""
    return numerics.lambda_max(expected_w(model, alpha, beta) - model.U)


def mean_verdict(f: float) -> str:
    if f < 1:
        return "converge"
    if f > 1:
        return "diverge"
    return "critical"


def lambda2_pos(model: SpectralModel) -> float:
    """Second-smallest eigenvalue of L_pos; exactly 0 when G_pos is disconnected."""
    if not model.positive_connected:
        return 0.0
    return float(numerics.eigen_sym(model.lap_pos)[0][1])


def beta_star(model: SpectralModel, alpha: float, tol: float = 1e-8) -> float:
    """Mean phase-transition threshold: the root of f(alpha, beta) = 1.

    Returns ``inf`` when there are no negative edges.
    """
    if not model.positive_connected:
        raise PreconditionError("beta_star needs a connected positive graph")
    if not 0 < alpha <= 1:
        raise PreconditionError("beta_star needs alpha in (0, 1]")
    if not model.has_negative:
        return math.inf
    try:
        return numerics.bisect_threshold(lambda b: f_value(model, alpha, b) - 1, 0.0, 1.0, tol)
    except ValueError as exc:
        raise PreconditionError(f"no finite threshold in range: {exc}") from None


class MeanSquareBounds(NamedTuple):
    conv: float
    f: float
    lmin: float

    @property
    def verdict(self) -> str:
        if self.conv < 1:
            return "converge"
        if self.f > 1 or self.lmin > 1:
            return "diverge"
        return "indeterminate"


def mean_square_bounds(model: SpectralModel, alpha: float, beta: float) -> MeanSquareBounds:
    """Sufficient conditions for mean-square convergence / divergence.

    ``conv`` and ``lmin`` are the extreme eigenvalues of E{W^2} - U, ``f``
    is the mean quantity; they bracket lambda_star.
    """
    w, _ = numerics.eigen_sym(expected_w2(model, alpha, beta) - model.U)
    return MeanSquareBounds(float(w[-1]), f_value(model, alpha, beta), float(w[0]))


def beta_natural(model: SpectralModel, alpha: float) -> float:
    """Largest beta with beta(1+beta) < r*alpha(1-alpha), where
    r = lambda_2(L_pos) / lambda_max(L_neg); below it beliefs converge a.s."""
    _check_params(alpha)
    lam2 = lambda2_pos(model)
    if lam2 <= ZERO_TOL:
        warnings.warn("positive graph disconnected: lambda_2(L_pos) = 0, beta_natural = 0",
                      stacklevel=2)
        return 0.0
    if not model.has_negative:
        return math.inf
    lmax_neg = numerics.lambda_max(model.lap_neg)
    r = lam2 / lmax_neg
    return (-1 + math.sqrt(1 + 4 * r * alpha * (1 - alpha))) / 2


def theta_terms(model: SpectralModel, alpha: float, beta: float):
    return [(i, j, w, -alpha if s == POSITIVE else beta) for i, j, w, s in model.terms]


def theta_matvec(model: SpectralModel, alpha: float, beta: float):
    terms = theta_terms(model, alpha, beta)
    return lambda v: numerics.theta_apply(model.n, terms, v)


class LambdaStar(NamedTuple):
    value: float
    converged: bool
    iterations: int


def lambda_star(model: SpectralModel, alpha: float, beta: float,
                tol: float = 1e-10, max_iter: int = 100_000) -> LambdaStar:
    """Spectral radius of Theta restricted to span{Theta^k vec(I - U)};
    mean-square convergence iff it is below 1."""
    seed = (np.eye(model.n) - model.U).reshape(-1)
    res = numerics.restricted_spectral_radius(theta_matvec(model, alpha, beta), seed, tol, max_iter)
    return LambdaStar(*res)


def er_threshold(alpha: float, beta: float) -> float:
    """Critical negative-edge density alpha/(alpha+beta) for Erdos-Renyi
    negative graphs over a complete graph."""
    if alpha + beta <= 0:
        raise ValueError("need alpha + beta > 0")
    return alpha / (alpha + beta)


def analysis_report(model: SpectralModel, alpha: float, beta: float,
                    require_connected: bool = False, with_lambda_star: bool = True) -> dict:
    """JSON-ready summary of every spectral criterion at (alpha, beta)."""
    _check_params(alpha, beta)
    if require_connected and not model.positive_connected:
        raise PreconditionError("positive graph is disconnected")
    f = f_value(model, alpha, beta)
    ms = mean_square_bounds(model, alpha, beta)
    try:
        bstar = beta_star(model, alpha)
    except PreconditionError:
        bstar = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bnat = beta_natural(model, alpha)
    report = {
        "alpha": alpha,
        "beta": beta,
        "f": f,
        "beta_star": _json_num(bstar),
        "beta_natural": _json_num(bnat),
        "ms_bounds": [ms.conv, ms.f, ms.lmin],
        "lambda_star": None,
        "verdicts": {
            "mean": mean_verdict(f),
            "phase": None if bstar is None else ("below" if beta < bstar else "above"),
            "mean_square_bounds": ms.verdict,
            "mean_square": None,
        },
        "assumption2": model.assumption2,
        "positive_connected": model.positive_connected,
    }
    if with_lambda_star:
        ls = lambda_star(model, alpha, beta)
        if not ls.converged:
            raise ConvergenceError(f"power iteration for lambda_star did not converge "
                                   f"in {ls.iterations} iterations")
        report["lambda_star"] = ls.value
        report["verdicts"]["mean_square"] = mean_verdict(ls.value)
    return report


def _json_num(v):
    if v is None or math.isinf(v):
        return None if v is None else "inf"
    return v
