"""Dense symmetric linear algebra for the spectral analysis."""

from __future__ import annotations

from typing import Callable, Iterable, NamedTuple

import numpy as np

from .errors import ConvergenceError

JACOBI_MAX_N = 64
JACOBI_MAX_SWEEPS = 100


def as_sym(m) -> np.ndarray:
    """Return a symmetric float copy of ``m`` (averaged with its transpose)."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return (a + a.T) / 2


def averaging_projector(n: int) -> np.ndarray:
    """U = 11'/n."""
    return np.full((n, n), 1.0 / n)


def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    idx = list(range(n)) + ([-1] if n % 2 else [])
    m = len(idx)
    rounds = []
    for _ in range(m - 1):
        pairs = [(idx[i], idx[m - 1 - i]) for i in range(m // 2)]
        rounds.append([(min(p), max(p)) for p in pairs if -1 not in p])
        idx = [idx[0], idx[-1]] + idx[1:-1]
    return [(np.array([p for p, _ in r]), np.array([q for _, q in r])) for r in rounds]


def jacobi_eigh(m, rel_tol: float = 1e-11, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigensolver for a dense symmetric matrix.

    Rotations are applied in round-robin order: each round annihilates n/2
    disjoint off-diagonal entries at once, which lets a whole round be one
    similarity transform. Stops when the off-diagonal Frobenius norm drops
    below ``rel_tol * ||m||_F``.
    """
    a = as_sym(m)
    n = a.shape[0]
    q = np.eye(n)
    # rescale so tiny or huge entries cannot underflow the stopping norm
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), q
    a = a / scale
    norm = np.linalg.norm(a)
    target = rel_tol * norm
    rounds = _round_robin(n)
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.linalg.norm(a[offmask]) < target:
            break
        for p, r in rounds:
            apq = a[p, r]
            # t = tan of the rotation angle, written to stay finite when apq == 0
            diff = a[r, r] - a[p, p]
            sgn = np.where(diff < 0, -1.0, 1.0)
            den = np.abs(diff) + np.sqrt(diff * diff + 4 * apq * apq)
            t = 2 * apq * sgn / np.where(den == 0, 1.0, den)
            c = 1 / np.sqrt(1 + t * t)
            s = t * c
            rot = np.eye(n)
            rot[p, p] = c
            rot[r, r] = c
            rot[p, r] = s
            rot[r, p] = -s
            a = rot.T @ a @ rot
            a[p, r] = a[r, p] = 0.0
            q = q @ rot
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a) * scale
    order = np.argsort(w, kind="stable")
    return w[order], q[:, order]


def eigen_sym(m, method: str = "auto"):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    ``method='auto'`` uses the Jacobi solver up to ``JACOBI_MAX_N`` and
    LAPACK (``numpy.linalg.eigh``) beyond.
    """
    a = as_sym(m)
    if method == "jacobi" or (method == "auto" and a.shape[0] <= JACOBI_MAX_N):
        return jacobi_eigh(a)
    if method in ("lapack", "auto"):
        return np.linalg.eigh(a)
    raise ValueError(f"unknown method {method!r}")


def lambda_max(m) -> float:
    return float(eigen_sym(m)[0][-1])


def lambda_min(m) -> float:
    return float(eigen_sym(m)[0][0])


def theta_apply(n: int, terms: Iterable[tuple[int, int, float, float]], v) -> np.ndarray:
    """Apply Theta = E{(W - U) (x) (W - U)} to ``v`` without forming Theta.

    Each term ``(i, j, weight, s)`` stands for the event W = I + s*d*d'
    with d = e_i - e_j, drawn with probability ``weight`` (s = -alpha on a
    positive edge, s = +beta on a negative one). Leftover probability mass is
    the no-op event W = I.

    With C = (I-U) V (I-U), each term contributes
    C + s*d*(d'V(I-U)) + s*((I-U)Vd)*d' + s^2*(d'Vd)*d*d',
    since d'(I-U) = d'. ``v`` is a row-major vec of the n x n matrix V.
    """
    V = np.asarray(v, dtype=float).reshape(n, n)
    VP = V - V.mean(axis=1, keepdims=True)          # V (I-U)
    PV = V - V.mean(axis=0, keepdims=True)          # (I-U) V
    C = VP - VP.mean(axis=0, keepdims=True)         # (I-U) V (I-U)
    out = C.copy()
    for i, j, w, s in terms:
        if w == 0.0 or s == 0.0:
            continue
        row = VP[i] - VP[j]
        col = PV[:, i] - PV[:, j]
        quad = V[i, i] - V[i, j] - V[j, i] + V[j, j]
        ws = w * s
        out[i] += ws * row
        out[j] -= ws * row
        out[:, i] += ws * col
        out[:, j] -= ws * col
        c = w * s * s * quad
        out[i, i] += c
        out[j, j] += c
        out[i, j] -= c
        out[j, i] -= c
    return out.reshape(-1)


class PowerResult(NamedTuple):
    value: float
    converged: bool
    iterations: int


def restricted_spectral_radius(apply: Callable[[np.ndarray], np.ndarray], seed,
                               tol: float = 1e-10, max_iter: int = 100_000) -> PowerResult:
    """Power iteration started exactly at ``seed``.

    The iterates never leave span{A^k seed}, so the Rayleigh quotient tends to
    the largest eigenvalue whose eigenspace the seed is not orthogonal to.
    Assumes ``apply`` is symmetric and maps the seed's Krylov space into a
    cone where Rayleigh quotients are nonnegative.
    """
    x = np.asarray(seed, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise ValueError("seed vector must be nonzero")
    x = x / nrm
    prev = None
    for it in range(1, max_iter + 1):
        y = apply(x)
        rq = float(x @ y)
        if rq < -1e-12:
            raise ConvergenceError(f"negative Rayleigh quotient {rq:.3e}; operator not PSD on seed space")
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return PowerResult(0.0, True, it)
        if prev is not None and abs(rq - prev) < tol:
            return PowerResult(rq, True, it)
        prev = rq
        x = y / ny
    return PowerResult(prev, False, max_iter)


def bisect_threshold(h: Callable[[float], float], lo: float, hi: float,
                     tol: float = 1e-8, max_doublings: int = 60) -> float:
    """Root of a nondecreasing ``h`` on ``[lo, hi]``.

    If ``h(hi) < 0`` the upper end is doubled (at most ``max_doublings``
    times, i.e. up to 2^60) before giving up.
    """
    if h(lo) > 0:
        raise ValueError(f"bracket failure: h({lo}) > 0")
    doublings = 0
    while h(hi) < 0:
        if doublings >= max_doublings:
            raise ValueError("bracket failure: no sign change below 2^60")
        lo, hi = hi, 2 * hi if hi > 0 else 1.0
        doublings += 1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
