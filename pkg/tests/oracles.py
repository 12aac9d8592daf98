"""Independent reference computations shared by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from signed_gossip.dynamics import UpdateParams, step_symmetric
from signed_gossip.selection import sample_pairs
from signed_gossip.signed_graph import POSITIVE, SignedGraph


def update_matrix(n, i, j, sign, alpha, beta):
    """W for one event, built column by column from the update rule itself."""
    params = UpdateParams(alpha=alpha, beta=beta)
    return np.column_stack([step_symmetric(np.eye(n)[k], (i, j), sign, params)
                            for k in range(n)])


def dense_theta(g: SignedGraph, P, alpha, beta):
    """E{(W-U) (x) (W-U)} summed over all selection outcomes with np.kron."""
    n = g.n
    U = np.full((n, n), 1.0 / n)
    theta = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            prob = P[i, j] / n
            if prob == 0:
                continue
            if i == j:
                W = np.eye(n)
            else:
                W = update_matrix(n, i, j, g.sign(i, j), alpha, beta)
            theta += prob * np.kron(W - U, W - U)
    return theta


def restricted_radius_dense(theta, seed, group_tol=1e-9, proj_tol=1e-9):
    """Largest eigenvalue of a symmetric matrix whose eigenspace is not
    orthogonal to ``seed``."""
    w, V = np.linalg.eigh(theta)
    seed = seed / np.linalg.norm(seed)
    best = None
    k = 0
    while k < len(w):
        m = k
        while m + 1 < len(w) and w[m + 1] - w[k] < group_tol:
            m += 1
        proj = np.linalg.norm(V[:, k:m + 1].T @ seed)
        if proj > proj_tol:
            best = w[m]
        k = m + 1
    return 0.0 if best is None else float(best)


def sampled_moments(g, selection, alpha, beta, draws, rng):
    """Monte Carlo means and standard errors of W and W^2 entries, sampling
    events with the package sampler and building W from the update rule."""
    n = g.n
    I, J = sample_pairs(selection, rng, draws)
    keys, counts = np.unique(np.stack([I, J], axis=1), axis=0, return_counts=True)
    freq = counts / draws
    mats = []
    for i, j in keys:
        W = np.eye(n) if i == j else update_matrix(n, i, j, g.sign(i, j), alpha, beta)
        mats.append(W)
    out = []
    for power in (1, 2):
        vals = np.array([np.linalg.matrix_power(W, power) for W in mats])
        mean = np.tensordot(freq, vals, axes=1)
        var = np.tensordot(freq, vals ** 2, axes=1) - mean ** 2
        se = np.sqrt(np.maximum(var, 0) / (draws - 1))
        out.append((mean, se))
    return out


def connected_signed_graphs(n):
    """Every connected signed graph on n labelled vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1, 1 << len(pairs)):
        present = [p for b, p in enumerate(pairs) if mask >> b & 1]
        if not _connected(n, present):
            continue
        for signs in itertools.product((1, -1), repeat=len(present)):
            yield SignedGraph(n, tuple((u, v, s) for (u, v), s in zip(present, signs)))


def _connected(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    return len({find(v) for v in range(n)}) == 1


def closed_form_beta_star_complete(g: SignedGraph, alpha):
    """n*alpha/lambda_max(L(G_neg)) - alpha for complete selection on K_n."""
    n = g.n
    A = np.zeros((n, n))
    for u, v, s in g.edges:
        if s != POSITIVE:
            A[u, v] = A[v, u] = 1
    L = np.diag(A.sum(axis=1)) - A
    return n * alpha / np.linalg.eigvalsh(L)[-1] - alpha
