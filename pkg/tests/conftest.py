"""Shared fixtures: random valid instances and independent oracles.

The oracles here deliberately use a different route than the library:
dense LAPACK eigensolvers for root cross-checks and O(n^4) index sums
for the expectation formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from pushsum_rate import (
    CorrelationParams,
    MixingMatrix,
    Spectrum,
    build_mixing_matrix,
    make_graph,
    require_valid,
    symmetric_eigen,
)


@dataclass(frozen=True)
class Instance:
    mix: MixingMatrix
    spectrum: Spectrum
    params: CorrelationParams

    @property
    def c(self) -> float:
        return self.mix.c


def random_connected_graph(rng: np.random.Generator, n: int):
    """Random spanning tree plus a few extra edges."""
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    extra = int(rng.integers(0, n))
    for _ in range(extra):
        u, v = rng.choice(n, size=2, replace=False)
        edges.add((min(int(u), int(v)), max(int(u), int(v))))
    return make_graph(n, sorted(edges))


def random_params(rng: np.random.Generator, c: float) -> CorrelationParams:
    """Draw parameters inside the validity region with b_j >= 0.

    b_j >= 0 for every eigenvalue needs alpha <= beta + r^2 - beta c / 2
    (worst case at 1 - lambda = 2); beta c <= r^2 keeps the same-sender
    moment matrix consistent.
    """
    r = float(rng.uniform(0.2, 0.95))
    beta = float(rng.uniform(0.0, 1.0)) * r * r / c
    alpha_cap = min(2.0, beta + r * r - 0.5 * beta * c, beta + 1.0)
    alpha = float(rng.uniform(0.0, max(alpha_cap, 0.0)))
    u = float(rng.uniform(0.25, 4.0))
    q_hi = min(0.95, 0.99 / np.sqrt(u))
    q = float(rng.uniform(0.05, q_hi))
    return CorrelationParams(q=q, r=r, alpha=alpha, beta=beta, u=u)


def random_instance(
    rng: np.random.Generator, n_lo: int = 4, n_hi: int = 16
) -> Instance:
    n = int(rng.integers(n_lo, n_hi + 1))
    g = random_connected_graph(rng, n)
    maxdeg = int(g.degrees.max())
    c = float(rng.uniform(0.3, 0.98)) / maxdeg
    mix = build_mixing_matrix(g, mode="uniform-c", c=c)
    params = require_valid(random_params(rng, mix.c), mix.c, mix)
    return Instance(mix=mix, spectrum=symmetric_eigen(mix), params=params)


def random_regular_instance(
    rng: np.random.Generator, n_lo: int = 4, n_hi: int = 16
) -> Instance:
    """Circulant graph with row-stochastic mixing: unit column sums,
    the domain of the closed-form expectation formulas."""
    from pushsum_rate import circulant_graph

    n = int(rng.integers(n_lo, n_hi + 1))
    max_off = n // 2
    extra = np.arange(2, max_off + 1)
    k = int(rng.integers(0, len(extra) + 1))
    picked = rng.choice(extra, size=k, replace=False) if k else extra[:0]
    offsets = [1] + sorted(int(o) for o in picked)
    g = circulant_graph(n, offsets)
    mix = build_mixing_matrix(g, mode="row-stochastic-regular")
    params = require_valid(random_params(rng, mix.c), mix.c, mix)
    return Instance(mix=mix, spectrum=symmetric_eigen(mix), params=params)


def pair_moment(l, i, j, k, qv, rv, alpha, beta, p):
    """E[c_li c_jk] by the three-case moment rule (senders i and k)."""
    if i != k:
        return alpha * qv[i] * qv[k] * p[l, i] * p[j, k]
    if l != j:
        return beta * qv[i] ** 2 * p[l, i] * p[j, i]
    return qv[i] ** 2 * rv[i] ** 2 * p[l, i]


def oracle_dxc(x, qv, rv, alpha, beta, p):
    n = p.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                for l in range(n):
                    if l == i:
                        continue
                    acc += x[i, k] * pair_moment(l, i, j, k, qv, rv, alpha, beta, p)
            out[i, j] = acc
    return out


def oracle_dxd(x, qv, rv, alpha, beta, p):
    n = p.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                if k == i:
                    continue
                for l in range(n):
                    if l == j:
                        continue
                    acc += pair_moment(k, i, l, j, qv, rv, alpha, beta, p)
            out[i, j] = x[i, j] * acc
    return out


def oracle_cxc(x, qv, rv, alpha, beta, p):
    n = p.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                for l in range(n):
                    acc += x[k, l] * pair_moment(i, k, j, l, qv, rv, alpha, beta, p)
            out[i, j] = acc
    return out


def oracle_phi_star(x, qv, rv, alpha, beta, p):
    """X -> E[AXA^T] assembled term by term from the index-sum oracle."""
    n = p.shape[0]
    qmat = np.diag(qv)
    colsums = p.sum(axis=0)
    assert np.allclose(colsums, 1.0, atol=1e-9)
    dxc = oracle_dxc(x, qv, rv, alpha, beta, p)
    dxct = oracle_dxc(x.T, qv, rv, alpha, beta, p).T
    dxd = oracle_dxd(x, qv, rv, alpha, beta, p)
    cxc = oracle_cxc(x, qv, rv, alpha, beta, p)
    qx = qmat @ x
    xq = x @ qmat
    return x - qx + p @ qx - xq + xq @ p.T + dxd - dxc - dxct + cxc


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
