"""Brute-force references for testing the solver.

Nothing here imports the solver.
"""
from dataclasses import dataclass
import itertools

import numpy as np

from .params import SystemParams
from .sysmodel import rate


class GridInfeasible(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n: int = 1000
    lo: float = 1e-12
    hi: float = 1.0

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid needs at least 16 points per dimension")
        if not 0 < self.lo < self.hi:
            raise ValueError("need 0 < lo < hi")

    def points(self):
        return np.logspace(np.log10(self.lo), np.log10(self.hi), self.n)


def grid_search_ee(params: SystemParams, G, grid: GridSpec = None, r_min=None, chunk=250):
    """Exhaustive search of sum-rate / power over a log grid of per-user powers.

    Returns ``(p_best, eta_best)``.  Rate constraints use the exact rate.
    """
    G = np.asarray(G, dtype=float)
    K = G.shape[0]
    if K > 3:
        raise ValueError("grid search is limited to K <= 3")
    grid = grid or GridSpec(hi=params.p_max)
    if grid.n**K > 1e7 + 1:
        raise ValueError("grid too large")
    r_min = params.r_min if r_min is None else r_min
    pts = grid.points()
    sig2 = params.sigma2
    Go = G - np.diag(np.diag(G))
    best, arg = -np.inf, None
    # the first axis is processed in chunks to bound memory
    for start in range(0, len(pts), chunk):
        axes = [pts[start:start + chunk]] + [pts] * (K - 1)
        P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        I = P @ Go.T + sig2
        r = rate(params, np.diag(G) * P / I)
        tot = P.sum(-1)
        ok = (tot <= params.p_max * (1 + 1e-12)) & np.all(r >= r_min * (1 - 1e-3), axis=-1)
        eta = np.where(ok, r.sum(-1) / (tot + params.p_circuit), -np.inf)
        i = np.unravel_index(np.argmax(eta), eta.shape)
        if eta[i] > best:
            best, arg = eta[i], P[i].copy()
    if not np.isfinite(best):
        raise GridInfeasible("infeasible at grid resolution")
    return arg, float(best)


def scan_1d(params: SystemParams, gain, n=100000, r_min=None):
    """Single-user reference: dense log scan of the scalar problem."""
    r_min = params.r_min if r_min is None else r_min
    p = np.logspace(np.log10(params.p_floor), np.log10(params.p_max), n)
    r = rate(params, p * gain / params.sigma2)
    eta = np.where(r >= r_min * (1 - 1e-3), r / (p + params.p_circuit), -np.inf)
    i = int(np.argmax(eta))
    return p[i], float(eta[i])


def sca_bound_check(s, a, b, slack=1e-12):
    """Count pairs where a log2(s) + b exceeds log2(1 + s) by more than ``slack``."""
    s, a, b = np.broadcast_arrays(np.asarray(s, float), np.asarray(a, float), np.asarray(b, float))
    return int(np.count_nonzero(a * np.log2(s) + b > np.log2(1 + s) + slack))


def max_min_sinr(G, sigma2, p_max, iters=5000, tol=1e-12):
    """Largest SINR every user can reach at once with total power ``p_max``.

    Standard normalised fixed point p <- p / sinr(p), rescaled to the budget.
    Decides feasibility of a common SINR target independently of the solver.
    """
    G = np.asarray(G, dtype=float)
    d = np.diag(G)
    Go = G - np.diag(d)
    p = np.full(len(d), p_max / len(d))
    prev = 0.0
    for _ in range(iters):
        s = d * p / (Go @ p + sigma2)
        p = p / s
        p *= p_max / p.sum()
        m = s.min()
        if abs(m - prev) <= tol * m:
            break
        prev = m
    s = d * p / (Go @ p + sigma2)
    return float(s.min())


def min_sinr_for(params: SystemParams, r_min=None):
    r_min = params.r_min if r_min is None else r_min
    return (2 ** (r_min / params.B) - 1) / params.gap


def lagrangian_grid(params: SystemParams, G, a, lam, phi, eta, n=400, lo=1e-12, hi=1.0):
    """Maximiser of the per-round Lagrangian over a K=2 log-power grid."""
    G = np.asarray(G, float)
    pts = np.logspace(np.log10(lo), np.log10(hi), n)
    P = np.stack(np.meshgrid(pts, pts, indexing="ij"), -1)
    Go = G - np.diag(np.diag(G))
    s = params.gap * np.diag(G) * P / (P @ Go.T + params.sigma2)
    c = (np.asarray(lam) + 1) * np.asarray(a)
    L = params.B * (c * np.log2(s)).sum(-1) - (eta + phi) * P.sum(-1)
    i = np.unravel_index(np.argmax(L), L.shape)
    return P[i]
