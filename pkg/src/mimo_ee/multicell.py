"""Multi-cell network with reuse-1 pilots, LS channel estimates and the
network-wide power allocation designed on those estimates."""
from dataclasses import dataclass, field
import math

import numpy as np

from .params import SystemParams
from .sysmodel import (draw_distance, draw_shadowing, draw_fast_fading, path_gain,
                       mrt_beamformers, interference, rate)
from . import solver
from .solver import Network, Solution


@dataclass(frozen=True)
class MultiCellParams:
    base: SystemParams = field(default_factory=SystemParams)
    L: int = 7
    p_u: float = 0.1
    tau: int = None
    ring: float = 2.0  # neighbour distance in cell radii

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.tau is None:
            object.__setattr__(self, "tau", self.base.K)
        if self.tau < self.base.K:
            raise ValueError("tau must be >= K for orthogonal pilots")
        if not self.p_u > 0:
            raise ValueError("p_u must be positive")

    @property
    def centers(self):
        c = np.zeros((self.L, 2))
        n = self.L - 1
        if n:
            ang = 2 * np.pi * np.arange(n) / n
            c[1:] = self.ring * self.base.cell_radius * np.c_[np.cos(ang), np.sin(ang)]
        return c


@dataclass
class MultiCellChannels:
    """``h[j, l, k]`` is the fading vector from BS j to user k of cell l."""

    beta: np.ndarray  # (L, L, K)
    h: np.ndarray  # (L, L, K, M)
    distance: np.ndarray  # (L, L, K)
    position: np.ndarray  # (L, K, 2)
    phi: np.ndarray  # (K, tau) pilot rows
    g_hat: np.ndarray = None  # (L, L, K, M) once estimated

    @property
    def g(self):
        return np.sqrt(self.beta)[..., None] * self.h


@dataclass
class MultiCellAllocation:
    p: np.ndarray  # (L, K)
    lam: np.ndarray  # (L, K)
    phi: np.ndarray  # (L,)
    eta: float
    solution: Solution = None


def pilot_matrix(K, tau):
    """K rows of the tau-point DFT, orthonormal."""
    t = np.arange(tau)
    return np.exp(-2j * np.pi * np.outer(np.arange(K), t) / tau) / np.sqrt(tau)


def layout_and_draw(mc: MultiCellParams, rng) -> MultiCellChannels:
    """Drop K users per cell and draw every BS-user channel.

    Draw order matches :func:`sysmodel.draw_channels`, so L = 1 gives the
    same channels for the same seed.
    """
    par, L, K, M = mc.base, mc.L, mc.base.K, mc.base.M
    d = draw_distance(par, rng, (L, K))
    psi = draw_shadowing(par, rng, (L, L, K))
    h = draw_fast_fading(par, rng, (L, L, K, M))
    ang = 2 * np.pi * rng.random((L, K))
    c = mc.centers
    pos = c[:, None, :] + d[..., None] * np.stack([np.cos(ang), np.sin(ang)], -1)
    dist = np.linalg.norm(pos[None, :, :, :] - c[:, None, None, :], axis=-1)
    idx = np.arange(L)
    dist[idx, idx] = d
    dist = np.maximum(dist, par.d0)
    beta = path_gain(par, psi, dist)
    return MultiCellChannels(beta, h, dist, pos, pilot_matrix(K, mc.tau))


def ls_estimate(ch: MultiCellChannels, mc: MultiCellParams, rng, sigma2=None):
    """Least-squares estimates from one reuse-1 pilot burst.

    ``Y_j = sum_l sqrt(p_u) G_jl Phi + Z_j`` and ``g_hat_jlk = Y_j phi_k^H / sqrt(p_u)``.
    Every cell uses the same pilots, so the estimate of user k is the same
    for all l.  Stores and returns ``g_hat``.
    """
    L, K, M = ch.h.shape[0], ch.h.shape[2], ch.h.shape[3]
    sigma2 = mc.base.sigma2 if sigma2 is None else sigma2
    tau = ch.phi.shape[1]
    G = np.swapaxes(ch.g, -1, -2)  # (L, L, M, K)
    Y = math.sqrt(mc.p_u) * (G @ ch.phi).sum(axis=1)  # (L, M, tau)
    Z = math.sqrt(sigma2 / 2) * (rng.standard_normal((L, M, tau)) + 1j * rng.standard_normal((L, M, tau)))
    Y = Y + Z
    est = np.swapaxes(Y @ ch.phi.conj().T, -1, -2) / math.sqrt(mc.p_u)  # (L, K, M)
    ch.g_hat = np.broadcast_to(est[:, None], (L, L, K, M)).copy()
    return ch.g_hat


def beams(ch: MultiCellChannels, estimated=True):
    """MRT of each BS on its own users' channels, shape (L, K, M)."""
    src = ch.g_hat if estimated else ch.g
    L = src.shape[0]
    own = src[np.arange(L), np.arange(L)]
    return mrt_beamformers(own)


def gain_tensor(g, w):
    """Flattened gains: entry ((l,k), (j,m)) is |<g_jlk, w_jm>|^2."""
    L, _, K, _ = g.shape
    X = np.einsum("jlka,jma->lkjm", g, w)
    return (np.abs(X) ** 2).reshape(L * K, L * K)


def designed_gains(ch: MultiCellChannels, w):
    """Gains the base stations plan with.

    Cross gains and interference are measured by the users on the true
    channels and fed back; the direct gain is what the BS sees through its
    own estimate.
    """
    Gd = gain_tensor(ch.g, w)
    L = w.shape[0]
    own = ch.g_hat[np.arange(L), np.arange(L)]  # (L, K, M)
    direct = np.abs(np.einsum("lka,lka->lk", own, w)) ** 2
    np.fill_diagonal(Gd, direct.ravel())
    return Gd


def network(mc: MultiCellParams, G):
    L, K = mc.L, mc.base.K
    return Network(np.asarray(G, float), np.repeat(np.arange(L), K), L * mc.base.p_circuit, mc.base.sigma2)


def multicell_sinr_rate(mc: MultiCellParams, G, p):
    """Per-user SINR and rate over the whole network, each (L, K)."""
    p = np.asarray(p, float).ravel()
    s = np.diag(G) * p / interference(G, p, mc.base.sigma2)
    shape = (mc.L, mc.base.K)
    return s.reshape(shape), rate(mc.base, s).reshape(shape)


def network_ee(mc: MultiCellParams, G, p):
    """Total rate over total consumed power of all cells."""
    _, r = multicell_sinr_rate(mc, G, p)
    return float(r.sum() / (np.sum(p) + mc.L * mc.base.p_circuit))


def multicell_power_update(mc: MultiCellParams, G, a, lam, phi, eta, p):
    """One closed-form power update of every user, arrays shaped (L, K)."""
    net = network(mc, G)
    p = np.asarray(p, float).ravel()
    I = interference(net.G, p, net.sigma2)
    duals = solver.DualMultipliers(np.asarray(phi, float).ravel(), np.asarray(lam, float).ravel())
    return solver.power_update(mc.base, net, np.asarray(a, float).ravel(), duals, eta, I).reshape(mc.L, -1)


def multicell_solve(mc: MultiCellParams, ch: MultiCellChannels, w=None) -> MultiCellAllocation:
    """Network power allocation planned on the estimated channels."""
    if w is None:
        w = beams(ch, estimated=ch.g_hat is not None)
    G = designed_gains(ch, w) if ch.g_hat is not None else gain_tensor(ch.g, w)
    sol = solver.solve_network(mc.base, network(mc, G))
    shape = (mc.L, mc.base.K)
    return MultiCellAllocation(sol.p.reshape(shape), sol.duals.lam.reshape(shape), sol.duals.phi, sol.eta, sol)


def evaluate_on_true(mc: MultiCellParams, alloc: MultiCellAllocation, ch: MultiCellChannels, w):
    """Network EE when the planned beams and powers meet the true channels."""
    return network_ee(mc, gain_tensor(ch.g, w), alloc.p)
