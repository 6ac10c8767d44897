"""Single-cell downlink model: channels, MRT beams, SINR, rate and energy efficiency."""
from dataclasses import dataclass

import numpy as np

from .params import SystemParams


@dataclass(frozen=True)
class ChannelSet:
    """Channels of the K users of one cell.

    ``h`` and ``g`` have shape (K, M); ``beta`` and ``distance`` have shape (K,).
    """

    beta: np.ndarray
    h: np.ndarray
    distance: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return np.sqrt(self.beta)[:, None] * self.h

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def M(self) -> int:
        return self.h.shape[1]


def draw_distance(params: SystemParams, rng, size):
    # uniform in area over the annulus d0 <= d <= R
    u = rng.random(size)
    return np.sqrt(params.d0**2 + u * (params.cell_radius**2 - params.d0**2))


def draw_shadowing(params: SystemParams, rng, size):
    """Log-normal shadowing factor psi with 10 log10(psi) ~ N(0, sigma_sh^2)."""
    return 10 ** (params.sigma_sh_db * rng.standard_normal(size) / 10)


def path_gain(params: SystemParams, psi, d):
    return psi * (params.d0 / np.asarray(d)) ** params.v


def draw_large_scale(params: SystemParams, rng, K=None):
    """Return ``(beta, distance)`` for K users dropped uniformly in the cell."""
    K = params.K if K is None else K
    d = draw_distance(params, rng, K)
    psi = draw_shadowing(params, rng, K)
    return path_gain(params, psi, d), d


def draw_fast_fading(params: SystemParams, rng, shape=None):
    """i.i.d. CN(0, 1) entries, shape (K, M) unless ``shape`` is given."""
    shape = (params.K, params.M) if shape is None else shape
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2)


def draw_channels(params: SystemParams, rng) -> ChannelSet:
    beta, d = draw_large_scale(params, rng)
    h = draw_fast_fading(params, rng)
    return ChannelSet(beta=beta, h=h, distance=d)


def mrt_beamformers(g) -> np.ndarray:
    """Unit-norm MRT beams, one row per user, such that ``g_k @ w_k = ||g_k||``."""
    g = np.asarray(g)
    nrm = np.linalg.norm(g, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise ValueError("degenerate channel")
    return np.conj(g) / nrm


def gain_matrix(g, w) -> np.ndarray:
    """G[i, k] = |<g_i, w_k>|^2, the gain of beam k at user i."""
    return np.abs(np.asarray(g) @ np.asarray(w).T) ** 2


def interference(G, p, sigma2) -> np.ndarray:
    """Interference plus noise seen by every user (what each user measures and feeds back)."""
    Go = G - np.diag(np.diag(G))
    return Go @ p + sigma2


def sinr(G, p, sigma2) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.diag(G) * p / interference(G, p, sigma2)


def snr_gap(ber_target) -> float:
    return -2.0 / (3.0 * np.log(5.0 * ber_target))


def rate(params: SystemParams, s) -> np.ndarray:
    """Achievable rate B log2(1 + gap * sinr) in bit/s."""
    return params.B * np.log2(1 + params.gap * np.asarray(s))


def power_consumption(params: SystemParams, p, M=None, K=None) -> float:
    M = params.M if M is None else M
    K = params.K if K is None else K
    return float(np.sum(p)) + M * params.p_ant + params.p_fix + K * params.p_ue


def energy_efficiency(params: SystemParams, G, p) -> float:
    """Sum rate over consumed power, in bit/J."""
    r = rate(params, sinr(G, p, params.sigma2))
    K = len(p)
    return float(r.sum() / power_consumption(params, p, K=K))
