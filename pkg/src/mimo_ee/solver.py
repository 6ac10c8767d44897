"""Energy-efficient power allocation: Dinkelbach outer loop, SCA middle loop,
closed-form power update with subgradient multipliers inside.

The core works on a flattened network of N users.  ``G[i, k]`` is the gain of
beam k at user i and ``cell[i]`` is the base station serving user i.  A single
cell is the special case ``cell = 0``.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .params import SystemParams

LN2 = math.log(2.0)


class SolverError(RuntimeError):
    """Raised when the solver does not converge; carries the partial trace."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


class InfeasibleError(SolverError):
    pass


@dataclass(frozen=True)
class ScaCoefficients:
    a: np.ndarray
    b: np.ndarray


@dataclass
class DualMultipliers:
    phi: np.ndarray  # one per cell
    lam: np.ndarray  # one per user


@dataclass
class TraceRow:
    t1: int
    eta: float  # Dinkelbach parameter used in this iteration
    ee: float  # sum rate / power reached by this iteration's powers
    residual: float
    sum_rate: float
    surrogate_rate: float
    p: np.ndarray
    lam: np.ndarray
    phi: np.ndarray
    t2: int
    t3: int


@dataclass
class SolverTrace:
    rows: list = field(default_factory=list)

    @property
    def eta(self):
        return np.array([r.eta for r in self.rows])

    @property
    def ee(self):
        return np.array([r.ee for r in self.rows])

    @property
    def residual(self):
        return np.array([r.residual for r in self.rows])


@dataclass
class Solution:
    p: np.ndarray
    eta: float
    trace: SolverTrace
    duals: DualMultipliers
    sca: ScaCoefficients


@dataclass(frozen=True)
class Network:
    """What the base stations know: gains, cell membership and circuit power."""

    G: np.ndarray
    cell: np.ndarray
    p_circuit: float
    sigma2: float

    @property
    def N(self):
        return self.G.shape[0]

    @cached_property
    def Go(self):
        """Gains with the direct links zeroed."""
        return self.G - np.diag(np.diag(self.G))

    @cached_property
    def direct(self):
        return np.diag(self.G).copy()

    @property
    def n_cells(self):
        return int(self.cell.max()) + 1

    @classmethod
    def single(cls, params: SystemParams, G):
        G = np.asarray(G, dtype=float)
        return cls(G, np.zeros(len(G), dtype=int), params.p_circuit, params.sigma2)


def sca_update(s_lin, gap, s_min=1e-10) -> ScaCoefficients:
    """Tight lower bound a log2(s) + b <= log2(1 + s) at s = gap * sinr."""
    s = np.maximum(gap * np.asarray(s_lin, dtype=float), s_min)
    a = s / (1 + s)
    b = np.log2(1 + s) - a * np.log2(s)
    return ScaCoefficients(a, b)


def surrogate_rate(params, sca: ScaCoefficients, s_lin):
    s = np.maximum(params.gap * np.asarray(s_lin, dtype=float), params.s_min)
    return params.B * (sca.a * np.log2(s) + sca.b)


def power_update(params: SystemParams, net: Network, a, duals: DualMultipliers, eta, I):
    """Closed-form stationary power of every user given the others' powers.

    ``I`` is the interference plus noise each user feeds back.  Result is
    clamped below at ``p_floor``.
    """
    c = (duals.lam + 1) * a
    x = (c / I) @ net.Go  # x[i] = sum_{k != i} c_k G[k, i] / I_k
    den = x + (eta + duals.phi[net.cell]) * LN2 / params.B
    if np.any(den <= 0):
        raise SolverError("unbounded update")
    return np.maximum(c / den, params.p_floor)


def subgradient_step(params: SystemParams, duals: DualMultipliers, p, r, cell, t=0):
    """Projected subgradient step on the per-cell power and per-user rate multipliers."""
    n_cells = len(duals.phi)
    load = np.bincount(cell, weights=p, minlength=n_cells)
    g_phi, g_lam = params.gamma_phi, params.gamma_lambda
    if params.step_schedule == "diminishing":
        g_phi, g_lam = g_phi / math.sqrt(t + 1), g_lam / math.sqrt(t + 1)
    phi = np.maximum(0.0, duals.phi + g_phi * (load - params.p_max))
    lam = np.maximum(0.0, duals.lam + g_lam * (params.r_min - r))
    return DualMultipliers(phi, lam)


def rescale_cells(params: SystemParams, net: Network, p, c, eta, phi):
    """Move each cell's powers along their common scale to the best point.

    Equal scaling of one cell leaves its own SINR ratios untouched, so the
    fixed-point update only creeps along that direction.  Here the scale is
    solved directly from stationarity of the Lagrangian along it, capped by the
    cell power budget.  Floored users stay fixed.
    """
    p = p.copy()
    Go = net.Go
    floor = params.p_floor * (1 + 1e-9)
    for j in range(net.n_cells):
        inc = net.cell == j if net.n_cells > 1 else np.ones(net.N, bool)
        free = inc & (p > floor)
        if not free.any():
            continue
        A = Go[:, free] @ p[free]
        R = Go[:, ~free] @ p[~free] + net.sigma2
        P = c[free].sum()
        Q = p[free].sum()
        mu = (eta + phi[j]) * LN2 / params.B
        cA = c * A

        def f(x):
            s = math.exp(x)
            u = 1.0 / (s * A + R)
            N = s * (cA @ u)
            dN = s * ((cA * R) @ (u * u))
            return P - N - mu * s * Q, -dN - mu * s * Q

        room = params.p_max - p[inc & ~free].sum()
        hi = math.log(room / Q)
        if f(hi)[0] >= 0:
            x = hi
        else:
            lo = math.log(params.p_floor / p[free].max())
            if f(lo)[0] <= 0:
                x = lo
            else:
                # safeguarded Newton on a bracket in log scale
                x = min(max(0.0, lo), hi)
                if not lo < x < hi:
                    x = 0.5 * (lo + hi)
                for _ in range(100):
                    fx, dfx = f(x)
                    if fx > 0:
                        lo = x
                    else:
                        hi = x
                    xn = x - fx / dfx if dfx < 0 else 0.5 * (lo + hi)
                    if not lo < xn < hi:
                        xn = 0.5 * (lo + hi)
                    if abs(xn - x) < 1e-11:
                        x = xn
                        break
                    x = xn
        p[free] *= math.exp(x)
    return np.maximum(p, params.p_floor)


def newton_refine(params: SystemParams, net: Network, p, c, mu, steps=1, radius=1.0):
    """Projected Newton ascent in log power on the Lagrangian for fixed multipliers.

    The stationary points are exactly the fixed points of :func:`power_update`;
    this only speeds up reaching them (the plain update crawls when a user's
    best power is the floor).  ``mu`` is per user, in units of ln2/B.
    """
    Go = net.Go
    xf = math.log(params.p_floor)
    x = np.log(p)

    def value(x):
        I = Go @ np.exp(x) + net.sigma2
        return float(c @ (x - np.log(I)) - mu @ np.exp(x))

    F = value(x)
    for _ in range(steps):
        q = np.exp(x)
        I = Go @ q + net.sigma2
        V = Go * q[None, :] / I[:, None]
        cv = c @ V
        g = c - cv - mu * q
        free = ~((x <= xf + 1e-9) & (g < 0))
        if not free.any():
            break
        H = (V[:, free] * c[:, None]).T @ V[:, free]
        H[np.diag_indices_from(H)] -= cv[free] + mu[free] * q[free]
        gf = g[free]
        curv = cv[free] + mu[free] * q[free] + 1e-300
        try:
            d = np.linalg.solve(-H + 1e-12 * np.abs(H).max() * np.eye(len(gf)), gf)
        except np.linalg.LinAlgError:
            d = gf / curv
        if not gf @ d > 0:
            d = gf / curv
        dec = float(gf @ d)
        if dec < 1e-12 * c.sum():
            break
        d *= min(1.0, radius / np.abs(d).max())
        dec = float(gf @ d)
        step = 1.0
        while step > 1e-6:
            xn = x.copy()
            xn[free] = np.maximum(x[free] + step * d, xf)
            Fn = value(xn)
            if Fn >= F + 1e-4 * step * dec:
                break
            step *= 0.5
        else:
            break
        x, F = xn, Fn
    return np.exp(x)


def _change(net, new, old, rel=1e-3):
    # relative change, with users far below their cell's largest power measured
    # against that scale instead (they barely affect any rate)
    top = np.zeros(net.n_cells)
    np.maximum.at(top, net.cell, old)
    return float(np.max(np.abs(new - old) / np.maximum(old, rel * top[net.cell])))


def _feasible(params, net, p, r, slack=1e-3):
    load = np.bincount(net.cell, weights=p, minlength=net.n_cells)
    return bool(np.all(load <= params.p_max * (1 + 1e-9)) and np.all(r >= params.r_min * (1 - slack)))


def inner_solve(params: SystemParams, net: Network, a, eta, p, duals: DualMultipliers):
    """Alternate power updates and multiplier steps until both settle.

    The rate subgradient uses an extrapolated rate r + theta (r - r_prev),
    which damps the oscillation of the plain primal-dual iteration when the
    surrogate is nearly linear in the power ratios.

    Without rate targets a Newton step speeds up the power update (see
    :func:`newton_refine`); with them it makes the multipliers swing, so it is
    off unless ``params.newton == "on"``.

    Returns ``(p, duals, iterations, ok)``; ``ok`` is False when the rate
    targets look unreachable.
    """
    theta = params.extrapolation
    newton = params.newton == "on" or (params.newton == "auto" and params.r_min == 0)
    r_prev = None
    for t in range(params.max_t3):
        I = net.Go @ p + net.sigma2
        pn = power_update(params, net, a, duals, eta, I)
        c = (duals.lam + 1) * a
        mu = (eta + duals.phi[net.cell]) * LN2 / params.B
        if newton:
            pn = newton_refine(params, net, pn, c, mu)
        pn = rescale_cells(params, net, pn, c, eta, duals.phi)
        r = rate_of(params, net, pn)
        re = r if r_prev is None else r + theta * (r - r_prev)
        r_prev = r
        nd = subgradient_step(params, duals, pn, re, net.cell, t)
        dp = _change(net, pn, p)
        dd = max(np.max(np.abs(nd.phi - duals.phi)), np.max(np.abs(nd.lam - duals.lam), initial=0.0))
        p, duals = pn, nd
        # settled multipliers can still leave a small rate floor short
        if dp < params.tol_p and dd < params.tol_d and _feasible(params, net, p, r):
            return p, duals, t + 1, True
        if duals.lam.max(initial=0.0) > params.lambda_cap:
            return p, duals, t + 1, False
    # hit the cap: keep the iterate only if it already meets the constraints
    return p, duals, params.max_t3, _feasible(params, net, p, rate_of(params, net, p))


def interference_feedback(net: Network, p):
    """Interference plus noise measured by each user."""
    return net.Go @ p + net.sigma2


def net_sinr(net: Network, p):
    return net.direct * p / (net.Go @ p + net.sigma2)


def rate_of(params, net: Network, p):
    return params.B * np.log2(1 + params.gap * net_sinr(net, p))


def sca_loop(params: SystemParams, net: Network, eta, p, history=None):
    """Successive lower bounds of the rate, each maximised by :func:`inner_solve`.

    Returns ``(p, duals, sca, t2, t3)``.  The true objective after each round
    is appended to ``history`` when given.  Raises :class:`InfeasibleError` when
    the inner loop flags the rate targets as unreachable.
    """
    N = net.N
    sca = ScaCoefficients(np.ones(N), np.zeros(N))
    duals = DualMultipliers(np.full(net.n_cells, 0.1), np.full(N, 0.1))
    obj_old = None
    t3 = 0
    for t2 in range(1, params.max_t2 + 1):
        pn, duals, it, ok = inner_solve(params, net, sca.a, eta, p, duals)
        t3 += it
        if not ok:
            raise InfeasibleError("possibly infeasible r_min")
        s = net_sinr(net, pn)
        sca = sca_update(s, params.gap, params.s_min)
        change = _change(net, pn, p)
        p = pn
        R = params.B * np.log2(1 + params.gap * s)
        obj = R.sum() - eta * (p.sum() + net.p_circuit)
        if history is not None:
            history.append(obj)
        # the objective can be flat along a drifting power ratio; stop once it stalls
        if change < params.tol_sca or (obj_old is not None and abs(obj - obj_old) <= 1e-7 * R.sum()):
            break
        obj_old = obj
    return p, duals, sca, t2, t3


def initial_powers(params: SystemParams, net: Network):
    """Share each cell's budget in proportion to the direct gains.

    An equal split is a saddle point for two symmetric users, the iteration
    then never leaves it.
    """
    d = np.diag(net.G)
    tot = np.bincount(net.cell, weights=d, minlength=net.n_cells)
    return np.maximum(params.p_max * d / tot[net.cell], params.p_floor)


def min_power_for_targets(params: SystemParams, net: Network):
    """Smallest powers giving every user exactly the rate target, or None.

    Meeting SINR target g everywhere means p = g (D^-1 Go p + D^-1 sigma2),
    a linear system with a nonnegative solution iff the spectral radius of
    g D^-1 Go is below one.
    """
    if params.r_min <= 0:
        return np.zeros(net.N)
    target = (2 ** (params.r_min / params.B) - 1) / params.gap
    d = np.diag(net.G)
    F = target * (net.G - np.diag(d)) / d[:, None]
    if net.N > 1 and np.max(np.abs(np.linalg.eigvals(F))) >= 1:
        return None
    p = np.linalg.solve(np.eye(net.N) - F, target * net.sigma2 / d)
    if np.any(p < 0):
        return None
    return p


def solve_network(params: SystemParams, net: Network, p0=None) -> Solution:
    """Maximise sum rate over total consumed power for one network realisation.

    Instances whose rate targets cannot be met within the power budget are
    rejected up front with :class:`InfeasibleError`.
    """
    pmin = min_power_for_targets(params, net)
    if pmin is None or np.any(np.bincount(net.cell, weights=pmin, minlength=net.n_cells) > params.p_max):
        raise InfeasibleError("rate targets unreachable within the power budget", SolverTrace())
    try:
        return _dinkelbach(params, net, p0)
    except InfeasibleError:
        # the precheck proved feasibility; near the boundary the multipliers
        # just need longer to settle
        return _dinkelbach(params.with_(max_t3=5 * params.max_t3), net, p0)


def _dinkelbach(params, net, p0):
    p = initial_powers(params, net) if p0 is None else np.maximum(np.asarray(p0, float), params.p_floor)
    eta = 0.0
    trace = SolverTrace()
    for t1 in range(1, params.max_t1 + 1):
        p, duals, sca, t2, t3 = _sca_or_raise(params, net, eta, p, trace)
        s = net_sinr(net, p)
        r = params.B * np.log2(1 + params.gap * s)
        R = r.sum()
        P = p.sum() + net.p_circuit
        A = R - eta * P
        trace.rows.append(TraceRow(t1, eta, R / P, A, R, surrogate_rate(params, sca, s).sum(),
                                   p.copy(), duals.lam.copy(), duals.phi.copy(), t2, t3))
        if A <= params.eps * R:
            return Solution(p, float(R / P), trace, duals, sca)
        eta = R / P
    raise SolverError("Dinkelbach did not converge", trace)


def _sca_or_raise(params, net, eta, p, trace):
    try:
        return sca_loop(params, net, eta, p)
    except InfeasibleError as e:
        e.trace = trace
        raise


def dinkelbach_solve(params: SystemParams, G, p0=None) -> Solution:
    """Single-cell entry point; ``G`` is the K x K gain matrix of :func:`gain_matrix`."""
    return solve_network(params, Network.single(params, G), p0)
