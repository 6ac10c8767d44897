import numpy as np
import pytest

from mimo_ee import SystemParams, draw_channels, gain_matrix, mrt_beamformers
from mimo_ee import multicell as mcm
from mimo_ee.solver import Network, dinkelbach_solve, solve_network


def setup(L=3, M=20, K=3, seed=0, **kw):
    mc = mcm.MultiCellParams(SystemParams(M=M, K=K, **kw), L=L)
    rng = np.random.default_rng(seed)
    ch = mcm.layout_and_draw(mc, rng)
    return mc, ch, rng


def test_single_cell_reduction_draw():
    par = SystemParams(M=16, K=4)
    mc = mcm.MultiCellParams(par, L=1)
    ch = mcm.layout_and_draw(mc, np.random.default_rng(5))
    ref = draw_channels(par, np.random.default_rng(5))
    np.testing.assert_array_equal(ch.beta[0, 0], ref.beta)
    np.testing.assert_array_equal(ch.h[0, 0], ref.h)


def test_single_cell_reduction_solve():
    par = SystemParams(M=40, K=3)
    mc = mcm.MultiCellParams(par, L=1)
    ch = mcm.layout_and_draw(mc, np.random.default_rng(2))
    alloc = mcm.multicell_solve(mc, ch)  # no estimate: true channels
    g = ch.g[0, 0]
    G = gain_matrix(g, mrt_beamformers(g))
    np.testing.assert_allclose(mcm.gain_tensor(ch.g, mcm.beams(ch, estimated=False)), G, rtol=1e-12)
    sol = dinkelbach_solve(par, G)
    assert alloc.eta == pytest.approx(sol.eta, rel=1e-9)
    s, _ = mcm.multicell_sinr_rate(mc, G, alloc.p)
    np.testing.assert_allclose(s[0], np.diag(G) * sol.p / (G @ sol.p - np.diag(G) * sol.p + par.sigma2),
                               rtol=1e-6)


def test_pilots_orthonormal():
    for K, tau in ((1, 1), (5, 5), (3, 7)):
        P = mcm.pilot_matrix(K, tau)
        np.testing.assert_allclose(P @ P.conj().T, np.eye(K), atol=1e-12)


def test_noiseless_estimate_is_contaminated_sum():
    mc, ch, rng = setup(L=3, M=8, K=4, seed=9)
    gh = mcm.ls_estimate(ch, mc, rng, sigma2=0.0)
    want = ch.g.sum(axis=1)  # (L, K, M)
    for l in range(3):
        err = np.abs(gh[:, l] - want)
        assert np.all(err <= 1e-12 * np.abs(want).max())


def test_estimate_error_variance():
    par = SystemParams(M=4000, K=2)
    mc = mcm.MultiCellParams(par, L=2, p_u=0.05)
    rng = np.random.default_rng(1)
    ch = mcm.layout_and_draw(mc, rng)
    gh = mcm.ls_estimate(ch, mc, rng)
    e = gh[:, 0] - ch.g.sum(axis=1)
    v = np.mean(np.abs(e) ** 2)
    assert v == pytest.approx(par.sigma2 / mc.p_u, rel=0.05)


def test_cross_gain_below_own_without_shadowing():
    mc, ch, _ = setup(L=7, M=2, K=10, seed=4, sigma_sh_db=0.0)
    own = ch.beta[np.arange(7), np.arange(7)]  # (L, K)
    for j in range(7):
        for l in range(7):
            if j != l:
                assert np.all(ch.beta[j, l] < own[l])
                assert np.all(ch.distance[j, l] >= mc.base.cell_radius)


def test_cells_decouple_without_cross_gain():
    mc, ch, rng = setup(L=2, M=10, K=2, seed=3)
    w = mcm.beams(ch, estimated=False)
    G = mcm.gain_tensor(ch.g, w)
    G[:2, 2:] = 0
    G[2:, :2] = 0
    a, lam, phi = np.full((2, 2), 0.8), np.zeros((2, 2)), np.array([0.1, 0.1])
    p = np.full((2, 2), 0.1)
    q = p.copy()
    q[1] *= 7
    u1 = mcm.multicell_power_update(mc, G, a, lam, phi, 100.0, p)
    u2 = mcm.multicell_power_update(mc, G, a, lam, phi, 100.0, q)
    np.testing.assert_array_equal(u1[0], u2[0])


def test_cell_relabelling_equivariant():
    mc, ch, rng = setup(L=2, M=12, K=2, seed=11, r_min=0.0)
    G = mcm.gain_tensor(ch.g, mcm.beams(ch, estimated=False))
    perm = np.array([2, 3, 0, 1])
    s1 = solve_network(mc.base, mcm.network(mc, G))
    s2 = solve_network(mc.base, mcm.network(mc, G[np.ix_(perm, perm)]))
    assert s1.eta == pytest.approx(s2.eta, rel=1e-6)
    np.testing.assert_allclose(s1.p[perm], s2.p, rtol=1e-4, atol=1e-9)


def test_two_cells_one_user_update_matches_lagrangian_grid():
    # fixed coefficients and multipliers: the update's fixed point is the
    # maximiser of a Lagrangian that is concave in log power
    par = SystemParams(M=2, K=1, r_min=0.0)
    mc = mcm.MultiCellParams(par, L=2)
    ch = mcm.layout_and_draw(mc, np.random.default_rng(3))
    G = mcm.gain_tensor(ch.g, mcm.beams(ch, estimated=False))
    a = np.array([[0.9], [0.6]])
    lam = np.array([[0.2], [0.0]])
    phi = np.array([0.3, 0.05])
    eta = 2e6  # keeps the stationary point inside the grid box
    p = np.full((2, 1), 0.01)
    for _ in range(20000):
        q = mcm.multicell_power_update(mc, G, a, lam, phi, eta, p)
        if np.max(np.abs(q - p) / p) < 1e-13:
            break
        p = q
    x = np.logspace(-12, 0, 400)
    p1, p2 = np.meshgrid(x, x, indexing="ij")
    c = ((lam + 1) * a).ravel()
    s1 = G[0, 0] * p1 / (G[0, 1] * p2 + par.sigma2)
    s2 = G[1, 1] * p2 / (G[1, 0] * p1 + par.sigma2)
    Lg = (par.B * (c[0] * np.log2(par.gap * s1) + c[1] * np.log2(par.gap * s2))
          - (eta + phi[0]) * p1 - (eta + phi[1]) * p2)
    i, j = np.unravel_index(np.argmax(Lg), Lg.shape)
    step = np.log(x[1] / x[0])
    assert abs(np.log(p[0, 0] / x[i])) <= step
    assert abs(np.log(p[1, 0] / x[j])) <= step


def test_edge_users_see_comparable_cross_gain():
    par = SystemParams(sigma_sh_db=0.0)
    mc = mcm.MultiCellParams(par, L=2)
    R = par.cell_radius
    own = mcm.path_gain(par, np.ones(1), np.array([R]))[0]
    # user of cell 0 at the edge facing cell 1, which sits 2R away
    cross = mcm.path_gain(par, np.ones(1), np.array([mc.ring * R - R]))[0]
    assert own / 10 <= cross <= own * 10


def test_mirrored_cells_get_identical_sinr():
    mc, ch, _ = setup(L=2, M=6, K=2, seed=21)
    for arr in (ch.beta, ch.h):
        arr[1, 1] = arr[0, 0]
        arr[1, 0] = arr[0, 1]
    G = mcm.gain_tensor(ch.g, mcm.beams(ch, estimated=False))
    s, _ = mcm.multicell_sinr_rate(mc, G, np.full((2, 2), 0.3))
    np.testing.assert_allclose(s[0], s[1], rtol=1e-12)


def test_strong_coupling_lowers_network_ee():
    par = SystemParams(M=20, K=2, r_min=0.0)
    mc = mcm.MultiCellParams(par, L=2, ring=1.0)
    for seed in range(5):
        ch = mcm.layout_and_draw(mc, np.random.default_rng(seed))
        net = mcm.multicell_solve(mc, ch).eta
        iso = []
        for l in range(2):
            g = ch.g[l, l]
            iso.append(dinkelbach_solve(par, gain_matrix(g, mrt_beamformers(g))).eta)
        assert net < np.mean(iso)


def test_per_cell_constraints_hold():
    mc, ch, rng = setup(L=2, M=30, K=2, seed=6, r_min=500.0)
    mcm.ls_estimate(ch, mc, rng)
    w = mcm.beams(ch)
    alloc = mcm.multicell_solve(mc, ch, w)
    assert np.all(alloc.p.sum(axis=1) <= mc.base.p_max + 1e-6)
    _, r = mcm.multicell_sinr_rate(mc, mcm.designed_gains(ch, w), alloc.p)
    assert np.all(r >= 500.0 * (1 - 1e-3))
    assert alloc.eta == pytest.approx(mcm.network_ee(mc, mcm.designed_gains(ch, w), alloc.p), rel=1e-12)


def test_contamination_hurts_realized_ee():
    worse = 0
    n = 12
    for seed in range(n):
        mc, ch, rng = setup(L=3, M=30, K=2, seed=100 + seed, r_min=0.0)
        mcm.ls_estimate(ch, mc, rng)
        w = mcm.beams(ch)
        alloc = mcm.multicell_solve(mc, ch, w)
        worse += mcm.evaluate_on_true(mc, alloc, ch, w) <= alloc.eta
    assert worse >= 0.9 * n


def test_network_ee_counts_every_cell_circuit():
    mc, ch, _ = setup(L=2, M=4, K=1, seed=0)
    G = np.eye(2)
    p = np.array([0.5, 0.5])
    _, r = mcm.multicell_sinr_rate(mc, G, p)
    assert mcm.network_ee(mc, G, p) == pytest.approx(r.sum() / (1.0 + 2 * mc.base.p_circuit))


def test_multicell_params_validation():
    with pytest.raises(ValueError):
        mcm.MultiCellParams(SystemParams(K=4), tau=3)
    with pytest.raises(ValueError):
        mcm.MultiCellParams(L=0)
    assert mcm.MultiCellParams(SystemParams(K=4)).tau == 4
