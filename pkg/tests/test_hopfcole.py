"""Height/transform fields, the discrete heat identity, pairings, and the
exact martingale diagnostics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fasep.configs import HalfLineConfig, make_initial
from fasep.dynamics import (
    apply_transition,
    enabled_transitions_asep,
    simulate_ctmc,
    replica_seed,
    weak_asym_params,
)
from fasep.hopfcole import (
    HopfColeField,
    corrected_test_function,
    discrete_heat_residual,
    height_field,
    hopf_cole,
    instrumented_run,
    laplacian_mu,
    laplacian_mu_array,
    martingale_residual,
    pairing_eps,
    qv_rate_exact,
    qv_weak_asym_expansion,
    rescale,
    smooth_test_functions,
)

EPS = 0.1
PAR = weak_asym_params(EPS)


# --------------------------------------------------------------------------
# height field


def test_height_empty_is_minus_x():
    h = height_field(make_initial("empty_halfline"), n=6)
    assert h.h0 == 0
    assert list(h.values) == [0, -1, -2, -3, -4, -5, -6]


def test_height_one_injection_particle_at_three():
    cfg = HalfLineConfig((0, 0, 1), injections=1)
    h = height_field(cfg, n=4)
    assert list(h.values) == [-2, -3, -4, -3, -4]


def test_height_solid_block_after_n_injections():
    n = 4
    cfg = HalfLineConfig((1,) * n, injections=n)
    h = height_field(cfg, n=n)
    assert list(h.values) == [-2 * n + x for x in range(n + 1)]


def test_height_truncation_beyond_storage_is_empty():
    cfg = HalfLineConfig((1,), injections=0)
    h = height_field(cfg, n=4)
    assert list(h.values) == [0, 1, 0, -1, -2]


# --------------------------------------------------------------------------
# transform


def test_transform_of_empty_start_is_geometric():
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=30), 0.0, PAR)
    np.testing.assert_allclose(Z.values, PAR.mu ** np.arange(31), rtol=1e-14)
    assert Z.boundary == pytest.approx(PAR.mu * Z.values[0], rel=1e-15)


def test_transform_frozen_value():
    # h(2) = -2 at eps = 0.1 and t = 0 gives Z(2) = e^{-0.2}
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=4), 0.0, PAR)
    assert Z.values[2] == pytest.approx(math.exp(-0.2), rel=1e-15)
    assert Z.values[2] == pytest.approx(0.8187307530779818, rel=1e-14)


def test_transform_time_factor():
    t = 7.5
    Z0 = hopf_cole(height_field(make_initial("empty_halfline"), n=5), 0.0, PAR)
    Zt = hopf_cole(height_field(make_initial("empty_halfline"), n=5), t, PAR)
    np.testing.assert_allclose(Zt.values, math.exp(PAR.nu * t) * Z0.values,
                               rtol=1e-14)


@settings(max_examples=60, deadline=None)
@given(bits=st.lists(st.integers(0, 1), max_size=12),
       inj=st.integers(0, 5))
def test_transform_log_identity(bits, inj):
    # log Z - eps*h - nu*t vanishes to machine precision, and Z > 0
    cfg = HalfLineConfig(tuple(bits), injections=inj)
    t = 3.25
    h = height_field(cfg)
    Z = hopf_cole(h, t, PAR)
    assert np.all(Z.values > 0)
    resid = np.log(Z.values) - EPS * h.values - PAR.nu * t
    assert np.max(np.abs(resid)) < 1e-12


# --------------------------------------------------------------------------
# lattice Laplacian with the mu boundary row


def test_laplacian_of_geometric_profile():
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=12), 0.0, PAR)
    # interior: Delta_mu mu^x = (mu + 1/mu - 2) mu^x = 2 nu Z(x)
    for x in range(1, 10):
        assert laplacian_mu(Z, x) == pytest.approx(2 * PAR.nu * Z.values[x],
                                                   rel=1e-12)
    # wall row: mu^1 + (mu - 2) mu^0 = 2 (mu - 1)
    assert laplacian_mu(Z, 0) == pytest.approx(2 * (PAR.mu - 1.0), rel=1e-14)
    assert laplacian_mu(Z, 0) == pytest.approx(-0.190325163928081, abs=1e-12)


def test_laplacian_range_errors():
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=4), 0.0, PAR)
    with pytest.raises(IndexError):
        laplacian_mu(Z, -1)
    with pytest.raises(IndexError):
        laplacian_mu(Z, len(Z.values) - 1)


def test_laplacian_array_matches_scalar():
    rng = np.random.default_rng(7)
    vals = rng.uniform(0.1, 2.0, size=15)
    Z = HopfColeField(0.0, vals, PAR.mu * vals[0], PAR)
    arr = laplacian_mu_array(vals, PAR.mu)
    for x in range(len(vals) - 1):
        assert arr[x] == pytest.approx(laplacian_mu(Z, x), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_laplacian_self_adjoint(seed):
    # sum_x g Delta_mu f == sum_x f Delta_mu g for decaying vectors
    rng = np.random.default_rng(seed)
    n = 14
    f = np.zeros(n)
    g = np.zeros(n)
    f[:n - 2] = rng.normal(size=n - 2)
    g[:n - 2] = rng.normal(size=n - 2)
    lhs = float(np.sum(g[:-1] * laplacian_mu_array(f, PAR.mu)))
    rhs = float(np.sum(f[:-1] * laplacian_mu_array(g, PAR.mu)))
    assert lhs == pytest.approx(rhs, abs=1e-12)


# --------------------------------------------------------------------------
# discrete heat identity: nu Z + L Z = D Delta_mu Z


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.3, 0.6])
def test_heat_identity_all_interior_patterns(eps):
    par = weak_asym_params(eps)
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                for tail in ((0, 1), (1, 1)):
                    cfg = HalfLineConfig((1, a, b, c) + tail, injections=1)
                    r = discrete_heat_residual(cfg, 3, par)
                    assert abs(r) < 1e-12, (a, b, c, tail, eps)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.3, 0.6])
def test_heat_identity_wall_row(eps):
    par = weak_asym_params(eps)
    for s1 in (0, 1):
        for inj in (0, 3):
            cfg = HalfLineConfig((s1, 1, 0, 1), injections=inj)
            assert abs(discrete_heat_residual(cfg, 0, par)) < 1e-12


def test_boundary_coefficient_coincidences():
    # the two scalar identities that make the wall row close:
    #   D (1/mu - 2 + mu) = nu   and   nu + q - p = D (2 mu - 2)
    for eps in (0.01, 0.05, 0.1, 0.3, 0.6, 0.69):
        par = weak_asym_params(eps)
        lhs1 = par.diffusion * (1.0 / par.mu - 2.0 + par.mu)
        assert lhs1 == pytest.approx(par.nu, rel=1e-12)
        lhs2 = par.nu + par.q - par.p
        assert lhs2 == pytest.approx(par.diffusion * (2.0 * par.mu - 2.0),
                                     rel=1e-12)


# --------------------------------------------------------------------------
# quadratic variation: exact rate and weak-asymmetry expansion


def _qv_rate_brute(cfg, x, par, n):
    """QV rate at x summed over all enabled transitions, via the generator."""
    def z_at(c):
        return float(hopf_cole(height_field(c, n), 0.0, par).values[x])

    z = z_at(cfg)
    return sum(tr.rate * (z_at(apply_transition(cfg, tr)) - z) ** 2
               for tr in enabled_transitions_asep(cfg, par))


def test_qv_rate_matches_generator():
    par = weak_asym_params(0.3)
    rng = np.random.default_rng(3)
    for _ in range(25):
        bits = tuple(int(v) for v in rng.integers(0, 2, size=6))
        cfg = HalfLineConfig(bits, injections=int(rng.integers(0, 3)))
        n = 9
        Z = hopf_cole(height_field(cfg, n), 0.0, par)
        for x in range(0, 5):
            sig_x = cfg.sigma(x) if x >= 1 else -1
            exact = qv_rate_exact(float(Z.values[x]), sig_x, cfg.sigma(x + 1),
                                  par, x)
            brute = _qv_rate_brute(cfg, x, par, n)
            assert exact == pytest.approx(brute, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_qv_expansion_interior_patterns(eps):
    """exact - (leading + gradient) follows the computed Taylor heads."""
    par = weak_asym_params(eps)
    # (sigma(x), sigma(x+1)) -> predicted head of the defect, order of tail
    heads = {
        (1, 0): (-eps ** 3 + (13.0 / 12.0) * eps ** 4, 5),
        (0, 1): (eps ** 3 + (13.0 / 12.0) * eps ** 4, 5),
        (0, 0): (eps ** 4 / 12.0, 6),
        (1, 1): (eps ** 4 / 12.0, 6),
    }
    x = 2
    for (sx, sx1), (head, order) in heads.items():
        cfg = HalfLineConfig((1, sx, sx1, 0), injections=1)
        Z = hopf_cole(height_field(cfg, 5), 0.0, par)
        exact = qv_rate_exact(float(Z.values[x]), sx, sx1, par, x)
        lead, grad = qv_weak_asym_expansion(Z, x)
        defect = (exact - lead - grad) / float(Z.values[x]) ** 2
        assert defect == pytest.approx(head, abs=4.0 * eps ** order)


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_qv_expansion_wall(eps):
    par = weak_asym_params(eps)
    preds = {1: 0.5 * eps ** 3, 0: -1.5 * eps ** 3}
    for s1, head in preds.items():
        cfg = HalfLineConfig((s1, 1, 0), injections=0)
        Z = hopf_cole(height_field(cfg, 4), 0.0, par)
        exact = qv_rate_exact(float(Z.values[0]), -1, s1, par, 0)
        lead, grad = qv_weak_asym_expansion(Z, 0)
        defect = (exact - lead - grad) / float(Z.values[0]) ** 2
        assert defect == pytest.approx(head, abs=6.0 * eps ** 4)


def test_qv_expansion_defect_shrinks_at_third_order():
    # fitted log-log slope of the worst-pattern defect is about 3
    defects = []
    grid = (0.2, 0.1, 0.05)
    for eps in grid:
        par = weak_asym_params(eps)
        cfg = HalfLineConfig((1, 1, 0, 0), injections=1)
        Z = hopf_cole(height_field(cfg, 5), 0.0, par)
        exact = qv_rate_exact(float(Z.values[2]), 1, 0, par, 2)
        lead, grad = qv_weak_asym_expansion(Z, 2)
        defects.append(abs(exact - lead - grad) / float(Z.values[2]) ** 2)
    slope = np.polyfit(np.log(grid), np.log(defects), 1)[0]
    assert 2.7 < slope < 3.3


# --------------------------------------------------------------------------
# rescaled field


def test_rescale_empty_start():
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=50), 0.0, PAR)
    R = rescale(Z, EPS, "zeta_empty")
    assert R.t_macro == pytest.approx(0.0)
    np.testing.assert_allclose(R.samples, EPS ** -2 * PAR.mu ** np.arange(51),
                               rtol=1e-14)
    np.testing.assert_allclose(R.grid[:3], [0.0, 0.01, 0.02], rtol=1e-15)
    # linear interpolation between grid points
    mid = 0.5 * (R.samples[3] + R.samples[4])
    assert R(EPS ** 2 * 3.5) == pytest.approx(mid, rel=1e-14)


def test_rescale_near_equilibrium_keeps_scale():
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=10), 2.0, PAR)
    R = rescale(Z, EPS, "zeta_neareq")
    assert R.t_macro == pytest.approx(EPS ** 4 * 2.0, rel=1e-14)
    np.testing.assert_allclose(R.samples, Z.values, rtol=1e-15)


def test_rescale_errors():
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=10), 2.0, PAR)
    with pytest.raises(ValueError):
        rescale(Z, EPS, "zeta_bogus")
    with pytest.raises(ValueError):
        rescale(Z, 0.2, "zeta_empty")  # parameter mismatch
    with pytest.raises(ValueError):
        # field sits at micro time 2.0, i.e. macro 2 eps^4; asking for a
        # different macroscopic time must fail
        rescale(Z, EPS, "zeta_empty", t_macro=1.0)
    # the matching macroscopic time is accepted
    rescale(Z, EPS, "zeta_empty", t_macro=EPS ** 4 * 2.0)


# --------------------------------------------------------------------------
# pairings and corrected test functions


def test_pairing_is_a_riemann_sum():
    from scipy.integrate import quad

    phi = smooth_test_functions()["hermite_damped"]
    eps = 0.02
    x = np.arange(int(6 / eps ** 2))
    field = np.exp(-(eps ** 2) * x)  # smooth macroscopic profile
    val = pairing_eps(field, phi, eps)
    ref, _ = quad(lambda u: phi(u) * math.exp(-u), 0.0, np.inf)
    assert val == pytest.approx(ref, abs=2e-3)


def test_pairing_linearity_and_field_objects():
    phi = smooth_test_functions()["hermite_damped"]
    rng = np.random.default_rng(11)
    f = rng.normal(size=200)
    g = rng.normal(size=200)
    a, b = 1.7, -0.4
    lhs = pairing_eps(a * f + b * g, phi, 0.1)
    rhs = a * pairing_eps(f, phi, 0.1) + b * pairing_eps(g, phi, 0.1)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    Z = hopf_cole(height_field(make_initial("empty_halfline"), n=199), 0.0, PAR)
    assert pairing_eps(Z, phi, 0.1) == pytest.approx(
        pairing_eps(Z.values, phi, 0.1), rel=1e-15)


def test_initial_pairing_tends_to_slope_at_wall():
    # eps^-2 mu^x paired against phi converges to phi'(0) from the wall side;
    # the kernel-side pairing carries the image-doubled constant 2 phi'(0)
    # (covered with the continuum kernels).
    phi = smooth_test_functions()["hermite_damped"]
    errs = []
    for eps in (0.1, 0.05, 0.02):
        par = weak_asym_params(eps)
        n = int(8 / eps ** 2)
        field = eps ** -2 * par.mu ** np.arange(n)
        errs.append(abs(pairing_eps(field, phi, eps) - float(phi.df(0.0))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 0.05


def test_catalog_derivatives_match_finite_differences():
    cat = smooth_test_functions()
    pts = {"hermite_damped": [0.0, 0.3, 1.1, 2.0],
           "poly_cutoff": [0.2, 1.0, 2.5, 3.7],
           "bump": [0.0, 0.25, 0.6, -0.6]}
    h = 1e-5
    for name, us in pts.items():
        tf = cat[name]
        for u in us:
            fd1 = (tf(u + h) - tf(u - h)) / (2 * h)
            fd2 = (tf(u + h) - 2 * tf(u) + tf(u - h)) / h ** 2
            assert float(tf.df(u)) == pytest.approx(fd1, rel=2e-8, abs=1e-8)
            assert float(tf.ddf(u)) == pytest.approx(fd2, rel=2e-4, abs=1e-4)


def test_catalog_boundary_values():
    cat = smooth_test_functions()
    assert float(cat["hermite_damped"](0.0)) == 0.0
    assert float(cat["hermite_damped"].df(0.0)) == 1.0
    assert float(cat["poly_cutoff"](0.0)) == 0.0
    assert float(cat["poly_cutoff"].df(0.0)) == 1.0
    assert float(cat["poly_cutoff"](4.0)) == 0.0
    assert float(cat["poly_cutoff"](4.5)) == 0.0
    assert float(cat["bump"](0.0)) == 1.0
    assert float(cat["bump"].df(0.0)) == 0.0
    assert float(cat["bump"](1.0)) == 0.0
    assert float(cat["bump"](-1.2)) == 0.0


def test_corrected_test_function_boundary_relation():
    cat = smooth_test_functions()
    phi, psi = cat["hermite_damped"], cat["bump"]
    for eps in (0.2, 0.1, 0.05):
        phi_e = corrected_test_function(phi, psi, eps)
        assert float(phi_e(0.0)) == pytest.approx(eps * float(phi.df(0.0)),
                                                  rel=1e-14)
        # phi_eps(0) = eps * phi_eps'(0) since psi'(0) = 0
        assert float(phi_e(0.0)) == pytest.approx(eps * float(phi_e.df(0.0)),
                                                  rel=1e-12)


def test_corrected_boundary_bracket_vanishes_linearly():
    # eps^-2 [ e^-eps phi_eps(0) - phi_eps(-eps^2) ] = eps/2 * phi'(0) + O(eps^2)
    cat = smooth_test_functions()
    phi, psi = cat["hermite_damped"], cat["bump"]
    for eps in (0.2, 0.1, 0.05):
        phi_e = corrected_test_function(phi, psi, eps)
        bracket = math.exp(-eps) * float(phi_e(0.0)) - float(phi_e(-eps ** 2))
        scaled = bracket / eps ** 2
        assert scaled == pytest.approx(0.5 * eps, abs=1.5 * eps ** 2)


def test_corrected_test_function_guards():
    cat = smooth_test_functions()
    with pytest.raises(ValueError):
        corrected_test_function(cat["bump"], cat["bump"], 0.1)  # phi(0) != 0
    with pytest.raises(ValueError):
        corrected_test_function(cat["hermite_damped"], cat["hermite_damped"],
                                0.1)  # psi(0) != 1


# --------------------------------------------------------------------------
# martingale diagnostics: exact post-processing vs online accumulators


def _paired_integral_from_log(traj, w, t, par):
    """Reference int_0^t sum_x w(x) Z_s(x) ds replayed from the event log."""
    from fasep.hopfcole import _interval_weights, _site_factors

    keep = traj.times <= t
    times = traj.times[keep]
    codes = traj.codes[keep].astype(np.int64)
    sites = traj.sites[keep].astype(np.int64)
    w1, _ = _interval_weights(times, t, par.nu)
    h0 = height_field(traj.initial, n=len(w) + 1).values
    total = 0.0
    for x in range(len(w)):
        if w[x] == 0.0:
            continue
        dlog, _ = _site_factors(codes, sites, x, par.epsilon)
        y = np.exp(par.epsilon * float(h0[x])
                   + np.concatenate(([0.0], np.cumsum(dlog))))
        total += w[x] * float(np.sum(y * w1))
    return total


def test_martingale_zero_horizon():
    par = weak_asym_params(0.2)
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 5.0, seed=9,
                         record="full_log")
    for d in martingale_residual(traj, [0, 1, 3], 0.0, par):
        assert d.residual == pytest.approx(0.0, abs=1e-14)
        assert d.qv_integral == pytest.approx(0.0, abs=1e-14)


def test_martingale_guards():
    par = weak_asym_params(0.2)
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 5.0, seed=9,
                         record="full_log")
    with pytest.raises(ValueError):
        martingale_residual(traj, [0], 6.0, par)  # beyond the horizon
    term = simulate_ctmc(make_initial("empty_halfline"), par, 5.0, seed=9)
    with pytest.raises(ValueError):
        martingale_residual(term, [0], 1.0, par)
    ftraj = simulate_ctmc(make_initial("step"), par, 2.0, seed=9,
                          record="full_log")
    with pytest.raises(ValueError):
        martingale_residual(ftraj, [0], 1.0, par)


@pytest.mark.parametrize("t_eval", [8.0, 4.0])
def test_postprocessed_integrals_match_online(t_eval):
    """The numpy replay and the O(1)-per-event online accumulators agree to
    near machine precision on the same path."""
    par = weak_asym_params(0.2)
    seed = 1234
    sites = [0, 1, 2, 5]
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 8.0, seed=seed,
                         record="full_log")
    diags = martingale_residual(traj, sites, t_eval, par)

    w = np.zeros(12)
    w[:8] = np.linspace(1.0, 0.3, 8)
    run = instrumented_run(make_initial("empty_halfline"), par, t_eval,
                           seed=seed, track_sites=sites, pair_weights=w)
    for d in diags:
        recon = (run.zt[d.site] - run.z0[d.site]
                 - par.diffusion * run.i_lap[d.site])
        assert d.residual == pytest.approx(recon, rel=1e-9, abs=1e-11)
        assert d.qv_integral == pytest.approx(run.i_qv[d.site], rel=1e-9,
                                              abs=1e-12)
    ref_pair = _paired_integral_from_log(traj, w, t_eval, par)
    assert run.i_pair == pytest.approx(ref_pair, rel=1e-9)


def test_martingale_mean_and_isometry():
    """E M_t(x) = 0 and E[M_t(x)^2 - int qv] = 0 within Monte Carlo error;
    cross products between distinct sites also average to zero."""
    par = weak_asym_params(0.3)
    t, n_rep = 5.0, 400
    sites = [0, 2]
    m = {x: [] for x in sites}
    iso = {x: [] for x in sites}
    crosses = []
    for r in range(n_rep):
        run = instrumented_run(make_initial("empty_halfline"), par, t,
                               seed=replica_seed(777, r), track_sites=sites)
        res = {x: run.zt[x] - run.z0[x] - par.diffusion * run.i_lap[x]
               for x in sites}
        for x in sites:
            m[x].append(res[x])
            iso[x].append(res[x] ** 2 - run.i_qv[x])
        crosses.append(res[0] * res[2])
    for x in sites:
        for vals in (m[x], iso[x]):
            arr = np.array(vals)
            se = arr.std(ddof=1) / math.sqrt(n_rep)
            assert abs(arr.mean()) < 4.0 * se + 1e-12
    arr = np.array(crosses)
    se = arr.std(ddof=1) / math.sqrt(n_rep)
    assert abs(arr.mean()) < 4.0 * se + 1e-12


def test_residual_cross_products_attached():
    par = weak_asym_params(0.2)
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 3.0, seed=5,
                         record="full_log")
    diags = martingale_residual(traj, [1, 4], 3.0, par)
    by_site = {d.site: d for d in diags}
    (x, y, prod), = by_site[1].cross
    assert (x, y) == (1, 4)
    assert prod == pytest.approx(by_site[1].residual * by_site[4].residual,
                                 rel=1e-14)
    assert by_site[4].cross == ()
