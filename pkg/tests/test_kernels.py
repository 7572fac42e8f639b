"""Discrete and continuum heat kernels: route cross-checks, Green-function
cancellation, exact moment formulas, and the fitted-constant bound suite."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fasep.kernels import (
    GT_SHARP_CONSTANT,
    BoundsGrid,
    QuadratureConvergenceError,
    RobinKernelSpec,
    TailNotCertifiedError,
    bounds_suite,
    d_dirichlet_kernel,
    dirichlet_kernel,
    first_moment_convolution,
    first_moment_exact,
    first_moment_scaled,
    fullline_kernel,
    green_cancellation,
    green_exact,
    green_matrix_solve,
    gt_function,
    gt_function_quadrature,
    kernel_table_rows,
    robin_kernel,
    robin_matrix,
    robin_row,
    second_moment_exact,
    second_moment_nested,
)

EPS = 0.1
MU = math.exp(-EPS)
SPEC = RobinKernelSpec(mu=MU)


# --------------------------------------------------------------------------
# full-line walk kernel


def test_fullline_time_zero_is_indicator():
    assert fullline_kernel(0.0, 0) == 1.0
    assert fullline_kernel(0.0, 3) == 0.0
    assert fullline_kernel(0.0, -2) == 0.0


def test_fullline_negative_time_rejected():
    with pytest.raises(ValueError):
        fullline_kernel(-1.0, 0)


def test_fullline_unknown_method_rejected():
    with pytest.raises(ValueError):
        fullline_kernel(1.0, 0, method="series")


def test_fullline_conserves_mass():
    for t in (0.5, 5.0, 50.0):
        reach = int(6 * math.sqrt(t)) + 30
        total = math.fsum(fullline_kernel(t, x)
                          for x in range(-reach, reach + 1))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_fullline_even_in_x():
    for x in (1, 4, 17):
        assert fullline_kernel(3.0, x) == fullline_kernel(3.0, -x)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.01, 60.0), x=st.integers(0, 80))
def test_fullline_routes_agree(t, x):
    b = fullline_kernel(t, x, method="bessel")
    q = fullline_kernel(t, x, method="quadrature")
    assert q == pytest.approx(b, rel=1e-11, abs=1e-13)


# --------------------------------------------------------------------------
# evaluation spec


def test_spec_rejects_bad_parameters():
    with pytest.raises(ValueError):
        RobinKernelSpec(mu=0.0)
    with pytest.raises(ValueError):
        RobinKernelSpec(mu=1.5)
    with pytest.raises(ValueError):
        RobinKernelSpec(mu=0.9, method="magic")
    with pytest.raises(ValueError):
        RobinKernelSpec(mu=0.9, tol=0.5)
    with pytest.raises(ValueError):
        RobinKernelSpec(mu=0.9, nodes=2)
    with pytest.raises(ValueError):
        RobinKernelSpec(mu=0.9, lattice_size=4)


def test_spec_reflecting_wall_needs_no_series_tail():
    assert RobinKernelSpec(mu=1.0).truncation_index == 0


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(0.01, 0.999), tol=st.floats(1e-14, 1e-3))
def test_spec_truncation_index_brackets_tol(mu, tol):
    z = RobinKernelSpec(mu=mu, tol=tol).truncation_index
    assert z >= 1
    assert mu ** z <= tol * (1.0 + 1e-9)
    assert mu ** (z - 1) >= tol * (1.0 - 1e-9)


# --------------------------------------------------------------------------
# half-line kernel with partially absorbing wall


def test_robin_time_zero_identity_every_route():
    for method in ("image_series", "quadrature", "ode_oracle"):
        spec = RobinKernelSpec(mu=MU, method=method)
        assert robin_kernel(spec, 0.0, 4, 4) == 1.0
        assert robin_kernel(spec, 0.0, 4, 5) == 0.0
        np.testing.assert_array_equal(robin_matrix(spec, 0.0, 6), np.eye(6))


def test_robin_frozen_corner_value():
    # series at mu = e^-0.1, t = 1: direct images-sum reference
    assert robin_kernel(SPEC, 1.0, 0, 0) == pytest.approx(
        0.6433308157590633, rel=1e-14)


def test_robin_negative_site_rejected():
    with pytest.raises(ValueError):
        robin_kernel(SPEC, 1.0, -1, 0)


def test_robin_three_routes_agree_on_tables():
    for t in (1.0, 10.0):
        series = robin_matrix(RobinKernelSpec(mu=MU), t, 25)
        contour = robin_matrix(
            RobinKernelSpec(mu=MU, method="quadrature"), t, 25)
        spectral = robin_matrix(
            RobinKernelSpec(mu=MU, method="ode_oracle"), t, 25)
        assert np.max(np.abs(series - contour)) < 1e-10
        assert np.max(np.abs(series - spectral)) < 1e-10


def test_robin_symmetric_in_endpoints():
    table = robin_matrix(RobinKernelSpec(mu=MU, method="quadrature"), 4.0, 20)
    assert np.max(np.abs(table - table.T)) < 1e-12


def test_robin_reflecting_wall_is_two_image_sum():
    spec = RobinKernelSpec(mu=1.0)
    for x, y in ((0, 0), (2, 5), (7, 1)):
        expected = (fullline_kernel(3.0, x - y)
                    + fullline_kernel(3.0, x + y + 1))
        assert robin_kernel(spec, 3.0, x, y) == pytest.approx(
            expected, rel=1e-14)


def test_robin_row_matches_matrix_row():
    table = robin_matrix(SPEC, 7.0, 30)
    for x in (0, 3, 12):
        np.testing.assert_allclose(robin_row(SPEC, 7.0, x, 29), table[x],
                                   rtol=1e-13, atol=1e-300)


def test_robin_scalar_matches_matrix_entry():
    table = robin_matrix(SPEC, 2.5, 12)
    assert robin_kernel(SPEC, 2.5, 3, 9) == pytest.approx(
        float(table[3, 9]), rel=1e-13)


def test_robin_spectral_leakage_certificate_fires():
    spec = RobinKernelSpec(mu=0.9, method="ode_oracle", lattice_size=16)
    with pytest.raises(ValueError, match="truncation boundary"):
        robin_kernel(spec, 100.0, 3, 5)


def test_robin_spectral_table_needs_margin():
    spec = RobinKernelSpec(mu=0.9, method="ode_oracle", lattice_size=16)
    with pytest.raises(ValueError, match="lattice_size"):
        robin_matrix(spec, 1.0, 15)


def test_kernel_table_rows_shape_and_method_tag():
    rows = list(kernel_table_rows(SPEC, [1.0, 2.0], 3))
    assert len(rows) == 2 * 9
    t, x, y, value, method = rows[0]
    assert (t, x, y, method) == (1.0, 0, 0, "image_series")
    assert value == pytest.approx(0.6433308157590633, rel=1e-14)
    direct = {(t, x, y): robin_kernel(SPEC, t, x, y)
              for t in (1.0, 2.0) for x in range(3) for y in range(3)}
    for t, x, y, value, _ in rows:
        assert value == pytest.approx(direct[(t, x, y)], rel=1e-13)


# --------------------------------------------------------------------------
# kernel invariants: mass, monotonicity, killing rate, semigroup


def test_robin_mass_strictly_decreasing_in_time():
    y_max = 140
    sums = [float(np.sum(robin_row(SPEC, t, 3, y_max)))
            for t in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
    assert all(s < 1.0 for s in sums)
    assert all(a > b for a, b in zip(sums, sums[1:]))


def test_robin_mass_conserved_at_reflecting_wall():
    row = robin_row(RobinKernelSpec(mu=1.0), 4.0, 3, 140)
    assert float(np.sum(row)) == pytest.approx(1.0, abs=1e-13)


def test_robin_increasing_in_wall_weight():
    mus = (0.8, 0.9, 0.99, 1.0)
    tables = [robin_matrix(RobinKernelSpec(mu=m), 5.0, 20) for m in mus]
    for lo, hi in zip(tables, tables[1:]):
        assert np.all(hi - lo > -1e-15)
        assert hi[0, 0] > lo[0, 0]


def test_robin_killing_deficit_scales_like_eps_sqrt_t():
    # deficit / (eps sqrt(t)) stays positive and below an O(1) cap across
    # a sweep in both parameters (the shape, not any sharp constant)
    for eps in (0.2, 0.1, 0.05):
        spec = RobinKernelSpec(mu=math.exp(-eps))
        for t in (1.0, 4.0, 16.0, 64.0):
            y_max = 10 + int(6 * math.sqrt(t)) + 60
            for x in (0, 3):
                deficit = 1.0 - float(np.sum(robin_row(spec, t, x, y_max)))
                ratio = deficit / (eps * math.sqrt(t))
                assert 0.0 < ratio <= 1.0


def test_robin_semigroup_property():
    big = robin_matrix(SPEC, 3.0, 80) @ robin_matrix(SPEC, 5.0, 80)
    direct = robin_matrix(SPEC, 8.0, 80)
    assert np.max(np.abs(big[:30, :30] - direct[:30, :30])) < 1e-9


@settings(max_examples=30, deadline=None)
@given(mu=st.floats(0.5, 0.999), t=st.floats(0.05, 30.0),
       x=st.integers(0, 10))
def test_robin_submarkov_property(mu, t, x):
    spec = RobinKernelSpec(mu=mu)
    y_max = x + int(6 * math.sqrt(t)) + 40
    row = robin_row(spec, t, x, y_max)
    assert np.all(row >= 0.0)
    assert float(np.sum(row)) < 1.0


# --------------------------------------------------------------------------
# Green function of the killed walk and the cancellation identity


def test_green_closed_form_values():
    c = 2.0 / (1.0 - MU)
    assert green_exact(MU, 2, 5) == pytest.approx(4.0 + c, rel=1e-15)
    assert green_exact(MU, 5, 2) == pytest.approx(4.0 + c, rel=1e-15)
    assert green_exact(MU, 0, 0) == pytest.approx(c, rel=1e-15)


def test_green_rejects_reflecting_wall():
    with pytest.raises(ValueError):
        green_exact(1.0, 0, 0)


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(0.05, 0.95), x=st.integers(0, 500))
def test_green_jump_identity(mu, x):
    # one unit of expected extra visits per site step along the diagonal
    assert green_exact(mu, x + 1, x + 1) == 2.0 + green_exact(mu, x, x + 1)


def test_green_banded_solve_matches_closed_form():
    table = green_matrix_solve(MU, 12)
    worst = max(abs(table[x, y] - green_exact(MU, x, y))
                for x in range(12) for y in range(12))
    assert worst < 1e-10


def test_cancellation_indicator_via_green_routes():
    for method in ("green_exact", "green_solve"):
        assert green_cancellation(MU, 3, 3, method=method) == pytest.approx(
            1.0, abs=1e-12)
        assert green_cancellation(MU, 2, 7, method=method) == pytest.approx(
            0.0, abs=1e-12)
        assert green_cancellation(MU, 0, 0, method=method) == pytest.approx(
            1.0, abs=1e-12)


def test_cancellation_time_integral_reproduces_indicator():
    # reduced horizon for speed; the certified tail still holds 1e-5
    diag = green_cancellation(MU, 3, 3, t_max=2e4, tol=1e-5)
    off = green_cancellation(MU, 2, 7, t_max=2e4, tol=1e-5)
    assert diag == pytest.approx(1.0, abs=1e-5)
    assert off == pytest.approx(0.0, abs=1e-5)


def test_cancellation_tail_certificate_fires_on_short_horizon():
    with pytest.raises(TailNotCertifiedError):
        green_cancellation(MU, 3, 3, t_max=50.0)


def test_cancellation_unknown_method_rejected():
    with pytest.raises(ValueError):
        green_cancellation(MU, 3, 3, method="magic")


# --------------------------------------------------------------------------
# exact first moment of the transform


def test_first_moment_at_time_zero_is_geometric():
    for x in (0, 3, 11):
        assert first_moment_exact(EPS, 0.0, x) == pytest.approx(
            MU ** x, rel=1e-14)


def test_first_moment_contour_matches_convolution():
    for x in (0, 10, 40):
        contour = first_moment_exact(EPS, 100.0, x)
        direct = first_moment_convolution(EPS, 100.0, x)
        assert contour == pytest.approx(direct, rel=1e-10)


def test_first_moment_scaled_snaps_to_lattice():
    u_eff, _ = first_moment_scaled(0.4, 1.0, 1.0)
    assert u_eff == pytest.approx(0.16 * 6, rel=1e-15)   # x = round(6.25)


def test_first_moment_scaling_limit_error_decreases():
    errs = []
    for eps in (0.4, 0.2, 0.1):
        u_eff, value = first_moment_scaled(eps, 1.0, 1.0)
        errs.append(abs(value - d_dirichlet_kernel(1.0, u_eff)))
    assert errs[0] > errs[1] > errs[2]


def test_first_moment_rejects_bad_arguments():
    with pytest.raises(ValueError):
        first_moment_exact(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        first_moment_exact(EPS, -1.0, 0)
    with pytest.raises(ValueError):
        first_moment_exact(EPS, 1.0, 0, method="magic")
    with pytest.raises(ValueError):
        first_moment_scaled(0.4, 1.0, -1.0)


# --------------------------------------------------------------------------
# continuum kernels


def test_dirichlet_kernel_frozen_value():
    assert dirichlet_kernel(1.0, 1.0, 1.0) == pytest.approx(
        0.3449513138882446, rel=1e-15)


def test_dirichlet_kernel_vanishes_at_wall():
    assert dirichlet_kernel(1.0, 0.0, 2.0) == 0.0
    assert dirichlet_kernel(1.0, 2.0, 0.0) == 0.0


def test_dirichlet_kernel_symmetric_and_positive():
    u = np.linspace(0.1, 5.0, 40)
    a = dirichlet_kernel(0.7, u[:, None], u[None, :])
    assert np.max(np.abs(a - a.T)) == 0.0
    assert np.all(a > 0.0)


def test_dirichlet_semigroup_by_quadrature():
    s, t, u, v = 0.4, 0.9, 1.3, 0.6
    val, _ = quad(lambda w: dirichlet_kernel(s, u, w)
                  * dirichlet_kernel(t, w, v), 0.0, np.inf)
    assert val == pytest.approx(dirichlet_kernel(s + t, u, v), abs=1e-8)


def test_dipole_kernel_frozen_value():
    assert d_dirichlet_kernel(1.0, 1.0) == pytest.approx(
        0.9678828980765735, rel=1e-15)


def test_dipole_kernel_fourier_route_agrees():
    for t in (0.3, 1.0, 4.0):
        for u in (0.2, 1.0, 3.0):
            closed = d_dirichlet_kernel(t, u)
            fourier = d_dirichlet_kernel(t, u, method="fourier")
            assert fourier == pytest.approx(closed, rel=1e-11, abs=1e-13)


def test_dipole_kernel_is_dirichlet_flux_at_wall():
    # dP_t(u, 0) = 2 d/dv P_t(u, v) at v = 0, via a centered difference
    t, u, h = 0.8, 1.1, 1e-6
    flux = (dirichlet_kernel(t, u, h) - dirichlet_kernel(t, u, 0.0)) / h
    assert d_dirichlet_kernel(t, u) == pytest.approx(2.0 * flux, rel=1e-5)


def test_dipole_pairing_reproduces_closed_moment():
    # against phi(u) = u e^{-u^2} the pairing is exactly 2 (1 + 2t)^{-3/2},
    # approaching 2 phi'(0) as t -> 0
    for t in (1e-2, 1e-3):
        val, _ = quad(lambda u: d_dirichlet_kernel(t, u) * u
                      * math.exp(-u * u), 0.0, np.inf)
        assert val == pytest.approx(2.0 * (1.0 + 2.0 * t) ** -1.5, rel=1e-10)


def test_continuum_kernels_reject_bad_time():
    with pytest.raises(ValueError):
        dirichlet_kernel(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        d_dirichlet_kernel(-1.0, 1.0)
    with pytest.raises(ValueError):
        d_dirichlet_kernel(1.0, 1.0, method="magic")


# --------------------------------------------------------------------------
# mixed second-moment kernel


def test_gt_closed_form_matches_quadrature():
    for t in (0.5, 1.0, 3.0):
        for frac in (0.1, 0.5, 0.9):
            for u in (0.3, 1.0, 2.5):
                value, _ = gt_function(t, frac * t, u)
                oracle = gt_function_quadrature(t, frac * t, u)
                assert value == pytest.approx(oracle, rel=1e-8, abs=1e-12)


def test_gt_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gt_function(1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        gt_function(1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        gt_function(1.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        gt_function_quadrature(1.0, 2.0, 0.5)


@settings(max_examples=80, deadline=None)
@given(t=st.floats(1e-3, 50.0), frac=st.floats(1e-6, 1.0 - 1e-6),
       u=st.floats(1e-3, 20.0))
def test_gt_never_exceeds_sharp_bound(t, frac, u):
    value, ratio = gt_function(t, frac * t, u)
    assert value >= 0.0
    assert ratio <= GT_SHARP_CONSTANT + 1e-12


def test_gt_bound_saturates_in_small_w_corner():
    # s u^2 / (t (t-s)) -> 0 drives the ratio to the sharp constant
    _, ratio = gt_function(1.0, 1e-8, 1e-4)
    assert ratio == pytest.approx(GT_SHARP_CONSTANT, rel=1e-6)


# --------------------------------------------------------------------------
# exact second moment of the limit field


def test_second_moment_special_point_is_sqrt_pi_plus_two():
    # at (t, u) = (1, 1/2) the erf term's polynomial factor vanishes
    ratio, _ = second_moment_exact(1.0, 0.5)
    assert ratio == pytest.approx(math.sqrt(math.pi) + 2.0, rel=1e-12)


def test_second_moment_envelope_dominates_ratio():
    for t in (0.25, 1.0, 4.0):
        _, bound = second_moment_exact(t, 1.0)
        for u in (0.1, 0.5, 1.0, 2.0, 5.0):
            ratio, _ = second_moment_exact(t, u)
            assert 1.0 < ratio <= bound * (1.0 + 1e-12)


def test_second_moment_envelope_small_time_expansion():
    for t in (1e-4, 1e-6):
        _, bound = second_moment_exact(t, 1.0)
        expansion = 1.0 + 0.75 * math.sqrt(math.pi * t)
        assert bound == pytest.approx(expansion, abs=3.0 * t)


def test_second_moment_envelope_frozen_value():
    _, bound = second_moment_exact(1.0, 1.0)
    assert bound == pytest.approx(4.277910258981475, rel=1e-14)


def test_second_moment_nested_contour_matches_closed_form():
    for t, u in ((1.0, 0.5), (2.0, 1.0)):
        res = second_moment_nested(t, u)
        ratio = res.value / d_dirichlet_kernel(t, u) ** 2
        closed, _ = second_moment_exact(t, u)
        assert ratio == pytest.approx(closed, rel=1e-9)
        assert res.truncation_bound < 1e-12
        assert res.nodes_per_axis > 0


def test_second_moment_rejects_bad_arguments():
    with pytest.raises(ValueError):
        second_moment_exact(0.0, 1.0)
    with pytest.raises(ValueError):
        second_moment_exact(1.0, 0.0)
    with pytest.raises(ValueError):
        second_moment_nested(1.0, 1.0, eta=0.0)


# --------------------------------------------------------------------------
# bound suite


def test_bounds_suite_passes_at_desk_scale():
    report = bounds_suite(0.2, 0.5)
    assert report.passed
    names = [row.name for row in report.rows]
    assert "exponential_moment" in names
    assert "gradient_product_contraction" in names
    assert "time_monotonicity" in names
    contraction = next(r for r in report.rows
                       if r.name == "gradient_product_contraction")
    assert contraction.verified_sup < 1.0
    mono = next(r for r in report.rows if r.name == "time_monotonicity")
    assert mono.verified_sup <= 1.0 + 1e-12


def test_bounds_suite_csv_round_trip():
    report = bounds_suite(0.2, 0.5)
    lines = report.to_csv().strip().split("\n")
    assert lines[0] == "name,grid_size,constant,verified_sup,reference,pass"
    assert len(lines) == 1 + len(report.rows)
    for line, row in zip(lines[1:], report.rows):
        fields = line.split(",")
        assert fields[0] == row.name
        assert int(fields[1]) == row.grid_points
        assert fields[5] == str(row.passed)


def test_bounds_suite_rejects_bad_arguments():
    with pytest.raises(ValueError):
        bounds_suite(0.0, 1.0)
    with pytest.raises(ValueError):
        bounds_suite(0.1, -1.0)


def test_bounds_grid_defaults_interleave():
    g = BoundsGrid()
    assert min(g.t_fractions_fine) > min(g.t_fractions_coarse)
    assert max(g.t_fractions_fine) < max(g.t_fractions_coarse)


def test_time_monotonicity_pointwise_example():
    # p_s(x, y) <= e^{t-s} p_t(x, y) with constant exactly one
    early = robin_matrix(SPEC, 1.0, 30)
    late = robin_matrix(SPEC, 2.0, 30)
    assert np.all(early <= math.e * late * (1.0 + 1e-12))
    assert early[3, 5] <= math.e * late[3, 5]
