import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.stats

from fasep.configs import (FasepConfig, HalfLineConfig, NotRegularError,
                           enumerate_window_configs, make_initial,
                           map_to_halfline, validate_regular)
from fasep.dynamics import (Transition, TruncationBreachError,
                            apply_transition, enabled_transitions_asep,
                            enabled_transitions_fasep, estimate_event_budget,
                            generator_apply_exact, generator_apply_pointwise,
                            master_equation_joint, replay, replica_seed,
                            simulate_ctmc, trajectory_from_bytes,
                            trajectory_from_csv, trajectory_to_bytes,
                            trajectory_to_csv, truncation_margin,
                            weak_asym_params)

FIG = FasepConfig.from_literal("@-9:111101011101011")


# --------------------------------------------------------------------------
# parameters

def test_weak_asym_values_eps_01():
    par = weak_asym_params(0.1)
    assert par.p == pytest.approx(0.5525854590378239, rel=1e-14)
    assert par.q == pytest.approx(0.4524187090179798, rel=1e-14)
    assert par.lam == -0.1
    assert par.mu == pytest.approx(0.9048374180359595, rel=1e-14)
    assert par.diffusion == 0.5
    assert par.nu == pytest.approx(0.0050041680558036, rel=1e-12)
    assert par.nu == pytest.approx(math.cosh(0.1) - 1.0, rel=1e-12)


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.2, 0.4, 0.6])
def test_weak_asym_identities(eps):
    par = weak_asym_params(eps)
    # p stays below 1 on the weak-asymmetry range used anywhere in the
    # package (it crosses 1 only at eps = log 2)
    assert 0 < par.q < par.p < 1
    assert par.p == pytest.approx(0.5 * math.exp(eps), rel=1e-15)
    assert par.q == pytest.approx(0.5 * math.exp(-eps), rel=1e-15)
    # nu computed as (e^eps/2)(e^-eps - 1)^2 must agree with p + q - 2 sqrt(pq)
    assert par.nu == pytest.approx(par.p + par.q - 2 * math.sqrt(par.p * par.q), rel=1e-9)
    assert par.lam == pytest.approx(0.5 * math.log(par.q / par.p), rel=1e-13)
    assert par.mu == pytest.approx(math.sqrt(par.q / par.p), rel=1e-13)
    assert math.sqrt(par.p * par.q) == pytest.approx(0.5, rel=1e-15)


def test_weak_asym_symmetric_limit():
    par = weak_asym_params(1e-9)
    assert par.p == pytest.approx(0.5, abs=1e-9)
    assert par.q == pytest.approx(0.5, abs=1e-9)
    assert par.nu == pytest.approx(0.5e-18, rel=1e-6)
    assert par.mu == pytest.approx(1.0, abs=2e-9)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2, 2.5, math.nan])
def test_weak_asym_domain(eps):
    with pytest.raises(ValueError):
        weak_asym_params(eps)


# --------------------------------------------------------------------------
# enabled transitions

def test_enabled_fasep_step():
    par = weak_asym_params(0.2)
    trs = enabled_transitions_fasep(make_initial("step", x0=0), par)
    assert trs == [Transition("fasep_right", 0, par.p)]


def test_enabled_fasep_figure():
    par = weak_asym_params(0.2)
    trs = enabled_transitions_fasep(FIG, par)
    rights = {t.site for t in trs if t.kind == "fasep_right"}
    lefts = {t.site for t in trs if t.kind == "fasep_left"}
    assert rights == {-6, 0, 5}
    assert lefts == {-2, 4}
    assert all(t.rate == par.p for t in trs if t.kind == "fasep_right")
    assert all(t.rate == par.q for t in trs if t.kind == "fasep_left")


def test_enabled_fasep_rejects_non_regular():
    with pytest.raises(NotRegularError):
        enabled_transitions_fasep(FasepConfig.from_literal("@0:001"), weak_asym_params(0.2))


def test_enabled_asep_examples():
    par = weak_asym_params(0.2)
    assert enabled_transitions_asep(make_initial("empty_halfline"), par) == \
        [Transition("asep_inject", 0, par.p)]
    sig = map_to_halfline(FIG)
    trs = enabled_transitions_asep(sig, par)
    assert {(t.kind, t.site) for t in trs} == {
        ("asep_inject", 0), ("asep_right", 3), ("asep_right", 7),
        ("asep_left", 1), ("asep_left", 5)}
    solid = HalfLineConfig((1, 1, 1))
    assert enabled_transitions_asep(solid, par) == [Transition("asep_right", 3, par.p)]


def test_transition_bijection_on_figure():
    # right jump of particle i <-> right swap at bond (i-1,i) (injection at i=1),
    # left jump of particle i <-> left swap at bond (i-1,i)
    par = weak_asym_params(0.2)
    pos = {x: i + 1 for i, x in enumerate((5, 4, 2, 0, -1, -2, -4, -6, -7, -8, -9))}
    image = set()
    for t in enabled_transitions_fasep(FIG, par):
        i = pos[t.site]
        if t.kind == "fasep_right":
            image.add(("asep_inject", 0) if i == 1 else ("asep_right", i - 1))
        else:
            image.add(("asep_left", i - 1))
    actual = {(t.kind, t.site) for t in enabled_transitions_asep(map_to_halfline(FIG), par)}
    assert image == actual


# --------------------------------------------------------------------------
# applying transitions / invariance of the regular set

def test_apply_transition_guards():
    par = weak_asym_params(0.2)
    step = make_initial("step", x0=0)
    with pytest.raises(ValueError):
        apply_transition(step, Transition("fasep_left", 0, par.q))
    nxt = apply_transition(step, Transition("fasep_right", 0, par.p))
    assert nxt.canonical() == FasepConfig.from_literal("@0:01").canonical()
    sig = HalfLineConfig(())
    sig2 = apply_transition(sig, Transition("asep_inject", 0, par.p))
    assert sig2.occupied_sites() == [1] and sig2.injections == 1
    with pytest.raises(ValueError):
        apply_transition(sig2, Transition("asep_inject", 0, par.p))
    sig3 = apply_transition(sig2, Transition("asep_right", 1, par.p))
    assert sig3.occupied_sites() == [2] and sig3.injections == 1
    back = apply_transition(sig3, Transition("asep_left", 1, par.q))
    assert back.occupied_sites() == [1]


@pytest.mark.parametrize("w", range(0, 13))
def test_regular_set_preserved_exhaustively(w):
    par = weak_asym_params(0.3)
    for cfg in enumerate_window_configs(w, window_lo=0, regular_only=True):
        for tr in enabled_transitions_fasep(cfg, par):
            nxt = apply_transition(cfg, tr)
            assert validate_regular(nxt)[0], (cfg.to_literal(), tr)


# --------------------------------------------------------------------------
# exact generator application and the intertwining of the two processes

def test_generator_kills_constants():
    # neither process has a finite closed state space (the fill edge and the
    # reservoir always offer a move), so constants are checked pointwise
    par = weak_asym_params(0.2)
    for cfg in enumerate_window_configs(4, window_lo=0, regular_only=True):
        assert generator_apply_pointwise(cfg, lambda s: 4.25, par) == 0
        assert generator_apply_pointwise(map_to_halfline(cfg), lambda s: 4.25, par) == 0


def test_generator_two_state_toggle():
    par = weak_asym_params(0.2)
    a = HalfLineConfig((1, 0))
    b = HalfLineConfig((0, 1))
    toggles = {a.occ: [(par.p, b)], b.occ: [(par.q, a)]}
    out = generator_apply_exact([a, b], {a: 1.0, b: 5.0},
                                par, transitions=lambda s: toggles[s.occ])
    # matrix [[-p, p], [q, -q]] applied to (1, 5)
    assert out[a] == pytest.approx(par.p * (5.0 - 1.0))
    assert out[b] == pytest.approx(par.q * (1.0 - 5.0))


def test_generator_closure_guard():
    par = weak_asym_params(0.2)
    with pytest.raises(ValueError):
        generator_apply_exact([make_initial("step", x0=0)], lambda s: 1.0, par)


def _halfline_image_measure(cfg, params):
    """Multiset of (rate, canonical sigma) over one generator step."""
    if isinstance(cfg, FasepConfig):
        moves = [(t.rate, map_to_halfline(apply_transition(cfg, t)))
                 for t in enabled_transitions_fasep(cfg, params)]
    else:
        moves = [(t.rate, apply_transition(cfg, t))
                 for t in enabled_transitions_asep(cfg, params)]
    return sorted((r, s.canonical().occ) for r, s in moves)


@pytest.mark.parametrize("w", range(0, 13))
def test_intertwining_exact_rationals(w):
    # With exact rational rates the two transition measures must coincide as
    # multisets, which is intertwining for every observable at once.
    par = SimpleNamespace(p=Fraction(11, 20), q=Fraction(9, 20))
    for cfg in enumerate_window_configs(w, window_lo=-1, regular_only=True):
        assert _halfline_image_measure(cfg, par) == \
            _halfline_image_measure(map_to_halfline(cfg), par)


def test_intertwining_pointwise_indicators():
    par = weak_asym_params(0.1)
    mismatches = []
    for cfg in enumerate_window_configs(9, window_lo=0, regular_only=True):
        sig = map_to_halfline(cfg)
        for j in (1, 2, 3, 5, 8):
            lhs = generator_apply_pointwise(cfg, lambda e, j=j: map_to_halfline(e).sigma(j), par)
            rhs = generator_apply_pointwise(sig, lambda s, j=j: s.sigma(j), par)
            if abs(lhs - rhs) > 1e-12:
                mismatches.append((cfg.to_literal(), j))
    assert mismatches == []


# --------------------------------------------------------------------------
# the event-driven simulator

def test_simulate_t_zero():
    par = weak_asym_params(0.2)
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 0.0, seed=5, record="full_log")
    assert traj.n_events == 0 and len(traj.times) == 0
    assert traj.terminal.canonical().occ == ()


def test_simulate_invalid_args():
    par = weak_asym_params(0.2)
    empty = make_initial("empty_halfline")
    with pytest.raises(ValueError):
        simulate_ctmc(empty, par, -1.0, seed=0)
    with pytest.raises(ValueError):
        simulate_ctmc(empty, par, math.inf, seed=0)
    with pytest.raises(ValueError):
        simulate_ctmc(empty, par, 1.0, seed=0, record="snapshots")
    with pytest.raises(ValueError):
        simulate_ctmc(empty, par, 1.0, seed=0, record="snapshots", snapshot_times=[2.0])
    with pytest.raises(ValueError):
        simulate_ctmc(empty, par, 1.0, seed=0, record="movie")


def test_simulate_determinism_asep():
    par = weak_asym_params(0.2)
    runs = [simulate_ctmc(make_initial("empty_halfline"), par, 8.0, seed=42,
                          record="full_log") for _ in range(2)]
    assert np.array_equal(runs[0].times, runs[1].times)
    assert np.array_equal(runs[0].codes, runs[1].codes)
    assert np.array_equal(runs[0].sites, runs[1].sites)
    assert runs[0].terminal == runs[1].terminal
    other = simulate_ctmc(make_initial("empty_halfline"), par, 8.0, seed=43, record="full_log")
    assert not np.array_equal(runs[0].times, other.times)


def test_simulate_record_mode_does_not_change_path():
    par = weak_asym_params(0.2)
    t_full = simulate_ctmc(make_initial("empty_halfline"), par, 6.0, seed=9, record="full_log")
    t_term = simulate_ctmc(make_initial("empty_halfline"), par, 6.0, seed=9)
    assert t_full.terminal == t_term.terminal


def test_event_times_strictly_increasing():
    par = weak_asym_params(0.2)
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 15.0, seed=3, record="full_log")
    assert traj.n_events > 5
    assert np.all(np.diff(traj.times) > 0)
    assert traj.t_last_event == traj.times[-1]


def test_replay_reproduces_terminal_asep():
    par = weak_asym_params(0.25)
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 12.0, seed=11, record="full_log")
    end = replay(traj.initial, traj.times, traj.codes, traj.sites, par)
    assert end.canonical() == traj.terminal.canonical()
    assert end.injections == traj.terminal.injections


def test_replay_reproduces_terminal_fasep():
    par = weak_asym_params(0.25)
    traj = simulate_ctmc(make_initial("step", x0=0), par, 12.0, seed=11, record="full_log")
    end = replay(traj.initial, traj.times, traj.codes, traj.sites, par)
    assert end.canonical() == traj.terminal.canonical()


def test_replay_rejects_non_increasing():
    with pytest.raises(ValueError):
        replay(make_initial("empty_halfline"), np.array([0.5, 0.4]),
               np.array([0, 0]), np.array([0, 0]))


def test_fasep_debug_checks_pass():
    par = weak_asym_params(0.3)
    simulate_ctmc(make_initial("step", x0=0), par, 6.0, seed=2, debug_checks=True)


def test_snapshots_cadlag():
    par = weak_asym_params(0.2)
    times = [1.0, 3.0, 6.0]
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 6.0, seed=17,
                         record="snapshots", snapshot_times=times)
    log = simulate_ctmc(make_initial("empty_halfline"), par, 6.0, seed=17, record="full_log")
    assert [t for t, _ in traj.snapshots] == times
    for ts, state in traj.snapshots:
        keep = log.times <= ts
        end = replay(log.initial, log.times[keep], log.codes[keep], log.sites[keep], par)
        assert end.canonical() == state.canonical()
        assert end.injections == state.injections
    assert traj.snapshots[-1][1].canonical() == log.terminal.canonical()


def test_fasep_frozen_until_first_event():
    # the half-line image of the step config is empty, so before the first
    # injection the height at 0 is 0 and the facilitated front sits at R-1=1
    par = weak_asym_params(0.2)
    traj = simulate_ctmc(make_initial("step", x0=0), par, 0.5, seed=1, record="full_log")
    ok, _, _ = validate_regular(traj.terminal)
    assert ok


def test_truncation_breach_raises():
    from fasep import _simcore
    par = weak_asym_params(0.2)
    occ = np.zeros(6, dtype=np.int8)
    occ[4] = 1  # one site below the wall
    out = _simcore.asep_gillespie(
        occ, 0, par.p, par.q, par.epsilon, par.nu, 50.0, np.uint64(123),
        np.empty(0), False, np.empty(0), np.empty(0, np.int8), np.empty(0, np.int32),
        np.empty(0, np.int64), np.empty(0), 0)
    assert out[2] == 1  # breach flag
    with pytest.raises(TruncationBreachError):
        init = HalfLineConfig((0, 0, 0, 1))
        # bypass the margin calculation by calling with a huge time but a
        # doctored budget: the public wrapper sizes storage safely, so reuse
        # the core's flag through the internal raiser instead
        from fasep.dynamics import _raise_on_breach
        _raise_on_breach(1)


def test_truncation_margin_formula():
    assert truncation_margin(0.0) == 64
    assert truncation_margin(100.0) == math.ceil(150.0 + 120.0 + 64.0)
    t = simulate_ctmc(make_initial("empty_halfline"), weak_asym_params(0.2), 50.0,
                      seed=8, record="full_log")
    assert t.terminal.rightmost() < truncation_margin(50.0)


def test_event_budget_covers_actual_runs():
    par = weak_asym_params(0.2)
    for t_end, seed in ((5.0, 0), (40.0, 1)):
        traj = simulate_ctmc(make_initial("empty_halfline"), par, t_end, seed=seed,
                             record="full_log")
        assert traj.n_events < estimate_event_budget(traj.initial, par, t_end)
    assert estimate_event_budget(make_initial("step", x0=0), par, 10.0) > 0


def test_trajectory_binary_round_trip(tmp_path):
    par = weak_asym_params(0.2)
    traj = simulate_ctmc(make_initial("empty_halfline"), par, 10.0, seed=21, record="full_log")
    blob = trajectory_to_bytes(traj)
    assert len(blob) == 13 * traj.n_events
    times, codes, sites = trajectory_from_bytes(blob)
    assert np.array_equal(times, traj.times)
    assert np.array_equal(codes, traj.codes)
    assert np.array_equal(sites, traj.sites)
    path = tmp_path / "events.csv"
    trajectory_to_csv(traj, path)
    times2, codes2, sites2 = trajectory_from_csv(path)
    assert np.array_equal(times2, traj.times)
    assert np.array_equal(codes2, traj.codes)
    assert np.array_equal(sites2, traj.sites)


def test_replica_seed_stability():
    assert replica_seed(7, 0) == replica_seed(7, 0)
    assert replica_seed(7, 0) != replica_seed(7, 1)
    assert replica_seed(8, 0) != replica_seed(7, 0)


# --------------------------------------------------------------------------
# distributional checks of the sampler

def test_holding_time_is_exponential():
    # one particle at site 1: the only enabled move fires at rate p, so the
    # first event time of each replica is Exp(p)
    par = weak_asym_params(0.3)
    init = HalfLineConfig((1,))
    first = []
    for r in range(4000):
        traj = simulate_ctmc(init, par, 40.0, seed=replica_seed(1234, r), record="full_log")
        if traj.n_events:
            first.append(traj.times[0])
    assert len(first) == 4000  # P(no event by 40) ~ e^-22
    stat = scipy.stats.kstest(first, "expon", args=(0, 1.0 / par.p))
    assert stat.pvalue > 1e-3


def test_master_equation_oracle_matches_mc():
    par = weak_asym_params(0.3)
    t, n_rep = 0.3, 30000
    joint = master_equation_joint(par, t, n_sites=6, joint_sites=3)
    counts = np.zeros(8)
    for r in range(n_rep):
        term = simulate_ctmc(make_initial("empty_halfline"), par, t,
                             seed=replica_seed(99, r)).terminal
        counts[term.sigma(1) | (term.sigma(2) << 1) | (term.sigma(3) << 2)] += 1
    phat = counts / n_rep
    for k in range(8):
        se = math.sqrt(max(joint[k] * (1 - joint[k]), 1e-12) / n_rep)
        assert abs(phat[k] - joint[k]) <= 3 * se + 1e-6, (k, phat[k], joint[k])


def test_master_equation_conserves_probability():
    par = weak_asym_params(0.3)
    joint = master_equation_joint(par, 0.7, n_sites=6, joint_sites=3)
    assert joint.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(joint >= -1e-15)
    with pytest.raises(ValueError):
        master_equation_joint(par, 0.1, n_sites=12)


def test_injections_dominated_by_poisson():
    par = weak_asym_params(0.2)
    t, n_rep = 10.0, 1500
    inj = np.array([
        simulate_ctmc(make_initial("empty_halfline"), par, t,
                      seed=replica_seed(55, r)).terminal.injections
        for r in range(n_rep)])
    lam = par.p * t
    assert inj.mean() <= lam + 3 * math.sqrt(lam / n_rep)
    assert inj.max() <= scipy.stats.poisson.ppf(1 - 1e-9, lam)


def test_rightmost_displacement_dominated_by_poisson():
    par = weak_asym_params(0.2)
    t, n_rep = 10.0, 1500
    disp = np.array([
        simulate_ctmc(make_initial("empty_halfline"), par, t,
                      seed=replica_seed(56, r)).terminal.rightmost()
        for r in range(n_rep)])
    lam = 1.5 * t
    assert disp.mean() <= lam + 3 * math.sqrt(lam / n_rep)
    assert disp.max() <= scipy.stats.poisson.ppf(1 - 1e-9, lam)
