"""Continuous-time Markov dynamics for both processes.

The facilitated process on Z moves a particle right at rate p when its left
neighbour is occupied and its right neighbour free, and left at rate q in the
mirror case.  Its image under the right-to-left particle labelling is an
exclusion process on {1, 2, ...} with swap rates p (right) and q (left) and a
reservoir that injects a particle at site 1 at rate p whenever that site is
empty.  Weak asymmetry ties both rates to one parameter:

    p = e^eps / 2,   q = e^-eps / 2.

The simulator is an exact event-driven chain (exponential holding times, no
time discretisation); the jitted cores live in ``_simcore``.  This module
adds the enabled-transition enumerators, an exact generator application for
small state spaces, trajectory logs with binary/CSV serialisation and replay,
and a dense master-equation oracle used to validate the sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .configs import (FasepConfig, HalfLineConfig, NotRegularError,
                      validate_regular)

__all__ = [
    "WeakAsymParams", "weak_asym_params", "Transition", "Trajectory",
    "TruncationBreachError", "enabled_transitions_fasep",
    "enabled_transitions_asep", "apply_transition", "simulate_ctmc",
    "generator_apply_pointwise", "generator_apply_exact",
    "truncation_margin", "estimate_event_budget", "replica_seed",
    "trajectory_to_bytes", "trajectory_from_bytes",
    "trajectory_to_csv", "trajectory_from_csv", "replay",
    "master_equation_joint",
]


class TruncationBreachError(RuntimeError):
    """A particle reached the truncation margin during a simulation."""


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class WeakAsymParams:
    """Jump rates plus the scalars of the exponential transform.

    ``lam`` is the tilt (1/2)log(q/p), ``nu`` the rate p + q - 2 sqrt(pq) of
    the exponential time factor, ``mu`` the boundary weight sqrt(q/p) and
    ``diffusion`` the lattice diffusivity sqrt(pq).
    """

    epsilon: float
    p: float
    q: float
    lam: float
    nu: float
    mu: float
    diffusion: float


def weak_asym_params(epsilon: float) -> WeakAsymParams:
    """Weakly asymmetric rates p = e^eps/2, q = e^-eps/2 with derived scalars.

    In this parametrisation the derived quantities collapse to closed forms:
    lam = -eps, mu = e^-eps, diffusion = 1/2 exactly, and
    nu = (e^eps/2)(e^-eps - 1)^2, which equals p + q - 2 sqrt(pq) but is
    evaluated cancellation-free via expm1.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    p = 0.5 * math.exp(epsilon)
    q = 0.5 * math.exp(-epsilon)
    nu = 0.5 * math.exp(epsilon) * math.expm1(-epsilon) ** 2
    return WeakAsymParams(epsilon=epsilon, p=p, q=q, lam=-epsilon, nu=nu,
                          mu=math.exp(-epsilon), diffusion=0.5)


# --------------------------------------------------------------------------
# transitions

@dataclass(frozen=True)
class Transition:
    """One enabled move.

    kind is one of ``fasep_right``, ``fasep_left`` (site = position of the
    jumping particle), ``asep_right``, ``asep_left`` (site = left end of the
    swapped bond) or ``asep_inject`` (site = 0).
    """

    kind: str
    site: int
    rate: float


# codes used in binary logs; kept in sync with _simcore
_CODE_TO_KIND = {0: "asep_inject", 1: "asep_right", 2: "asep_left",
                 3: "fasep_right", 4: "fasep_left"}
_KIND_TO_CODE = {v: k for k, v in _CODE_TO_KIND.items()}


def enabled_transitions_fasep(cfg: FasepConfig, params) -> list[Transition]:
    """Enabled facilitated moves: right needs pattern 1,1,0 at (x-1,x,x+1),
    left needs 0,1,1.  The fill edge below the window is included (its
    right jump is the one move available to the solid block)."""
    ok, _, _ = validate_regular(cfg)
    if not ok:
        raise NotRegularError("facilitated dynamics is only simulated on the regular set")
    out: list[Transition] = []
    for x in range(cfg.window_lo - 1, cfg.window_hi + 1):
        if cfg.eta(x) != 1:
            continue
        left = cfg.eta(x - 1)
        right = cfg.eta(x + 1)
        if left == 1 and right == 0:
            out.append(Transition("fasep_right", x, params.p))
        elif right == 1 and left == 0:
            out.append(Transition("fasep_left", x, params.q))
    return out


def enabled_transitions_asep(cfg: HalfLineConfig, params) -> list[Transition]:
    """Enabled half-line moves, injection first, then bonds left to right."""
    out: list[Transition] = []
    if cfg.sigma(1) == 0:
        out.append(Transition("asep_inject", 0, params.p))
    top = cfg.rightmost()
    for b in range(1, top + 1):
        sb = cfg.sigma(b)
        sb1 = cfg.sigma(b + 1)
        if sb == 1 and sb1 == 0:
            out.append(Transition("asep_right", b, params.p))
        elif sb == 0 and sb1 == 1:
            out.append(Transition("asep_left", b, params.q))
    return out


def apply_transition(cfg, tr: Transition):
    """Apply one enabled transition, growing windows/padding as needed.

    Raises ValueError when the transition is not enabled in ``cfg`` — replay
    and exhaustive generator tests rely on this being the exact dynamics.
    """
    if isinstance(cfg, FasepConfig):
        x = tr.site
        if tr.kind == "fasep_right":
            if not (cfg.eta(x - 1) == 1 and cfg.eta(x) == 1 and cfg.eta(x + 1) == 0):
                raise ValueError(f"{tr.kind} at {x} not enabled")
            tgt = x + 1
        elif tr.kind == "fasep_left":
            if not (cfg.eta(x + 1) == 1 and cfg.eta(x) == 1 and cfg.eta(x - 1) == 0):
                raise ValueError(f"{tr.kind} at {x} not enabled")
            tgt = x - 1
        else:
            raise ValueError(f"transition kind {tr.kind!r} does not act on full-line configs")
        lo = min(cfg.window_lo, x, tgt)
        hi = max(cfg.window_hi, x, tgt)
        occ = [cfg.eta(s) for s in range(lo, hi + 1)]
        occ[x - lo] = 0
        occ[tgt - lo] = 1
        return FasepConfig(lo, tuple(occ), cfg.left_fill, cfg.right_empty)

    if isinstance(cfg, HalfLineConfig):
        b = tr.site
        need = b + 1 if tr.kind in ("asep_right", "asep_left") else 1
        occ = list(cfg.occ) + [0] * max(0, need - len(cfg.occ))
        if tr.kind == "asep_inject":
            if occ[0] != 0:
                raise ValueError("injection not enabled: site 1 occupied")
            occ[0] = 1
            return HalfLineConfig(tuple(occ), cfg.injections + 1)
        if tr.kind == "asep_right":
            if not (occ[b - 1] == 1 and occ[b] == 0):
                raise ValueError(f"asep_right at bond {b} not enabled")
            occ[b - 1], occ[b] = 0, 1
        elif tr.kind == "asep_left":
            if not (occ[b - 1] == 0 and occ[b] == 1):
                raise ValueError(f"asep_left at bond {b} not enabled")
            occ[b - 1], occ[b] = 1, 0
        else:
            raise ValueError(f"transition kind {tr.kind!r} does not act on half-line configs")
        return HalfLineConfig(tuple(occ), cfg.injections)

    raise TypeError(f"unsupported configuration type {type(cfg)!r}")


# --------------------------------------------------------------------------
# exact generator application (small state spaces)


def _gen_key(cfg):
    # The generators act on occupation fields; storage padding and the
    # injection bookkeeping counter must not distinguish states.
    if isinstance(cfg, FasepConfig):
        c = cfg.canonical()
        return ("eta", c.window_lo, c.occ, c.left_fill, c.right_empty)
    c = cfg.canonical()
    return ("sigma", c.occ)


def _transitions_any(cfg, params):
    if isinstance(cfg, FasepConfig):
        return enabled_transitions_fasep(cfg, params)
    return enabled_transitions_asep(cfg, params)


def generator_apply_pointwise(cfg, f, params) -> float:
    """(L f)(cfg) = sum over enabled transitions of rate * (f(next) - f(cfg)).

    ``f`` is a callable on configurations.  Rates are taken from
    ``params.p``/``params.q`` verbatim, so exact number types (fractions)
    pass through untouched.
    """
    base = f(cfg)
    acc = 0
    for tr in _transitions_any(cfg, params):
        acc = acc + tr.rate * (f(apply_transition(cfg, tr)) - base)
    return acc


def generator_apply_exact(state_space, f, params, transitions=None) -> dict:
    """Apply the generator to a function given on a closed finite state space.

    ``f`` maps each state in ``state_space`` to a number (dict or callable).
    States are identified up to storage padding; a transition leading outside
    the given space raises ValueError.  ``transitions`` overrides the enabled
    moves: a callable state -> list of (rate, next_state), for restricted or
    synthetic chains; by default the process enumerators are used.
    """
    if callable(f):
        fmap = {_gen_key(s): f(s) for s in state_space}
    else:
        fmap = {_gen_key(s): v for s, v in f.items()}
    out = {}
    for s in state_space:
        base = fmap[_gen_key(s)]
        acc = 0
        if transitions is None:
            moves = [(tr.rate, apply_transition(s, tr)) for tr in _transitions_any(s, params)]
        else:
            moves = transitions(s)
        for rate, s2 in moves:
            k2 = _gen_key(s2)
            if k2 not in fmap:
                raise ValueError("state space is not closed under enabled transitions")
            acc = acc + rate * (fmap[k2] - base)
        out[s] = acc
    return out


# --------------------------------------------------------------------------
# event-driven simulation


def truncation_margin(t_end: float) -> int:
    """Sites to reserve beyond the initially active region.

    Edge displacements over [0, t] are stochastically dominated by
    Poisson(3t/2); the 12-sigma allowance puts the breach probability around
    the 1e-30 scale, and the breach is asserted at runtime regardless.
    """
    return int(math.ceil(1.5 * t_end + 12.0 * math.sqrt(max(t_end, 0.0)) + 64.0))


def estimate_event_budget(init, params, t_end: float) -> int:
    """Upper estimate of the number of events a run can produce.

    Used to size full event logs and by the command-line budget guard.  The
    bound is total-rate * time with the active region bounded via the same
    Poisson-domination margins as the truncation certificate.
    """
    if isinstance(init, HalfLineConfig):
        n0 = len(init.occupied_sites())
        inj_max = params.p * t_end + 12.0 * math.sqrt(params.p * t_end + 1.0) + 64.0
        bonds = 2.0 * (n0 + inj_max) + 1.0
    else:
        ok, L, R = validate_regular(init)
        if not ok:
            raise NotRegularError("budget needs a regular configuration")
        bonds = float(R - L + 2 * truncation_margin(t_end) + 8)
    return int(1.3 * params.p * bonds * t_end) + 20000


def replica_seed(seed: int, replica: int) -> int:
    """Derived 64-bit stream seed for one replica; stable across thread counts."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replica,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class Trajectory:
    """Result of one simulated path.

    ``times``/``codes``/``sites`` hold the event log (empty unless the run
    recorded ``full_log``); sites are lattice sites for the full-line process
    and bond indices (0 = injection) for the half-line one.  ``snapshots``
    pairs each requested time with the state after the last event at or
    before it.
    """

    initial: object
    t_end: float
    seed: int
    record: str
    terminal: object
    n_events: int
    t_last_event: float
    times: np.ndarray
    codes: np.ndarray
    sites: np.ndarray
    snapshots: tuple = ()


def simulate_ctmc(init, params: WeakAsymParams, t_end: float, seed: int,
                  record: str = "terminal", *, snapshot_times=(),
                  log_cap: int | None = None,
                  debug_checks: bool = False) -> Trajectory:
    """Sample one exact CTMC path up to time ``t_end``.

    record: ``"terminal"`` (default), ``"snapshots"`` (requires
    ``snapshot_times``, all within [0, t_end]) or ``"full_log"``.
    The working truncation adds :func:`truncation_margin` sites beyond the
    active region; a particle reaching it raises TruncationBreachError
    instead of silently reflecting.
    """
    from . import _simcore

    if not (t_end >= 0.0 and math.isfinite(t_end)):
        raise ValueError(f"invalid t_end {t_end}")
    if record not in ("terminal", "snapshots", "full_log"):
        raise ValueError(f"unknown record mode {record!r}")
    snap_times = np.asarray(sorted(float(s) for s in snapshot_times), dtype=np.float64)
    if record == "snapshots":
        if snap_times.size == 0:
            raise ValueError("record='snapshots' needs snapshot_times")
    elif len(snap_times):
        raise ValueError("snapshot_times only make sense with record='snapshots'")
    if snap_times.size and (snap_times[0] < 0.0 or snap_times[-1] > t_end):
        raise ValueError("snapshot times must lie in [0, t_end]")

    want_log = record == "full_log" or debug_checks
    cap = int(log_cap) if log_cap is not None else estimate_event_budget(init, params, t_end)
    log_times = np.empty(cap if want_log else 0, dtype=np.float64)
    log_codes = np.empty(cap if want_log else 0, dtype=np.int8)
    log_sites = np.empty(cap if want_log else 0, dtype=np.int32)
    margin = truncation_margin(t_end)

    if isinstance(init, HalfLineConfig):
        n_store = max(init.rightmost() + 2, init.n_trunc + 1) + margin
        occ = np.zeros(n_store, dtype=np.int8)
        for s in init.occupied_sites():
            occ[s] = 1
        (inj, n_events, breach, n_logged, snaps, snap_inj, _, _, _, t_last) = \
            _simcore.asep_gillespie(
                occ, init.injections, params.p, params.q, params.epsilon,
                params.nu, float(t_end), np.uint64(seed), snap_times,
                want_log, log_times, log_codes, log_sites,
                np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), 0)
        _raise_on_breach(breach)
        terminal = HalfLineConfig(tuple(int(v) for v in occ[1:]), injections=int(inj))
        snapshots = tuple(
            (float(ts), HalfLineConfig(tuple(int(v) for v in snaps[k, 1:]),
                                       injections=int(snap_inj[k])))
            for k, ts in enumerate(snap_times))
        sites_out = log_sites[:n_logged].copy()
    elif isinstance(init, FasepConfig):
        ok, L, R = validate_regular(init)
        if not ok:
            raise NotRegularError("initial configuration is not regular")
        lo_site = L + 1 - margin - 4
        hi_site = (R - 1) + margin + 4
        occ = np.array([init.eta(x) for x in range(lo_site, hi_site + 1)], dtype=np.int8)
        n_events, breach, n_logged, snaps, t_last = _simcore.fasep_gillespie(
            occ, params.p, params.q, float(t_end), np.uint64(seed),
            snap_times, want_log, log_times, log_codes, log_sites)
        _raise_on_breach(breach)
        terminal = FasepConfig(lo_site, tuple(int(v) for v in occ),
                               init.left_fill, init.right_empty)
        snapshots = tuple(
            (float(ts), FasepConfig(lo_site, tuple(int(v) for v in snaps[k]),
                                    init.left_fill, init.right_empty))
            for k, ts in enumerate(snap_times))
        sites_out = (log_sites[:n_logged] + lo_site).astype(np.int32)
    else:
        raise TypeError(f"unsupported initial configuration {type(init)!r}")

    traj = Trajectory(
        initial=init, t_end=float(t_end), seed=int(seed), record=record,
        terminal=terminal, n_events=int(n_events), t_last_event=float(t_last),
        times=log_times[:n_logged].copy() if record == "full_log" else np.empty(0),
        codes=log_codes[:n_logged].copy() if record == "full_log" else np.empty(0, dtype=np.int8),
        sites=sites_out if record == "full_log" else np.empty(0, dtype=np.int32),
        snapshots=snapshots if record == "snapshots" else ())

    if debug_checks and isinstance(init, FasepConfig):
        state = init
        for k in range(n_logged):
            kind = _CODE_TO_KIND[int(log_codes[k])]
            state = apply_transition(state, Transition(kind, int(log_sites[k] + lo_site), math.nan))
            if not validate_regular(state)[0]:
                raise AssertionError(f"regular set left after event {k}")
        if state.canonical() != terminal.canonical():
            raise AssertionError("debug replay disagrees with simulator terminal state")
    return traj


def _raise_on_breach(breach: int) -> None:
    if breach == 1:
        raise TruncationBreachError(
            "particle reached the truncation margin; enlarge the window or shorten the run")
    if breach == 2:
        raise RuntimeError("event log overflow: the budget estimate was exceeded")


# --------------------------------------------------------------------------
# trajectory serialisation and replay

_REC_DTYPE = np.dtype([("time", "<f8"), ("code", "u1"), ("site", "<i4")])
assert _REC_DTYPE.itemsize == 13


def trajectory_to_bytes(traj: Trajectory) -> bytes:
    """Binary event stream: per event, float64 time (LE), 1-byte code, int32 site."""
    rec = np.empty(len(traj.times), dtype=_REC_DTYPE)
    rec["time"] = traj.times
    rec["code"] = traj.codes.astype(np.uint8)
    rec["site"] = traj.sites
    return rec.tobytes()


def trajectory_from_bytes(data: bytes):
    """Inverse of :func:`trajectory_to_bytes`; returns (times, codes, sites)."""
    rec = np.frombuffer(data, dtype=_REC_DTYPE)
    return (rec["time"].astype(np.float64), rec["code"].astype(np.int8),
            rec["site"].astype(np.int32))


def trajectory_to_csv(traj: Trajectory, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "code", "kind", "site"])
        for t, c, s in zip(traj.times, traj.codes, traj.sites):
            w.writerow([repr(float(t)), int(c), _CODE_TO_KIND[int(c)], int(s)])


def trajectory_from_csv(path):
    import csv
    times, codes, sites = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["time"]))
            codes.append(int(row["code"]))
            sites.append(int(row["site"]))
    return (np.asarray(times, dtype=np.float64), np.asarray(codes, dtype=np.int8),
            np.asarray(sites, dtype=np.int32))


def replay(init, times, codes, sites, params=None):
    """Re-apply a logged event stream; returns the terminal configuration.

    Verifies that event times are strictly increasing.  Together with
    ``simulate_ctmc`` determinism this makes logs self-certifying: replaying
    must reproduce the simulator's terminal state bit for bit.
    """
    if len(times) and not np.all(np.diff(np.asarray(times)) > 0.0):
        raise ValueError("event times must be strictly increasing")
    state = init
    for c, s in zip(codes, sites):
        kind = _CODE_TO_KIND[int(c)]
        rate = math.nan
        if params is not None:
            rate = params.p if kind in ("asep_inject", "asep_right", "fasep_right") else params.q
        state = apply_transition(state, Transition(kind, int(s), rate))
    return state


# --------------------------------------------------------------------------
# master-equation oracle (small truncated half-line space)


def master_equation_joint(params, t: float, n_sites: int = 6, joint_sites: int = 3,
                          init: int = 0) -> np.ndarray:
    """Exact law of (sigma(1), ..., sigma(joint_sites)) at time t.

    Dense matrix exponential on the half-line process truncated to
    ``n_sites`` sites with a blocking wall (no jumps past the wall), started
    from the bitmask ``init`` (bit k = site k+1).  Valid as an oracle while
    the chance of reaching the wall is negligible against Monte Carlo error.
    State count is 2**n_sites; keep n_sites <= 10.
    """
    from scipy.linalg import expm

    if n_sites > 10:
        raise ValueError("master-equation oracle is dense; n_sites > 10 is not sensible")
    n = 1 << n_sites
    gen = np.zeros((n, n))
    for s in range(n):
        if s & 1 == 0:
            gen[s, s | 1] += params.p
        for b in range(n_sites - 1):
            pair = (s >> b) & 3
            if pair == 1:  # occupied, empty -> right swap
                gen[s, s ^ (3 << b)] += params.p
            elif pair == 2:  # empty, occupied -> left swap
                gen[s, s ^ (3 << b)] += params.q
        gen[s, s] -= gen[s].sum()
    pi0 = np.zeros(n)
    pi0[init] = 1.0
    pi_t = pi0 @ expm(t * gen)
    mask = (1 << joint_sites) - 1
    joint = np.zeros(1 << joint_sites)
    for s in range(n):
        joint[s & mask] += pi_t[s]
    return joint
