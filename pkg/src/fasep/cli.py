"""Command-line driver for the experiment and validation suites.

Subcommands
-----------
``first-moment``, ``second-moment``, ``martingale``, ``intertwine``,
``near-eq``
    Monte-Carlo experiment drivers wrapping the ``run_*`` functions from
    :mod:`fasep.experiments`.  Each starts from a desk-scale default
    configuration; ``--config FILE`` (``key = value`` text, the same format
    ``ExperimentConfig.to_text`` writes) replaces the default wholesale, and
    ``--seed`` / ``--replicas`` override individual fields on top.
``kernels-suite``
    Deterministic kernel cross-checks: Robin-kernel three-way method
    agreement, the Green-cancellation identity, the two-time kernel
    envelope, the nested-contour second moment against the closed form, and
    the fitted-constant bound suite.  Select parts with ``--only``.
``she-validate``
    Stochastic-heat solver validation: two-level zero-noise refinement
    order, ensemble moments against the dipole kernel and the closed
    second-moment ratio, and the Picard layer envelope (fit small layers,
    verify deeper ones).

Every command writes one CSV table and one ``*_checks.csv`` per report via
:func:`fasep.experiments.emit_outputs`, plus a combined ``summary.csv``
(columns ``name,target,estimate,stderr,pass``) under the output directory,
prints a PASS/FAIL line per check, and exits 0 exactly when every asserted
check holds.  Checks tagged ``reported`` are informational: they are printed
as INFO and never gate the exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from .configs import HalfLineConfig
from .dynamics import weak_asym_params
from .experiments import (
    CheckRow,
    ExperimentConfig,
    ExperimentReport,
    emit_outputs,
    run_first_moment_convergence,
    run_intertwining_test,
    run_martingale_checks,
    run_near_equilibrium,
    run_second_moment_ratio,
)
from .hopfcole import discrete_heat_residual
from .kernels import (
    RobinKernelSpec,
    bounds_suite,
    d_dirichlet_kernel,
    green_cancellation,
    green_cancellation_matrix,
    gt_function,
    gt_function_quadrature,
    robin_matrix,
    second_moment_exact,
    second_moment_nested,
)
from .she import (
    growth_class_diagnostic,
    moment_estimate,
    picard_layers,
    sample_noise,
    solve_ensemble,
    solve_mild,
)

_DEFAULT_SEED = 20260816
_DEFAULT_OUT = Path("fasep-out")
_KERNEL_PARTS = ("robin", "green", "gt", "moment", "bounds")

# Desk-scale defaults: each runs in seconds to at most ~10 s on one core and
# passes its own checks at the frozen default seed.  Acceptance-scale runs
# supply a --config file instead.
_DESK_CONFIGS = {
    "first-moment": ExperimentConfig(
        experiment="first_moment", epsilons=(0.4, 0.3), t_macros=(0.5,),
        us=(0.0, 0.5, 1.0), replicas=400, seed=_DEFAULT_SEED),
    "second-moment": ExperimentConfig(
        experiment="second_moment", epsilons=(0.4, 0.2), t_macros=(0.5,),
        us=(0.5, 1.0), replicas=2000, seed=_DEFAULT_SEED),
    "martingale": ExperimentConfig(
        experiment="martingale", epsilons=(0.35, 0.25), t_macros=(0.32,),
        us=(), replicas=2000, seed=_DEFAULT_SEED),
    "intertwine": ExperimentConfig(
        experiment="intertwine", epsilons=(0.3,), t_macros=(0.5,),
        us=(), replicas=500, seed=_DEFAULT_SEED),
    "near-eq": ExperimentConfig(
        experiment="near_equilibrium", epsilons=(0.3, 0.2), t_macros=(0.1,),
        us=(0.3, 0.6, 0.9, 1.2, 1.6, 2.0), replicas=1200, seed=_DEFAULT_SEED),
}


# ---------------------------------------------------------------------------
# shared plumbing


def _add_experiment_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None, metavar="FILE",
                     help="key = value config file replacing the desk-scale "
                          "default")
    sub.add_argument("--seed", type=int, default=None,
                     help="master seed override")
    sub.add_argument("--replicas", type=int, default=None,
                     help="replica-count override")
    _add_output_flags(sub)
    sub.add_argument("--threads", type=int, default=1,
                     help="worker processes for the replica sweep")


def _add_output_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", type=Path, default=None, metavar="DIR",
                     help="output directory (default fasep-out/<command>)")
    sub.add_argument("--svg", action="store_true",
                     help="also emit one SVG plot per report that carries one")


def _resolve_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.from_text(Path(args.config).read_text())
    else:
        cfg = _DESK_CONFIGS[command]
    updates: dict = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.replicas is not None:
        updates["replicas"] = args.replicas
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _out_dir(command: str, args: argparse.Namespace,
             cfg: ExperimentConfig | None = None) -> Path:
    if args.out is not None:
        return args.out
    if cfg is not None and cfg.out_dir is not None:
        return Path(cfg.out_dir)
    return _DEFAULT_OUT / command


def _write_summary(checks: list[CheckRow], out_dir: Path) -> Path:
    path = Path(out_dir) / "summary.csv"
    lines = ["name,target,estimate,stderr,pass"]
    for c in checks:
        lines.append(f"{c.name},{float(c.target)!r},{float(c.estimate)!r},"
                     f"{float(c.stderr)!r},{c.passed}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _finish(reports: list[ExperimentReport], out_dir: Path,
            args: argparse.Namespace,
            cfg: ExperimentConfig | None = None) -> int:
    paths = emit_outputs(reports, out_dir, svg=args.svg, config=cfg)
    checks = [c for r in reports for c in r.checks]
    for c in checks:
        if c.tag == "reported":
            marker = "INFO"
        else:
            marker = "PASS" if c.passed else "FAIL"
        print(f"{marker}  {c.name}: estimate={c.estimate:.6g} "
              f"target={c.target:.6g} stderr={c.stderr:.6g}")
    paths.append(_write_summary(checks, out_dir))
    asserted = [c for c in checks if c.tag != "reported"]
    n_fail = sum(not c.passed for c in asserted)
    print(f"{len(asserted) - n_fail}/{len(asserted)} checks passed; "
          f"wrote {len(paths)} files under {out_dir}")
    return 0 if n_fail == 0 else 1


# ---------------------------------------------------------------------------
# Monte-Carlo experiment commands


def _cmd_first_moment(args: argparse.Namespace) -> int:
    cfg = _resolve_config("first-moment", args)
    report = run_first_moment_convergence(cfg, threads=args.threads)
    return _finish([report], _out_dir("first-moment", args, cfg), args, cfg)


def _cmd_second_moment(args: argparse.Namespace) -> int:
    cfg = _resolve_config("second-moment", args)
    report = run_second_moment_ratio(cfg, threads=args.threads)
    return _finish([report], _out_dir("second-moment", args, cfg), args, cfg)


def _cmd_martingale(args: argparse.Namespace) -> int:
    cfg = _resolve_config("martingale", args)
    report = run_martingale_checks(cfg, threads=args.threads)
    return _finish([report], _out_dir("martingale", args, cfg), args, cfg)


def _cmd_intertwine(args: argparse.Namespace) -> int:
    cfg = _resolve_config("intertwine", args)
    reports = [
        run_intertwining_test(cfg, window_max=args.window_max,
                              threads=args.threads),
        _heat_identity_report(),
    ]
    return _finish(reports, _out_dir("intertwine", args, cfg), args, cfg)


def _cmd_near_eq(args: argparse.Namespace) -> int:
    cfg = _resolve_config("near-eq", args)
    report = run_near_equilibrium(cfg, args.boundary_param,
                                  threads=args.threads,
                                  symmetry=args.symmetry)
    return _finish([report], _out_dir("near-eq", args, cfg), args, cfg)


def _heat_identity_report() -> ExperimentReport:
    """Exact lattice heat identity and the two boundary coefficient facts.

    Interior rows: all 8 occupation patterns around the probed site, two
    tail variants, one particle injected.  Wall rows: both states of the
    first site under two injection counts.  The coefficient identities are
    the scalar coincidences that make the wall row close.
    """
    pattern_eps = (0.05, 0.1, 0.3, 0.6)
    coeff_eps = (0.01, 0.05, 0.1, 0.3, 0.6, 0.69)
    rows = []
    worst_interior = 0.0
    worst_wall = 0.0
    for eps in pattern_eps:
        par = weak_asym_params(eps)
        sup_int = 0.0
        for a in (0, 1):
            for b in (0, 1):
                for c in (0, 1):
                    for tail in ((0, 1), (1, 1)):
                        cfg = HalfLineConfig((1, a, b, c) + tail,
                                             injections=1)
                        sup_int = max(sup_int,
                                      abs(discrete_heat_residual(cfg, 3, par)))
        sup_wall = 0.0
        for s1 in (0, 1):
            for inj in (0, 3):
                cfg = HalfLineConfig((s1, 1, 0, 1), injections=inj)
                sup_wall = max(sup_wall,
                               abs(discrete_heat_residual(cfg, 0, par)))
        rows.append((eps, "interior_patterns", sup_int))
        rows.append((eps, "wall_rows", sup_wall))
        worst_interior = max(worst_interior, sup_int)
        worst_wall = max(worst_wall, sup_wall)
    worst_reservoir = 0.0
    worst_drift = 0.0
    for eps in coeff_eps:
        par = weak_asym_params(eps)
        dev1 = abs(par.diffusion * (1.0 / par.mu - 2.0 + par.mu) / par.nu
                   - 1.0)
        rhs2 = par.diffusion * (2.0 * par.mu - 2.0)
        dev2 = abs((par.nu + par.q - par.p) / rhs2 - 1.0)
        rows.append((eps, "coeff_reservoir_rel_dev", dev1))
        rows.append((eps, "coeff_drift_rel_dev", dev2))
        worst_reservoir = max(worst_reservoir, dev1)
        worst_drift = max(worst_drift, dev2)
    checks = (
        CheckRow("heat_identity interior_patterns", 1e-12, worst_interior,
                 0.0, worst_interior < 1e-12, "exact"),
        CheckRow("heat_identity wall_rows", 1e-12, worst_wall, 0.0,
                 worst_wall < 1e-12, "exact"),
        CheckRow("heat_identity coeff_reservoir", 1e-12, worst_reservoir,
                 0.0, worst_reservoir < 1e-12, "exact"),
        CheckRow("heat_identity coeff_drift", 1e-12, worst_drift, 0.0,
                 worst_drift < 1e-12, "exact"),
    )
    return ExperimentReport(
        experiment="heat_identity",
        columns=("epsilon", "quantity", "worst_abs_dev"),
        rows=tuple(rows),
        checks=checks,
    )


# ---------------------------------------------------------------------------
# kernels-suite


def _robin_report(n_sites: int) -> ExperimentReport:
    base = RobinKernelSpec(mu=math.exp(-0.1))
    methods = ("image_series", "quadrature", "ode_oracle")
    rows = []
    sup_all = 0.0
    for t in (1.0, 10.0, 100.0):
        mats = {m: robin_matrix(dataclasses.replace(base, method=m), t,
                                n_sites)
                for m in methods}
        for i in range(len(methods)):
            for j in range(i + 1, len(methods)):
                d = float(np.max(np.abs(mats[methods[i]] - mats[methods[j]])))
                rows.append((t, f"{methods[i]} vs {methods[j]}", d))
                sup_all = max(sup_all, d)
    checks = (CheckRow("kernels robin_threeway_sup", 1e-8, sup_all, 0.0,
                       sup_all < 1e-8, "formula"),)
    return ExperimentReport(
        experiment="kernels_robin",
        columns=("t_micro", "pair", "sup_abs_diff"),
        rows=tuple(rows),
        checks=checks,
    )


def _green_report() -> ExperimentReport:
    mu = math.exp(-0.1)
    n = 9
    ident = np.eye(n)
    table_ti = green_cancellation_matrix(mu, n)
    dev_ti = float(np.max(np.abs(table_ti - ident)))
    rows = []
    dev_gs = 0.0
    for x in range(n):
        for xp in range(n):
            val = green_cancellation(mu, x, xp, method="green_solve")
            want = 1.0 if x == xp else 0.0
            dev_gs = max(dev_gs, abs(val - want))
            rows.append((x, xp, float(table_ti[x, xp]), val))
    checks = (
        CheckRow("kernels green_time_integral", 1e-6, dev_ti, 0.0,
                 dev_ti < 1e-6, "formula"),
        CheckRow("kernels green_solve", 1e-6, dev_gs, 0.0, dev_gs < 1e-6,
                 "formula"),
    )
    return ExperimentReport(
        experiment="kernels_green",
        columns=("x", "x_prime", "time_integral", "green_solve"),
        rows=tuple(rows),
        checks=checks,
    )


def _gt_report() -> ExperimentReport:
    t = 1.0
    s_grid = np.linspace(0.0, 1.0, 102)[1:-1]
    u_grid = np.linspace(0.05, 5.0, 100)
    sup_ratio = -math.inf
    sup_at = (0.0, 0.0)
    for s in s_grid:
        for u in u_grid:
            ratio = gt_function(t, float(s), float(u))[1]
            if ratio > sup_ratio:
                sup_ratio = ratio
                sup_at = (float(s), float(u))
    bound = 3.0 / (4.0 * math.sqrt(math.pi))
    rows = [("envelope_sup", sup_at[0], sup_at[1], sup_ratio, bound,
             bound - sup_ratio)]
    quad_dev = 0.0
    for s in (0.25, 0.5, 0.75):
        for u in (0.5, 2.0, 4.5):
            closed = gt_function(t, s, u)[0]
            direct = gt_function_quadrature(t, s, u)
            d = abs(closed - direct)
            quad_dev = max(quad_dev, d)
            rows.append(("closed_vs_quadrature", s, u, closed, direct, d))
    checks = (
        CheckRow("kernels gt_envelope_sup", bound + 1e-9, sup_ratio, 0.0,
                 sup_ratio <= bound + 1e-9, "formula"),
        CheckRow("kernels gt_quadrature_match", 1e-8, quad_dev, 0.0,
                 quad_dev < 1e-8, "formula"),
    )
    return ExperimentReport(
        experiment="kernels_gt",
        columns=("quantity", "s_over_t", "u", "value", "reference",
                 "abs_dev"),
        rows=tuple(rows),
        checks=checks,
    )


def _moment_report() -> ExperimentReport:
    rows = []
    worst_rel = 0.0
    for t in (0.5, 1.0, 2.0):
        for u in (0.25, 0.5, 1.0):
            res = second_moment_nested(t, u)
            ratio = res.value / d_dirichlet_kernel(t, u) ** 2
            closed, _ = second_moment_exact(t, u)
            rel = abs(ratio / closed - 1.0)
            worst_rel = max(worst_rel, rel)
            rows.append((t, u, ratio, closed, rel, res.truncation_bound))
    t_small = 1e-4
    _, envelope = second_moment_exact(t_small, 1.0)
    expansion = 1.0 + 0.75 * math.sqrt(math.pi * t_small)
    small_rel = abs(envelope / expansion - 1.0)
    rows.append((t_small, 0.0, envelope, expansion, small_rel, 0.0))
    checks = (
        CheckRow("kernels nested_vs_closed", 1e-6, worst_rel, 0.0,
                 worst_rel < 1e-6, "formula"),
        CheckRow("kernels small_time_expansion", 1e-3, small_rel, 0.0,
                 small_rel < 1e-3, "formula"),
    )
    return ExperimentReport(
        experiment="kernels_moment",
        columns=("t", "u", "estimate", "closed_form", "rel_dev",
                 "truncation_bound"),
        rows=tuple(rows),
        checks=checks,
    )


def _bounds_report(epsilon: float, horizon: float) -> ExperimentReport:
    rep = bounds_suite(epsilon, horizon)
    rows = []
    checks = []
    for c in rep.rows:
        ref = float("nan") if c.reference is None else c.reference
        rows.append((c.name, c.grid_points, c.constant, c.verified_sup, ref,
                     c.note))
        checks.append(CheckRow(f"kernels bound {c.name}", c.constant,
                               c.verified_sup, 0.0, c.passed, "formula"))
    sqrt_row = next(c for c in rep.rows if c.name == "kernel_sup_sqrt_t")
    checks.append(CheckRow("kernels sqrt_t_constant", 1.2616,
                           sqrt_row.constant, 0.0,
                           sqrt_row.constant <= 1.2616, "formula"))
    return ExperimentReport(
        experiment="kernels_bounds",
        columns=("name", "grid_points", "constant", "verified_sup",
                 "reference", "note"),
        rows=tuple(rows),
        checks=tuple(checks),
    )


def _cmd_kernels_suite(args: argparse.Namespace) -> int:
    parts = tuple(args.only) if args.only else _KERNEL_PARTS
    reports = []
    if "robin" in parts:
        reports.append(_robin_report(args.sites))
    if "green" in parts:
        reports.append(_green_report())
    if "gt" in parts:
        reports.append(_gt_report())
    if "moment" in parts:
        reports.append(_moment_report())
    if "bounds" in parts:
        reports.append(_bounds_report(args.epsilon, args.horizon))
    return _finish(reports, _out_dir("kernels-suite", args), args)


# ---------------------------------------------------------------------------
# she-validate


def _she_report(args: argparse.Namespace) -> ExperimentReport:
    rows = []
    checks = []

    # two-level zero-noise refinement order against the dipole kernel
    def max_err(dx: float, dt: float) -> float:
        noise = sample_noise(dt, dx, 0.256, 3.2, seed=1)
        sol = solve_mild("delta_prime", noise, noise_scale=0.0,
                         warm_fraction=0.02)
        exact = d_dirichlet_kernel(0.256, sol.space)
        return float(np.max(np.abs(sol.values[-1] - exact)))

    coarse = max_err(2.0 * args.dx, 4.0 * args.dt)
    fine = max_err(args.dx, args.dt)
    order = math.log2(coarse / fine)
    rows.append(("zero_noise_err_coarse", coarse, 0.0, "formula"))
    rows.append(("zero_noise_err_fine", fine, 0.0, "formula"))
    checks.append(CheckRow("she zero_noise_order", 0.9, order, 0.0,
                           order >= 0.9, "formula"))

    # ensemble moments at the probe point (t, u) = (0.25, 0.5)
    ens = solve_ensemble("delta_prime", dt=args.dt, dx=args.dx, horizon=0.25,
                         u_max=3.5, replicas=args.replicas, seed=args.seed)
    exact = d_dirichlet_kernel(0.25, 0.5)
    m1 = moment_estimate(ens, 0.25, 0.5, 1)
    checks.append(CheckRow("she ensemble_mean", exact, m1.estimate,
                           m1.stderr,
                           abs(m1.estimate - exact) <= 3.0 * m1.stderr,
                           "mc"))
    m2 = moment_estimate(ens, 0.25, 0.5, 2)
    ratio_target, _ = second_moment_exact(0.25, 0.5)
    target2 = ratio_target * exact ** 2
    rel2 = abs(m2.estimate / target2 - 1.0)
    checks.append(CheckRow("she second_moment_ratio", target2, m2.estimate,
                           m2.stderr, rel2 <= 0.15, "mc"))
    leak = max(sol.leakage for sol in ens)
    checks.append(CheckRow("she leakage_max", 1e-6, leak, 0.0, leak < 1e-6,
                           "formula"))
    rows.append(("ensemble_mean", m1.estimate, m1.stderr, "mc"))
    rows.append(("ensemble_second_moment", m2.estimate, m2.stderr, "mc"))
    rows.append(("growth_class_sup", growth_class_diagnostic(ens), 0.0,
                 "reported"))

    # Picard layers: fit the constant on shallow layers, verify deeper ones
    depth = args.picard_depth
    state = picard_layers(depth, t_max=1.0)

    def implied_constant(n: int) -> float:
        shape = state.times ** (n / 2.0) / math.factorial(n // 2)
        return float(np.max((state.sup_ratio[n] / shape) ** (1.0 / n)))

    fit_set = (1, 2) if depth <= 4 else (1, 2, 3)
    verify_set = tuple(range(max(fit_set) + 1, depth + 1))
    fitted = max(implied_constant(n) for n in fit_set)
    worst_excess = 0.0
    for n in verify_set:
        bound = (fitted ** n * state.times ** (n / 2.0)
                 / math.factorial(n // 2))
        worst_excess = max(worst_excess,
                           float(np.max(state.sup_ratio[n] / bound)))
        rows.append((f"picard_sup_ratio_layer{n}",
                     float(np.max(state.sup_ratio[n])), 0.0, "formula"))
    rows.append(("picard_fitted_constant", fitted, 0.0, "formula"))
    checks.append(CheckRow("she picard_layer_envelope", 1.0, worst_excess,
                           0.0, worst_excess <= 1.0, "formula"))

    return ExperimentReport(
        experiment="she_validate",
        columns=("quantity", "estimate", "stderr", "tag"),
        rows=tuple(rows),
        checks=tuple(checks),
    )


def _cmd_she_validate(args: argparse.Namespace) -> int:
    if args.picard_depth < 3:
        raise SystemExit("--picard-depth must be at least 3 "
                         "(fit needs layers 1-2, verify needs one more)")
    report = _she_report(args)
    return _finish([report], _out_dir("she-validate", args), args)


# ---------------------------------------------------------------------------
# entry point


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fasep",
        description="Facilitated-exclusion / stochastic-heat experiment "
                    "driver: Monte-Carlo convergence runs, exact kernel "
                    "cross-checks, and solver validation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("first-moment",
                       help="transform mean vs exact formula and its "
                            "kernel limit")
    _add_experiment_flags(p)
    p.set_defaults(func=_cmd_first_moment)

    p = sub.add_parser("second-moment",
                       help="transform second moment against the closed "
                            "ratio envelope")
    _add_experiment_flags(p)
    p.set_defaults(func=_cmd_second_moment)

    p = sub.add_parser("martingale",
                       help="martingale-problem residuals and remainder "
                            "trends")
    _add_experiment_flags(p)
    p.set_defaults(func=_cmd_martingale)

    p = sub.add_parser("intertwine",
                       help="generator intertwining (exact + statistical) "
                            "and the lattice heat identity")
    _add_experiment_flags(p)
    p.add_argument("--window-max", type=int, default=12,
                   help="largest window for the exact enumeration sweep")
    p.set_defaults(func=_cmd_intertwine)

    p = sub.add_parser("near-eq",
                       help="near-equilibrium start: profiles, Hoelder "
                            "envelopes, continuum comparison")
    _add_experiment_flags(p)
    p.add_argument("--boundary-param", type=float, default=1.0,
                   help="boundary parameter of the product start")
    p.add_argument("--symmetry", action="store_true",
                   help="also report the small-u symmetry ratio at the "
                        "second lattice site")
    p.set_defaults(func=_cmd_near_eq)

    p = sub.add_parser("kernels-suite",
                       help="deterministic kernel cross-checks and bound "
                            "suite")
    p.add_argument("--only", action="append", choices=_KERNEL_PARTS,
                   help="run only this part (repeatable; default: all)")
    p.add_argument("--sites", type=int, default=25,
                   help="lattice extent for the Robin three-way comparison")
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="asymmetry parameter for the bound suite")
    p.add_argument("--horizon", type=float, default=1.0,
                   help="macroscopic time horizon for the bound suite")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_kernels_suite)

    p = sub.add_parser("she-validate",
                       help="stochastic-heat solver: refinement order, "
                            "ensemble moments, Picard envelope")
    p.add_argument("--dx", type=float, default=0.02,
                   help="fine-level space step")
    p.add_argument("--dt", type=float, default=4e-4,
                   help="fine-level time step")
    p.add_argument("--seed", type=int, default=_DEFAULT_SEED,
                   help="ensemble base seed")
    p.add_argument("--replicas", type=int, default=400,
                   help="ensemble size")
    p.add_argument("--picard-depth", type=int, default=4,
                   help="deepest Picard layer to verify (>= 3)")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_she_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
