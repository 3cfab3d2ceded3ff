"""Command-line entry point.

Subcommands:
  simulate    one path -> trajectory.csv
  ensemble    M paths -> stats.csv
  sweep       eps sweep vs the effective system -> sweep.csv + stats.csv
  verify      a-priori-bound and term-limit gates -> report + stats.csv,
              hoelder.csv; exit 3 when a gate fails
  identities  operator and advection identity suites; exit 3 on failure

All randomness flows from the config seed; flags override only the seed,
eps, the member count, and the worker cap.  Exit codes: 0 success,
1 invalid configuration, 2 numerical divergence, 3 failed gates.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from nshomog.config import ConfigError, RunConfig
from nshomog.ensembles import (
    EnsembleError,
    convergence_sweep,
    hoelder_profile,
    resolve_workers,
    run_ensemble,
    term_limit_checks,
)
from nshomog.media import EpsilonScale
from nshomog.nonlinear import identity_suite
from nshomog.output import (
    write_hoelder,
    write_stats,
    write_sweep,
    write_trajectory,
)
from nshomog.spectral import (
    basis_field,
    inner_product,
    leray_project,
    random_field,
    sobolev_norm,
    stokes_apply,
    to_grid,
    to_spectral,
)
from nshomog.stepping import DivergenceError, simulate_path

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_GATE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nshomog", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "ensemble", "sweep", "verify", "identities"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--eps", type=float, default=None, help="override eps (must be 1/n)")
        p.add_argument("--members", type=int, default=None, help="override the ensemble size")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap (NSHOMOG_THREADS as fallback); never affects results")
        p.add_argument("--outdir", type=Path, default=Path("."), help="output directory")
        if name == "identities":
            p.add_argument("--samples", type=int, default=100,
                           help="random triples per cutoff in the identity suite")
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig.from_mapping({})
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.eps is not None:
        overrides["eps"] = args.eps
    if args.members is not None:
        overrides["ensemble"] = {"members": args.members}
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        merged = dict(cfg.raw)
        for key, value in overrides.items():
            if isinstance(value, dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
        cfg = RunConfig.from_mapping(merged)
    return cfg


def _workers(cfg: RunConfig, args) -> int:
    if args.threads is not None:
        return resolve_workers(args.threads)
    if cfg.threads != 1:
        return cfg.threads
    return resolve_workers(None)


def _cmd_simulate(cfg: RunConfig, args) -> int:
    traj = simulate_path(cfg.simulation_config())
    out = args.outdir / "trajectory.csv"
    write_trajectory(out, traj)
    print(f"wrote {out} ({len(traj.times)} samples, T = {traj.times[-1]:g})")
    return EXIT_OK


def _cmd_ensemble(cfg: RunConfig, args) -> int:
    members = cfg.members
    stats = run_ensemble(cfg, members, workers=_workers(cfg, args))
    eps_val = cfg.eps.value if cfg.mode == "oscillating" else 0.0
    rows = stats.rows(eps_val, cfg.mode)
    out = args.outdir / "stats.csv"
    write_stats(out, rows)
    for name, est, hw, _, _ in rows:
        print(f"{name:12s} = {est:.6g} +- {hw:.3g}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_sweep(cfg: RunConfig, args) -> int:
    workers = _workers(cfg, args)
    result = convergence_sweep(cfg, members=cfg.members, workers=workers)
    write_sweep(args.outdir / "sweep.csv", result.rows)
    stats_rows = []
    for (eps_val, mode), stats in sorted(result.stats.items(), key=lambda kv: (-kv[0][0], kv[0][1])):
        stats_rows.extend(stats.rows(eps_val, mode))
    write_stats(args.outdir / "stats.csv", stats_rows)
    for row in result.rows:
        print(
            f"eps={row.eps:<8g} {row.observable:10s} distance={row.distance:.6g} "
            f"p={row.p_value:.3f} pathwise={row.pathwise_l2:.6g}"
        )
    print(f"wrote {args.outdir / 'sweep.csv'} and {args.outdir / 'stats.csv'}")
    return EXIT_OK


class _Gate:
    def __init__(self):
        self.failed = []

    def check(self, name: str, ok: bool, detail: str):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            self.failed.append(name)


def _cmd_verify(cfg: RunConfig, args) -> int:
    workers = _workers(cfg, args)
    gate = _Gate()
    members = cfg.members

    # moment uniformity across the sweep scales
    per_eps = {}
    stats_rows = []
    for eps in cfg.sweep_eps:
        st = run_ensemble(cfg, members, mode="oscillating", eps=eps, workers=workers)
        per_eps[eps.value] = st
        stats_rows.extend(st.rows(eps.value, "oscillating"))
    eff = run_ensemble(cfg, members, mode="effective", workers=workers)
    stats_rows.extend(eff.rows(0.0, "effective"))
    write_stats(args.outdir / "stats.csv", stats_rows)

    worst = 0.0
    for name in per_eps[cfg.sweep_eps[0].value].moments:
        vals = [per_eps[e.value].moments[name][0] for e in cfg.sweep_eps]
        spread = max(vals) / min(vals)
        worst = max(worst, spread)
    gate.check("moment-uniformity", worst <= 2.0, f"max/min across eps = {worst:.4g} (<= 2)")

    ratios = np.concatenate([per_eps[e.value].prop31_ratios for e in cfg.sweep_eps])
    c_fit = float(ratios.max())
    coverage = float(np.mean(ratios <= c_fit))
    gate.check(
        "energy-inequality",
        np.isfinite(c_fit) and coverage >= 0.99,
        f"fitted C = {c_fit:.4g} covers {100 * coverage:.1f}% of members",
    )

    hcfg = cfg.hoelder_run_config()
    hres = hoelder_profile(hcfg, workers=workers)
    write_hoelder(args.outdir / "hoelder.csv", hres.rows)
    spread = hres.ratio_spread()
    gate.check(
        "increment-profile",
        spread <= 5.0,
        f"ratio max/min over the stride ladder = {spread:.4g} (<= 5), slope = {hres.slope:.3g}",
    )

    report = term_limit_checks(cfg, workers=workers)
    gaps = [g for _, g in report.pairing_rows]
    monotone = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    exact = max(g for _, g in report.pairing_exact_rows)
    gate.check(
        "oscillation-pairing",
        monotone and exact <= 1e-10,
        f"gaps non-increasing: {monotone}, beyond-band gap = {exact:.3g} (<= 1e-10)",
    )
    if cfg.sigma.gamma == 0.0:
        floor_p = min(p for _, _, p in report.sigma_rows)
        gate.check(
            "coefficient-average",
            floor_p >= 0.01,
            f"time-constant coefficient: min p-value = {floor_p:.3f} (>= 0.01)",
        )
    else:
        for eps_val, dist, p in report.sigma_rows:
            print(f"INFO coefficient-average eps={eps_val:g}: distance={dist:.4g} p={p:.3f}")
    max_ratio = max(r for _, r, _ in report.continuity_rows)
    gate.check(
        "advection-continuity",
        np.isfinite(max_ratio),
        f"max ||B(u_eps)-B(u)||_-1 ratio = {max_ratio:.4g} (finite)",
    )

    print(f"wrote {args.outdir / 'stats.csv'} and {args.outdir / 'hoelder.csv'}")
    if gate.failed:
        print(f"verify failed: {', '.join(gate.failed)}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def _cmd_identities(cfg: RunConfig, args) -> int:
    gate = _Gate()
    rng = np.random.default_rng(cfg.seed)

    field = random_field(8, rng, slope=3.0)
    projected = leray_project({m.as_tuple(): np.asarray(c) for m, c in field.modes()}, cutoff=8)
    twice = leray_project(projected)
    gate.check(
        "projection-idempotent",
        np.array_equal(projected.coeffs, twice.coeffs),
        "second application is bitwise identical",
    )

    eig_err = 0.0
    for s1 in range(-3, 4):
        for s2 in range(-3, 4):
            if (s1, s2) == (0, 0):
                continue
            e = basis_field(s1, s2, 8)
            eig_err = max(eig_err, float(np.max(np.abs(
                stokes_apply(e).coeffs - (s1 * s1 + s2 * s2) * e.coeffs
            ))))
    gate.check("stokes-eigenrelation", eig_err == 0.0, f"max residual = {eig_err:g} (exact)")

    u = random_field(cfg.cutoff, rng, slope=2.0)
    g = to_grid(u, 2 * cfg.cutoff + 2)
    back = to_spectral(g, cfg.cutoff)
    rt = float(np.max(np.abs(back.coeffs - u.coeffs)) / np.max(np.abs(u.coeffs)))
    gate.check("transform-round-trip", rt <= 1e-12, f"relative error = {rt:.3g} (<= 1e-12)")

    pars = abs(sobolev_norm(u, 0.0) ** 2 - g.l2_norm() ** 2) / sobolev_norm(u, 0.0) ** 2
    gate.check("parseval", pars <= 1e-10, f"relative error = {pars:.3g} (<= 1e-10)")

    interp_ok = True
    for _ in range(200):
        v = random_field(cfg.cutoff, rng, slope=2.0)
        if sobolev_norm(v, 1) ** 2 > sobolev_norm(v, 2) * sobolev_norm(v, 0) * (1 + 1e-12):
            interp_ok = False
    gate.check("interpolation-inequality", interp_ok, "no violation over 200 fields")

    for cutoff in (8, 16):
        reports = identity_suite(cutoff, args.samples, seed=cfg.seed + cutoff)
        worst = max(r.max() for r in reports)
        gate.check(
            f"advection-identities-N{cutoff}",
            worst <= 1e-10,
            f"max normalized residual = {worst:.3g} (<= 1e-10, {args.samples} triples)",
        )
    control = identity_suite(8, max(10, args.samples // 10), seed=cfg.seed, resolution=9)
    control_min = min(r.energy for r in control)
    gate.check(
        "aliasing-negative-control",
        control_min > 1e-6,
        f"undersampled product residual = {control_min:.3g} (> 1e-6)",
    )

    if gate.failed:
        print(f"identities failed: {', '.join(gate.failed)}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args.outdir.mkdir(parents=True, exist_ok=True)
    handler = {
        "simulate": _cmd_simulate,
        "ensemble": _cmd_ensemble,
        "sweep": _cmd_sweep,
        "verify": _cmd_verify,
        "identities": _cmd_identities,
    }[args.command]
    try:
        return handler(cfg, args)
    except (DivergenceError, EnsembleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
