"""Monte Carlo ensembles: moment estimates, the coupled eps-sweep, the
time-increment profile, and the term-by-term limit checks.

Member k of an ensemble runs with seed ``base_seed + k``; the medium is
frozen per member (one realization each, drawn from the member seed), so
the ensemble samples the product of medium and noise randomness.  Members
are independent, may run in a worker pool, and are always reduced in
member order, which keeps every aggregate bit-reproducible regardless of
the worker count.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from nshomog.config import RunConfig
from nshomog.media import EpsilonScale, effective_q, oscillation_pairing, sample_potential
from nshomog.noise import sample_increments
from nshomog.nonlinear import bilinear_b
from nshomog.spectral import SpectralField, sobolev_norm
from nshomog.stats import log_log_slope, mean_half_width, permutation_pvalue, two_sample_distance
from nshomog.stepping import DivergenceError, simulate_path

MOMENT_NAMES = (
    "sup_h0_sq",      # E sup_t ||u||^2          (also the p = 1 power)
    "sup_h0_p4",      # E sup_t ||u||^4          (the p = 2 power)
    "int_h1_sq",      # E int_0^T ||u||_1^2 dt
    "sup_h1_sq",      # E sup_t ||u||_1^2
    "sup_h2_sq",      # E sup_t ||u||_2^2
)


class EnsembleError(RuntimeError):
    def __init__(self, member: int, cause: Exception):
        super().__init__(f"ensemble member {member} failed: {cause}")
        self.member = member
        self.cause = cause


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: explicit argument, else NSHOMOG_THREADS, else 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("NSHOMOG_THREADS", "")
    return max(1, int(env)) if env.strip() else 1


def _pmap(fn, items: Sequence, workers: int) -> list:
    """Order-preserving map; a worker pool only when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        out = []
        for i, item in enumerate(items):
            try:
                out.append(fn(item))
            except DivergenceError as exc:
                raise EnsembleError(i, exc) from exc
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, item) for item in items]
        out = []
        for i, fut in enumerate(futures):
            try:
                out.append(fut.result())
            except DivergenceError as exc:
                raise EnsembleError(i, exc) from exc
        return out


@dataclass(frozen=True)
class EnsembleStats:
    size: int
    moments: dict  # name -> (estimate, half_width)
    prop31_ratios: np.ndarray  # (sup||u||^2 + 2 int ||u||_1^2) / (1 + ||u0||^2)
    energy_obs: np.ndarray     # ||u(T)||^2 per member
    mode_obs: np.ndarray       # complex (members, n_observables)
    observable_modes: tuple

    def rows(self, eps: float, mode: str) -> list[tuple]:
        return [
            (name, self.moments[name][0], self.moments[name][1], eps, mode)
            for name in MOMENT_NAMES
        ]


def _member_payload(traj):
    s = traj.summary
    return (
        (s.sup_h0_sq, s.sup_h0_p4, s.int_h1_sq, s.sup_h1_sq, s.sup_h2_sq, s.u0_h0_sq),
        traj.norm0[-1] ** 2,
        traj.observables[-1].copy(),
    )


def _run_single(args):
    cfg, seed, mode, eps = args
    traj = simulate_path(cfg.simulation_config(member_seed=seed, mode=mode, eps=eps))
    return _member_payload(traj)


def _run_coupled(args):
    """One member of a coupled pair: oscillating and effective paths share
    the same increment table; returns both payloads plus ||u_eps - u||_1^2."""
    cfg, seed, eps = args
    osc_cfg = cfg.simulation_config(member_seed=seed, mode="oscillating", eps=eps)
    increments = sample_increments(cfg.sigma.noise, cfg.dt, cfg.n_steps, seed)
    osc = simulate_path(osc_cfg, increments=increments)
    eff = simulate_path(
        cfg.simulation_config(member_seed=seed, mode="effective"), increments=increments
    )
    diff = osc.final - eff.final
    return (_member_payload(osc), _member_payload(eff), sobolev_norm(diff, 1.0) ** 2)


def _collect_stats(payloads, observable_modes) -> EnsembleStats:
    summaries = np.array([p[0] for p in payloads])
    energy = np.array([p[1] for p in payloads])
    modes = np.array([p[2] for p in payloads])
    names_idx = {n: i for i, n in enumerate(MOMENT_NAMES)}
    moments = {
        name: mean_half_width(summaries[:, names_idx[name]]) for name in MOMENT_NAMES
    }
    ratios = (summaries[:, 0] + 2.0 * summaries[:, 2]) / (1.0 + summaries[:, 5])
    return EnsembleStats(
        size=len(payloads),
        moments=moments,
        prop31_ratios=ratios,
        energy_obs=energy,
        mode_obs=modes,
        observable_modes=tuple(observable_modes),
    )


def run_ensemble(
    cfg: RunConfig,
    members: int,
    mode: Optional[str] = None,
    eps: Optional[EpsilonScale] = None,
    workers: Optional[int] = None,
    seed_offset: int = 0,
) -> EnsembleStats:
    """M independent paths with seeds base + offset + member index."""
    if members < 2:
        raise ValueError("an ensemble needs at least 2 members")
    tasks = [(cfg, cfg.seed + seed_offset + k, mode, eps) for k in range(members)]
    payloads = _pmap(_run_single, tasks, resolve_workers(workers))
    return _collect_stats(payloads, cfg.observables)


# ---------------------------------------------------------------------------
# eps-sweep against the effective system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    eps: float
    observable: str
    distance: float
    p_value: float
    pathwise_l2: float  # E||u_eps(T) - u(T)||_1^2, NaN when uncoupled


@dataclass(frozen=True)
class SweepResult:
    rows: list
    stats: dict      # (eps_value, mode) -> EnsembleStats
    pathwise: dict   # eps_value -> (estimate, half_width); empty when uncoupled


def _observable_samples(stats: EnsembleStats) -> list[tuple[str, np.ndarray]]:
    out = [("energy", stats.energy_obs)]
    for j, (s1, s2) in enumerate(stats.observable_modes):
        z = stats.mode_obs[:, j]
        out.append((f"mode_{s1}_{s2}", np.stack([z.real, z.imag], axis=1)))
    return out


def convergence_sweep(
    cfg: RunConfig,
    eps_list: Optional[Sequence[EpsilonScale]] = None,
    members: Optional[int] = None,
    coupled: Optional[bool] = None,
    workers: Optional[int] = None,
    permutations: Optional[int] = None,
) -> SweepResult:
    """For each eps: M oscillating and M effective paths, the energy
    distance and permutation p-value per terminal observable, and (when
    coupled) the mean squared H1 gap along shared-noise pairs."""
    eps_list = list(eps_list if eps_list is not None else cfg.sweep_eps)
    members = members if members is not None else cfg.members
    coupled = cfg.sweep_coupled if coupled is None else coupled
    permutations = permutations if permutations is not None else cfg.permutations
    vals = [e.value for e in eps_list]
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ValueError("the eps list must be strictly decreasing")

    workers = resolve_workers(workers)
    rows: list[SweepRow] = []
    stats: dict = {}
    pathwise: dict = {}
    for eps in eps_list:
        if coupled:
            tasks = [(cfg, cfg.seed + k, eps) for k in range(members)]
            results = _pmap(_run_coupled, tasks, workers)
            osc_stats = _collect_stats([r[0] for r in results], cfg.observables)
            eff_stats = _collect_stats([r[1] for r in results], cfg.observables)
            gaps = np.array([r[2] for r in results])
            pathwise[eps.value] = mean_half_width(gaps)
            path_val = pathwise[eps.value][0]
        else:
            # fresh seeds per eps on both sides: sweep rows stay independent
            osc_stats = run_ensemble(
                cfg, members, mode="oscillating", eps=eps, workers=workers,
                seed_offset=10_000 * eps.inverse,
            )
            eff_stats = run_ensemble(
                cfg, members, mode="effective", workers=workers,
                seed_offset=500_000 + 10_000 * eps.inverse,
            )
            path_val = math.nan
        stats[(eps.value, "oscillating")] = osc_stats
        stats[(eps.value, "effective")] = eff_stats
        for j, (name, osc_sample) in enumerate(_observable_samples(osc_stats)):
            eff_sample = _observable_samples(eff_stats)[j][1]
            perm_seed = (cfg.seed * 1000003 + eps.inverse * 1009 + j) & (2**63 - 1)
            distance, p = permutation_pvalue(
                osc_sample, eff_sample, permutations=permutations, seed=perm_seed
            )
            rows.append(SweepRow(eps.value, name, distance, p, path_val))
    return SweepResult(rows=rows, stats=stats, pathwise=pathwise)


# ---------------------------------------------------------------------------
# time-increment (Hoelder) profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HoelderResult:
    rows: list          # (dt, value, ratio = value / sqrt(dt))
    slope: float        # log-log slope of value against dt

    def ratio_spread(self) -> float:
        ratios = [r[2] for r in self.rows if r[0] > 0.0]
        return max(ratios) / min(ratios)


def _hoelder_member(args):
    cfg, seed, mode, eps, store_stride, lag_counts = args
    sim = cfg.simulation_config(member_seed=seed, mode=mode, eps=eps, store_stride=store_stride)
    traj = simulate_path(sim)
    states = traj.states
    from nshomog.spectral import mode_table  # local import keeps workers lean

    s_sq = mode_table(cfg.cutoff).s_sq
    out = []
    for lag in lag_counts:
        if lag == 0:
            out.append(0.0)
            continue
        acc = 0.0
        count = 0
        for i in range(len(states) - lag):
            d = states[i + lag] - states[i]
            abs2 = np.abs(d[:, 0]) ** 2 + np.abs(d[:, 1]) ** 2
            acc += 2.0 * float(np.sum(abs2 * s_sq))
            count += 1
        out.append(acc / count if count else math.nan)
    return np.array(out)


def hoelder_profile(
    cfg: RunConfig,
    members: Optional[int] = None,
    dt_ladder: Optional[Sequence[float]] = None,
    mode: Optional[str] = None,
    eps: Optional[EpsilonScale] = None,
    workers: Optional[int] = None,
) -> HoelderResult:
    """E ||u(t + dt) - u(t)||_1^2 over a ladder of strides, averaged over
    all anchor times on the stored grid and over members."""
    members = members if members is not None else cfg.hoelder_members
    ladder = [float(v) for v in (dt_ladder if dt_ladder is not None else cfg.hoelder_ladder)]
    steps = []
    for value in ladder:
        if value == 0.0:
            steps.append(0)
            continue
        k = round(value / cfg.dt)
        if k < 1 or abs(k * cfg.dt - value) > 1e-9 * value:
            raise ValueError(
                f"ladder stride {value} is not an integer multiple of dt = {cfg.dt}; "
                "increments are only sampled on the step grid"
            )
        steps.append(k)
    positive = [k for k in steps if k > 0]
    store = math.gcd(*positive) if positive else 1
    lag_counts = [k // store for k in steps]
    tasks = [
        (cfg, cfg.seed + k, mode, eps, store, lag_counts) for k in range(members)
    ]
    per_member = np.array(_pmap(_hoelder_member, tasks, resolve_workers(workers)))
    values = per_member.mean(axis=0)
    rows = [
        (ladder[i], float(values[i]), float(values[i] / math.sqrt(ladder[i])) if ladder[i] > 0 else 0.0)
        for i in range(len(ladder))
    ]
    fit = [(d, v) for d, v in zip(ladder, values) if d > 0 and v > 0]
    slope = log_log_slope([d for d, _ in fit], [v for _, v in fit]) if len(fit) >= 2 else math.nan
    return HoelderResult(rows=rows, slope=slope)


# ---------------------------------------------------------------------------
# term-by-term limit checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TermLimitReport:
    pairing_rows: list          # (eps, |pairing - q_bar <u, phi>|)
    pairing_exact_rows: list    # same, for scales beyond the interaction band
    sigma_rows: list            # (eps, energy distance, p_value) for the time-average law
    continuity_rows: list       # (eps, max ratio, mean ratio) along coupled paths
    band_threshold: int         # smallest 1/eps with exact pairing


def _continuity_member(args):
    cfg, seed, eps, store_stride = args
    osc_cfg = cfg.simulation_config(member_seed=seed, mode="oscillating", eps=eps,
                                    store_stride=store_stride)
    increments = sample_increments(cfg.sigma.noise, cfg.dt, cfg.n_steps, seed)
    osc = simulate_path(osc_cfg, increments=increments)
    eff = simulate_path(
        cfg.simulation_config(member_seed=seed, mode="effective", store_stride=store_stride),
        increments=increments,
    )
    ratios = []
    for a, b in zip(osc.states, eff.states):
        ue = SpectralField(cfg.cutoff, a)
        u = SpectralField(cfg.cutoff, b)
        den = (sobolev_norm(ue, 1) + sobolev_norm(u, 1)) * sobolev_norm(ue - u, 1)
        if den == 0.0:
            continue
        num = sobolev_norm(bilinear_b(ue, ue) - bilinear_b(u, u), -1.0)
        ratios.append(num / den)
    return np.array(ratios)


def pairing_probe_field(cutoff: int, base: float = 0.25) -> SpectralField:
    """Coherent band-limited probe for the oscillation-pairing check.

    Geometric amplitudes along one lattice ray keep the coefficients of
    the probe product strictly decaying with frequency, so the pairing
    gap is monotone in the oscillation rate instead of fluctuating with
    random spectral signs.
    """
    from nshomog.spectral import SpectralField as _SF, basis_field

    f = _SF.zeros(cutoff)
    for j in range(1, cutoff + 1):
        f = f + (base**j) * basis_field(j, 0, cutoff)
    return f


def term_limit_checks(
    cfg: RunConfig,
    eps_list: Optional[Sequence[EpsilonScale]] = None,
    members: int = 16,
    workers: Optional[int] = None,
    permutations: int = 500,
) -> TermLimitReport:
    """Empirical shadows of the three term-by-term limits.

    (a) the oscillation pairing against q-bar <u, phi> for frozen smooth
    fields, across the sweep and beyond the interaction band; (b) the law
    of the stochastically integrated coefficient at fast time against its
    period average, on the decoupled single-mode linear test; (c) the
    advection continuity ratio along coupled paths.
    """
    eps_list = list(eps_list if eps_list is not None else cfg.sweep_eps)
    workers = resolve_workers(workers)

    # (a) oscillation pairing on frozen band-limited fields
    u = pairing_probe_field(cfg.cutoff)
    phi = pairing_probe_field(cfg.cutoff)
    realization = sample_potential(cfg.potential, cfg.seed)
    q_bar = effective_q(cfg.potential)
    from nshomog.spectral import inner_product  # local to avoid cycle at import time

    target = q_bar * inner_product(u, phi)
    pairing_rows = []
    for eps in eps_list:
        gap = abs(oscillation_pairing(realization, eps, u, phi) - target)
        pairing_rows.append((eps.value, gap))
    kmin = min(
        (max(abs(c.k[0]), abs(c.k[1])) for c in cfg.potential.components), default=1
    )
    band_threshold = (2 * cfg.cutoff) // max(kmin, 1) + 1
    pairing_exact_rows = []
    for n in (band_threshold + 1, band_threshold + 3, 2 * band_threshold):
        eps = EpsilonScale(n)
        gap = abs(oscillation_pairing(realization, eps, u, phi) - target)
        pairing_exact_rows.append((eps.value, gap))

    # (b) sigma time-average law on the decoupled single-mode linear test
    q0 = cfg.noise.amplitudes[0] if cfg.noise.amplitudes and cfg.noise.amplitudes[0] > 0 else 0.3
    lin = RunConfig.from_mapping(
        {
            **dict(cfg.raw),
            "potential": {"a0": cfg.potential.mean, "components": []},
            "noise": {"modes": [[1, 0]], "q": [float(q0)]},
            "sigma": {
                "period": cfg.sigma.period,
                "gamma": cfg.sigma.gamma,
                "rho0": cfg.sigma.rho0,
                "gmean": cfg.sigma.gmean,
                "rho_family": "constant",
            },
            "initial": {"kind": "single_mode", "s": [1, 0], "amplitude": 1.0},
            "observables": [[1, 0]],
        }
    )
    sigma_rows = []
    eff_stats = run_ensemble(lin, members=max(members, 32), mode="effective",
                             workers=workers, seed_offset=700_000)
    eff_sample = _observable_samples(eff_stats)[1][1]
    for eps in eps_list:
        osc_stats = run_ensemble(lin, members=max(members, 32), mode="oscillating",
                                 eps=eps, workers=workers)
        osc_sample = _observable_samples(osc_stats)[1][1]
        d, p = permutation_pvalue(
            osc_sample, eff_sample, permutations=permutations,
            seed=(cfg.seed * 31 + eps.inverse) & (2**63 - 1),
        )
        sigma_rows.append((eps.value, d, p))

    # (c) advection continuity along coupled paths
    continuity_rows = []
    store = max(1, cfg.n_steps // 16)
    for eps in eps_list:
        tasks = [(cfg, cfg.seed + k, eps, store) for k in range(members)]
        ratio_arrays = _pmap(_continuity_member, tasks, workers)
        ratios = np.concatenate([r for r in ratio_arrays if r.size]) if ratio_arrays else np.array([])
        if ratios.size == 0 or not np.all(np.isfinite(ratios)):
            raise ArithmeticError("advection continuity ratios must be finite")
        continuity_rows.append((eps.value, float(ratios.max()), float(ratios.mean())))

    return TermLimitReport(
        pairing_rows=pairing_rows,
        pairing_exact_rows=pairing_exact_rows,
        sigma_rows=sigma_rows,
        continuity_rows=continuity_rows,
        band_threshold=band_threshold,
    )
