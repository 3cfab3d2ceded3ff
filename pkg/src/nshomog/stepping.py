"""Semi-implicit Euler-Maruyama stepping for the oscillating and the
effective system.

Each step treats the Stokes term implicitly (unconditionally stable, and
the per-mode factor 1/(1 + nu dt |s|^2) <= 1 preserves dissipation) and
everything else explicitly:

    u_next_s = (1 + nu dt |s|^2)^{-1} [ u_s + dt (-B(u)_s + P(q u)_s)
                                        + (sigma(t, u) dW)_s ].

In oscillating mode q is the rescaled potential q(x/eps, omega) and the
diffusion coefficient is evaluated at the rescaled time t/eps; in
effective mode the constants q-bar and the period-averaged coefficient
are used instead.  The noise enters in the Ito sense with no correction
term.

The projected coefficient product P(q u) is computed as an exact sparse
convolution: each cosine component of the potential shifts the velocity
spectrum by its (integer) oscillation frequency, which agrees with the
padded-grid product to rounding while skipping the large transforms.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from nshomog.media import EpsilonScale, PotentialRealization
from nshomog.noise import NoiseModel, SigmaModel, sample_increments
from nshomog.nonlinear import DEFAULT_RULE, _advection_raw
from nshomog.spectral import SpectralField, _modal_injection, mode_table


class DivergenceError(RuntimeError):
    """Blow-up guard trip: the H1 norm crossed the configured ceiling."""

    def __init__(self, time: float, norm: float, ceiling: float):
        super().__init__(
            f"||u||_1 = {norm:.6g} exceeded the ceiling {ceiling:.6g} at t = {time:.6g}"
        )
        self.time = time
        self.norm = norm
        self.ceiling = ceiling


@dataclass(frozen=True)
class Oscillating:
    """Rapidly oscillating coefficients: q(x/eps, omega), sigma(t/eps, .)."""

    eps: EpsilonScale
    realization: PotentialRealization


@dataclass(frozen=True)
class Effective:
    """Constant coefficients: q replaced by q-bar, sigma by its time average."""

    q_bar: float


CoefficientMode = Union[Oscillating, Effective]


@dataclass(frozen=True)
class SimulationConfig:
    cutoff: int
    dt: float
    n_steps: int
    coefficients: CoefficientMode
    sigma: SigmaModel
    u0: SpectralField
    seed: int
    nu: float = 1.0
    sample_stride: int = 1
    observables: tuple[tuple[int, int], ...] = ()
    blowup_ceiling: float = 1.0e6
    store_stride: Optional[int] = None

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError("at least one step is required")
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if self.u0.cutoff != self.cutoff:
            raise ValueError("initial condition cutoff differs from the solver cutoff")
        if self.sigma.noise.max_mode() > self.cutoff:
            raise ValueError("active noise modes exceed the solver cutoff")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        for s1, s2 in self.observables:
            if not (s1 > 0 or (s1 == 0 and s2 > 0)):
                raise ValueError(f"observable mode ({s1}, {s2}) must be half-lattice")
            if max(abs(s1), abs(s2)) > self.cutoff:
                raise ValueError(f"observable mode ({s1}, {s2}) outside cutoff")

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt


@dataclass(frozen=True)
class PathSummary:
    """Per-path running statistics over every step (t = 0 included)."""

    sup_h0_sq: float
    sup_h0_p4: float
    sup_h1_sq: float
    sup_h2_sq: float
    int_h1_sq: float
    u0_h0_sq: float
    u0_h1_sq: float


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    norm0: np.ndarray
    norm1: np.ndarray
    norm2: np.ndarray
    observables: np.ndarray  # complex, shape (len(times), n_observables)
    observable_modes: tuple[tuple[int, int], ...]
    summary: PathSummary
    final: SpectralField
    states: Optional[list[np.ndarray]] = None

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        for arr in (self.norm0, self.norm1, self.norm2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite norms in trajectory")


@lru_cache(maxsize=None)
def _shift_plan(cutoff: int, d1: int, d2: int):
    """Gather plan for u_{s - d} over all stored target modes s.

    Returns (index, conjugate, absent): stored slot of the source mode,
    whether its conjugate is needed, and a mask for sources outside the
    lattice (including the excluded origin).
    """
    table = mode_table(cutoff)
    n = table.n_modes
    idx = np.zeros(n, dtype=np.int64)
    conj = np.zeros(n, dtype=bool)
    absent = np.zeros(n, dtype=bool)
    for i in range(n):
        p1 = int(table.s[i, 0]) - d1
        p2 = int(table.s[i, 1]) - d2
        if (p1 == 0 and p2 == 0) or max(abs(p1), abs(p2)) > cutoff:
            absent[i] = True
            continue
        j, c = table.slot(p1, p2)
        idx[i] = j
        conj[i] = c
    for a in (idx, conj, absent):
        a.flags.writeable = False
    return idx, conj, absent


def _gather_shifted(coeffs: np.ndarray, plan) -> np.ndarray:
    idx, conj, absent = plan
    out = coeffs[idx].copy()
    out[conj] = np.conj(out[conj])
    out[absent] = 0.0
    return out


class Stepper:
    """Precomputed single-path stepper; one instance per path."""

    def __init__(self, cfg: SimulationConfig):
        self.cfg = cfg
        table = mode_table(cfg.cutoff)
        self.table = table
        self.s_sq = table.s_sq
        self.s_sq2 = table.s_sq**2
        self.perp = table.perp
        self.implicit = 1.0 / (1.0 + cfg.nu * cfg.dt * table.s_sq)
        self.pad = DEFAULT_RULE.padded(cfg.cutoff)
        mode = cfg.coefficients
        if isinstance(mode, Oscillating):
            real = mode.realization
            n = mode.eps.inverse
            self.q_mean = real.spec.mean
            self.q_terms = []
            for j, comp in enumerate(real.spec.components):
                d1, d2 = n * comp.k[0], n * comp.k[1]
                phase = np.exp(1j * real.phases[j])
                half = 0.5 * comp.amplitude
                self.q_terms.append(
                    (half * phase, _shift_plan(cfg.cutoff, d1, d2),
                     half * np.conj(phase), _shift_plan(cfg.cutoff, -d1, -d2))
                )
            self.time_scale = float(mode.eps.inverse)
            self.averaged = False
        else:
            self.q_mean = mode.q_bar
            self.q_terms = []
            self.time_scale = 1.0
            self.averaged = True
        sigma = cfg.sigma
        self.sigma = sigma
        self.noise_q = sigma.noise.amplitude_array()
        self.slots, self.factors = _modal_injection(cfg.cutoff, sigma.noise.modes)
        self.ceiling_sq = cfg.blowup_ceiling**2

    def _project(self, raw: np.ndarray) -> np.ndarray:
        tang = (self.perp[:, 0] * raw[:, 0] + self.perp[:, 1] * raw[:, 1]) / self.s_sq
        return tang[:, None] * self.perp

    def _coefficient_term(self, coeffs: np.ndarray) -> np.ndarray:
        """P(q u): the mean acts diagonally; each oscillation shifts the
        spectrum by its frequency and is then projected."""
        if not self.q_terms:
            return self.q_mean * coeffs
        raw = self.q_mean * coeffs
        for fwd_c, fwd_plan, bwd_c, bwd_plan in self.q_terms:
            raw = raw + fwd_c * _gather_shifted(coeffs, fwd_plan)
            raw = raw + bwd_c * _gather_shifted(coeffs, bwd_plan)
        return self._project(raw)

    def step_raw(self, coeffs: np.ndarray, t: float, increments: np.ndarray) -> np.ndarray:
        abs2 = np.abs(coeffs[:, 0]) ** 2 + np.abs(coeffs[:, 1]) ** 2
        h0_sq = 2.0 * float(np.sum(abs2))
        advection = self._project(_advection_raw(coeffs, coeffs, self.cfg.cutoff, self.pad))
        qu = self._coefficient_term(coeffs)
        if self.averaged:
            gain = self.sigma.g_mean * self.sigma.rho(h0_sq)
        else:
            gain = self.sigma.g(t * self.time_scale) * self.sigma.rho(h0_sq)
        rhs = coeffs + self.cfg.dt * (qu - advection)
        amps = gain * self.noise_q * increments
        np.add.at(rhs, self.slots, amps[:, None] * self.factors)
        out = rhs * self.implicit[:, None]
        if not np.all(np.isfinite(out.view(np.float64))):
            raise DivergenceError(t + self.cfg.dt, math.inf, self.cfg.blowup_ceiling)
        return out

    def check_ceiling(self, coeffs: np.ndarray, t: float):
        abs2 = np.abs(coeffs[:, 0]) ** 2 + np.abs(coeffs[:, 1]) ** 2
        h1_sq = 2.0 * float(np.sum(abs2 * self.s_sq))
        if h1_sq > self.ceiling_sq:
            raise DivergenceError(t, math.sqrt(h1_sq), self.cfg.blowup_ceiling)


def step(
    u: SpectralField, t: float, cfg: SimulationConfig, increments: np.ndarray
) -> SpectralField:
    """One semi-implicit step from state u at time t (convenience wrapper;
    paths should iterate a Stepper, which caches the per-config plans)."""
    stepper = Stepper(cfg)
    out = stepper.step_raw(u.coeffs, t, np.asarray(increments, dtype=np.float64))
    stepper.check_ceiling(out, t + cfg.dt)
    return SpectralField(cfg.cutoff, out)


def simulate_path(cfg: SimulationConfig, increments: Optional[np.ndarray] = None) -> Trajectory:
    """Integrate one path and record norms, observables, and summaries.

    The increment table defaults to the counter-based stream keyed by the
    config seed; passing one explicitly supports common-noise coupling
    and step-refinement studies.  A path is a strict recurrence, so the
    result is bit-reproducible for fixed (config, increments).
    """
    stepper = Stepper(cfg)
    if increments is None:
        increments = sample_increments(cfg.sigma.noise, cfg.dt, cfg.n_steps, cfg.seed)
    increments = np.asarray(increments, dtype=np.float64)
    if increments.shape != (cfg.n_steps, cfg.sigma.noise.n_modes):
        raise ValueError(
            f"increment table must have shape {(cfg.n_steps, cfg.sigma.noise.n_modes)}, "
            f"got {increments.shape}"
        )

    table = stepper.table
    obs_idx = np.array([table.index[m] for m in cfg.observables], dtype=np.int64)
    obs_perp = table.perp[obs_idx] if len(obs_idx) else np.zeros((0, 2))
    obs_abs = table.abs_s[obs_idx] if len(obs_idx) else np.zeros(0)

    def observe(coeffs):
        if len(obs_idx) == 0:
            return np.zeros(0, dtype=np.complex128)
        sel = coeffs[obs_idx]
        return (obs_perp[:, 0] * sel[:, 0] + obs_perp[:, 1] * sel[:, 1]) / obs_abs

    def norms_sq(coeffs):
        abs2 = np.abs(coeffs[:, 0]) ** 2 + np.abs(coeffs[:, 1]) ** 2
        return (
            2.0 * float(np.sum(abs2)),
            2.0 * float(np.sum(abs2 * stepper.s_sq)),
            2.0 * float(np.sum(abs2 * stepper.s_sq2)),
        )

    u = cfg.u0.coeffs.copy()
    h0, h1, h2 = norms_sq(u)
    sup_h0, sup_h1, sup_h2 = h0, h1, h2
    sup_h0_p4 = h0 * h0
    int_h1 = 0.0
    u0_h0_sq, u0_h1_sq = h0, h1

    times = [0.0]
    n0 = [math.sqrt(h0)]
    n1 = [math.sqrt(h1)]
    n2 = [math.sqrt(h2)]
    obs = [observe(u)]
    states = None
    if cfg.store_stride is not None:
        states = [u.copy()]

    for n in range(cfg.n_steps):
        t = n * cfg.dt
        u = stepper.step_raw(u, t, increments[n])
        t_next = (n + 1) * cfg.dt
        prev_h1 = h1
        h0, h1, h2 = norms_sq(u)
        if h1 > stepper.ceiling_sq:
            raise DivergenceError(t_next, math.sqrt(h1), cfg.blowup_ceiling)
        sup_h0 = max(sup_h0, h0)
        sup_h1 = max(sup_h1, h1)
        sup_h2 = max(sup_h2, h2)
        sup_h0_p4 = max(sup_h0_p4, h0 * h0)
        int_h1 += 0.5 * (prev_h1 + h1) * cfg.dt
        if (n + 1) % cfg.sample_stride == 0 or n + 1 == cfg.n_steps:
            if times[-1] < t_next:
                times.append(t_next)
                n0.append(math.sqrt(h0))
                n1.append(math.sqrt(h1))
                n2.append(math.sqrt(h2))
                obs.append(observe(u))
        if states is not None and (n + 1) % cfg.store_stride == 0:
            states.append(u.copy())

    summary = PathSummary(
        sup_h0_sq=sup_h0,
        sup_h0_p4=sup_h0_p4,
        sup_h1_sq=sup_h1,
        sup_h2_sq=sup_h2,
        int_h1_sq=int_h1,
        u0_h0_sq=u0_h0_sq,
        u0_h1_sq=u0_h1_sq,
    )
    return Trajectory(
        times=np.array(times),
        norm0=np.array(n0),
        norm1=np.array(n1),
        norm2=np.array(n2),
        observables=np.array(obs) if obs else np.zeros((0, 0), dtype=np.complex128),
        observable_modes=cfg.observables,
        summary=summary,
        final=SpectralField(cfg.cutoff, u),
        states=states,
    )


def with_mode(cfg: SimulationConfig, coefficients: CoefficientMode) -> SimulationConfig:
    """Same run with the coefficient mode swapped (used by coupled sweeps)."""
    return replace(cfg, coefficients=coefficients)
