"""Truncated Q-Wiener increments and the time-periodic diffusion coefficient.

The driving noise is W(t) = sum_s q_s e_s beta_s(t) over a finite set of
active basis modes; increment tables carry the Q scaling, i.e. entries
are N(0, q_s^2 dt).  The diffusion coefficient acts diagonally in the
same basis,

    (sigma(t, h) w)_s = g(t) * rho(||h||^2) * q_s * w_s,

with g(t) = gmean + gamma cos(2 pi t / P) and either the rational state
gain rho(y) = rho0 / (1 + y) or the constant gain rho(y) = rho0.  Both
choices are bounded with bounded first and second derivatives and are
globally Lipschitz in the state, and the time average of g over one
period is exactly gmean, so the averaged coefficient stays in closed
form.  Because every output is a combination of divergence-free basis
vectors, no projection step is needed.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from nshomog.spectral import (
    SpectralField,
    _modal_injection,
    mode_table,
    sobolev_norm,
)

INCREMENT_STREAM = 0x51A7E  # domain tag separating noise draws from phase draws

# max_a 2a/(1+a^2)^2 = 3*sqrt(3)/8 at a = 1/sqrt(3): the sharp Lipschitz
# constant of a -> rho0/(1+a^2) in the norm a = ||h||.  The documented
# constant below keeps a unit safety margin on half of it.
_RHO_SLOPE_HALF = 3.0 * math.sqrt(3.0) / 16.0


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal covariance: active modes and their amplitudes q_s >= 0."""

    modes: tuple[tuple[int, int], ...]
    amplitudes: tuple[float, ...]

    def __post_init__(self):
        if len(self.modes) != len(self.amplitudes):
            raise ValueError("one amplitude per active mode is required")
        for (s1, s2), q in zip(self.modes, self.amplitudes):
            if (s1, s2) == (0, 0):
                raise ValueError("the zero wavevector cannot carry noise")
            if not (math.isfinite(q) and q >= 0.0):
                raise ValueError(f"amplitude for mode ({s1}, {s2}) must be finite and >= 0")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("active noise modes must be distinct")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def amplitude_array(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=np.float64)

    def max_mode(self) -> int:
        return max((max(abs(a), abs(b)) for a, b in self.modes), default=0)

    @classmethod
    def from_config(cls, cfg: dict) -> "NoiseModel":
        modes = tuple((int(m[0]), int(m[1])) for m in cfg.get("modes", []))
        q = cfg.get("q", [])
        return cls(modes=modes, amplitudes=tuple(float(v) for v in q))


def sample_increments(noise: NoiseModel, dt: float, steps: int, seed: int) -> np.ndarray:
    """Increment table of shape (steps, n_modes): independent N(0, q_s^2 dt).

    Drawn in one pass from a counter-based generator keyed by the seed,
    in canonical (step, mode) order, so the table is identical no matter
    how many workers later consume it.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    gen = np.random.Generator(np.random.Philox(key=(int(seed) & (2**64 - 1), INCREMENT_STREAM)))
    table = gen.standard_normal((steps, noise.n_modes))
    table *= noise.amplitude_array()[None, :] * math.sqrt(dt)
    return table


@dataclass(frozen=True)
class SigmaModel:
    """Diagonal, time-periodic, state-modulated diffusion coefficient."""

    noise: NoiseModel
    period: float = 1.0
    gamma: float = 0.0
    rho0: float = 1.0
    gmean: float = 1.0
    rho_family: str = "rational"  # "rational": rho0/(1+y); "constant": rho0

    def __post_init__(self):
        if self.period <= 0.0:
            raise ValueError("the period must be positive")
        if abs(self.gamma) > 1.0:
            raise ValueError("|gamma| <= 1 is required")
        if self.rho0 <= 0.0:
            raise ValueError("rho0 must be positive")
        if self.rho_family not in ("rational", "constant"):
            raise ValueError(f"unknown rho family {self.rho_family!r}")

    def g(self, t: float) -> float:
        """Temporal profile, evaluated after exact reduction modulo the period.

        Reducing first makes g(t + P) == g(t) bitwise whenever t + P is
        exactly representable.
        """
        phase = math.fmod(t, self.period) / self.period
        return self.gmean + self.gamma * math.cos(2.0 * math.pi * phase)

    @property
    def g_mean(self) -> float:
        """Exact period average of g: the cosine integrates to zero."""
        return self.gmean

    @property
    def sup_g(self) -> float:
        return abs(self.gmean) + abs(self.gamma)

    def rho(self, y: float) -> float:
        if self.rho_family == "constant":
            return self.rho0
        return self.rho0 / (1.0 + y)

    @property
    def lipschitz_constant(self) -> float:
        """Documented state-Lipschitz bound L for h -> sigma(t, h) w.

        With a = ||h||, |d/da rho0/(1+a^2)| = 2 rho0 a/(1+a^2)^2
        <= 2 rho0 max_a a/(1+a^2)^2 = rho0 * 3 sqrt(3)/8, so
        L = sup|g| * rho0 * (3 sqrt(3)/16 + 1) bounds the ratio
        ||sigma(t,h1)w - sigma(t,h2)w|| / (||h1 - h2|| ||Q w||) with a
        comfortable margin (the constant family is 0-Lipschitz).
        """
        return self.sup_g * self.rho0 * (_RHO_SLOPE_HALF + 1.0)

    @classmethod
    def from_config(cls, cfg: dict, noise: NoiseModel) -> "SigmaModel":
        return cls(
            noise=noise,
            period=float(cfg.get("period", 1.0)),
            gamma=float(cfg.get("gamma", 0.0)),
            rho0=float(cfg.get("rho0", 1.0)),
            gmean=float(cfg.get("gmean", 1.0)),
            rho_family=str(cfg.get("rho_family", "rational")),
        )


@lru_cache(maxsize=None)
def _injection(modes: tuple[tuple[int, int], ...], cutoff: int):
    return _modal_injection(cutoff, modes)


def _modulated_field(
    model: SigmaModel, gain: float, state: SpectralField, increments: np.ndarray
) -> SpectralField:
    noise = model.noise
    if noise.max_mode() > state.cutoff:
        raise ValueError(
            f"active noise modes exceed the field cutoff {state.cutoff}"
        )
    w = np.asarray(increments, dtype=np.float64)
    if w.shape != (noise.n_modes,):
        raise ValueError(f"expected one increment per active mode, got shape {w.shape}")
    amps = gain * noise.amplitude_array() * w
    slots, factors = _injection(noise.modes, state.cutoff)
    table = mode_table(state.cutoff)
    coeffs = np.zeros((table.n_modes, 2), dtype=np.complex128)
    np.add.at(coeffs, slots, amps[:, None] * factors)
    return SpectralField(state.cutoff, coeffs)


def apply_sigma(
    model: SigmaModel, t: float, state: SpectralField, increments: np.ndarray
) -> SpectralField:
    """sigma(t, state) applied to a per-mode increment row: modewise
    g(t) rho(||state||^2) q_s w_s along the basis vectors."""
    y = sobolev_norm(state, 0.0) ** 2
    return _modulated_field(model, model.g(t) * model.rho(y), state, increments)


def averaged_sigma(
    model: SigmaModel, state: SpectralField, increments: np.ndarray
) -> SpectralField:
    """Period-averaged coefficient: g replaced by its exact time average."""
    y = sobolev_norm(state, 0.0) ** 2
    return _modulated_field(model, model.g_mean * model.rho(y), state, increments)


def hilbert_schmidt_proxy(model: SigmaModel, t: float, state: SpectralField) -> float:
    """(sum_s (g rho q_s)^2)^{1/2}: the diagonal Hilbert-Schmidt bound."""
    y = sobolev_norm(state, 0.0) ** 2
    gain = model.g(t) * model.rho(y)
    return abs(gain) * float(np.sqrt(np.sum(model.noise.amplitude_array() ** 2)))
