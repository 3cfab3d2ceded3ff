"""Stationary ergodic random potentials and their fast-oscillation rescaling.

The potential is a random-phase trigonometric field

    q(x, omega) = a0 + sum_j a_j cos(k_j . x + theta_j),

with the phases theta_j drawn independently and uniformly on [0, 2 pi).
Shifting all phases by k_j . y realises the measure-preserving spatial
shift, so the field is statistically homogeneous and ergodic, it is
bounded by |a0| + sum |a_j| with an explicit constant, and its ensemble
mean at any point is exactly a0 -- which makes the effective constant
analytically known and attributes every homogenization error to the
solver rather than the medium.

Oscillation scales are restricted to eps = 1/n with integer n, so that
q(x/eps, omega) stays 2 pi periodic and lives on the same torus.
"""

import math
from dataclasses import dataclass

import numpy as np

from nshomog.spectral import TWO_PI, GridField, SpectralField, to_grid

PHASE_STREAM = 0x9E3779B9  # domain tag separating phase draws from other streams


@dataclass(frozen=True)
class PotentialComponent:
    k: tuple[int, int]
    amplitude: float

    def __post_init__(self):
        k1, k2 = self.k
        if (int(k1), int(k2)) == (0, 0):
            raise ValueError("oscillating components must have a nonzero wavevector")
        if not math.isfinite(self.amplitude):
            raise ValueError("component amplitude must be finite")


@dataclass(frozen=True)
class PotentialSpec:
    """Mean plus a finite list of (wavevector, amplitude) oscillations."""

    mean: float = 0.0
    components: tuple[PotentialComponent, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError("potential mean must be finite")

    @property
    def bound(self) -> float:
        """Uniform bound sup_x |q|: the explicit boundedness constant."""
        return abs(self.mean) + sum(abs(c.amplitude) for c in self.components)

    @classmethod
    def from_config(cls, cfg: dict) -> "PotentialSpec":
        comps = tuple(
            PotentialComponent(k=(int(c["k"][0]), int(c["k"][1])), amplitude=float(c["a"]))
            for c in cfg.get("components", [])
        )
        return cls(mean=float(cfg.get("a0", 0.0)), components=comps)


@dataclass(frozen=True)
class EpsilonScale:
    """Oscillation scale eps = 1/n, n a positive integer."""

    inverse: int

    def __post_init__(self):
        if self.inverse < 1:
            raise ValueError("the inverse scale must be a positive integer")

    @property
    def value(self) -> float:
        return 1.0 / self.inverse

    @classmethod
    def from_value(cls, eps: float) -> "EpsilonScale":
        if not (0.0 < eps <= 1.0):
            raise ValueError(f"eps must lie in (0, 1] and equal 1/n for an integer n, got {eps}")
        n = round(1.0 / eps)
        if n < 1 or abs(eps * n - 1.0) > 1e-9:
            raise ValueError(
                f"eps must equal 1/n for a positive integer n (got {eps}); "
                "only reciprocal-integer scales keep the oscillation torus-periodic"
            )
        return cls(inverse=n)


class PotentialRealization:
    """One sample omega of the potential: the spec plus frozen phases."""

    __slots__ = ("spec", "phases")

    def __init__(self, spec: PotentialSpec, phases: np.ndarray):
        phases = np.asarray(phases, dtype=np.float64)
        if phases.shape != (len(spec.components),):
            raise ValueError("one phase per oscillating component is required")
        phases = np.mod(phases, TWO_PI)
        phases.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "phases", phases)

    def __setattr__(self, name, value):
        raise AttributeError("PotentialRealization is immutable")

    def __reduce__(self):
        return (PotentialRealization, (self.spec, np.asarray(self.phases)))

    @property
    def wavevectors(self) -> np.ndarray:
        return np.array([c.k for c in self.spec.components], dtype=np.int64).reshape(-1, 2)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.spec.components], dtype=np.float64)

    def shift(self, y) -> "PotentialRealization":
        """Realize the spatial shift: theta_j -> theta_j + k_j . y (mod 2 pi)."""
        y = np.asarray(y, dtype=np.float64)
        if len(self.spec.components) == 0:
            return PotentialRealization(self.spec, self.phases)
        dot = self.wavevectors @ y
        return PotentialRealization(self.spec, self.phases + dot)

    def evaluate(self, points, eps: EpsilonScale | None = None) -> np.ndarray:
        """q(x / eps, omega) at an array of points (shape (..., 2))."""
        pts = np.asarray(points, dtype=np.float64)
        scalar_input = pts.shape == (2,)
        pts = pts.reshape(-1, 2)
        out = np.full(pts.shape[0], self.spec.mean)
        n = 1 if eps is None else eps.inverse
        for j, comp in enumerate(self.spec.components):
            k1, k2 = comp.k
            out += comp.amplitude * np.cos(
                n * (k1 * pts[:, 0] + k2 * pts[:, 1]) + self.phases[j]
            )
        return float(out[0]) if scalar_input else out

    def grid_samples(self, resolution: int, eps: EpsilonScale | None = None) -> np.ndarray:
        """q(x / eps) on the uniform grid, via integer-frequency waves."""
        x = np.arange(resolution) * (TWO_PI / resolution)
        x1 = x[:, None]
        x2 = x[None, :]
        out = np.full((resolution, resolution), self.spec.mean)
        n = 1 if eps is None else eps.inverse
        for j, comp in enumerate(self.spec.components):
            k1, k2 = comp.k
            out += comp.amplitude * np.cos(n * (k1 * x1 + k2 * x2) + self.phases[j])
        return out


def sample_potential(spec: PotentialSpec, seed: int) -> PotentialRealization:
    """Draw the phases from a counter-based stream keyed by the seed."""
    gen = np.random.Generator(np.random.Philox(key=(int(seed) & (2**64 - 1), PHASE_STREAM)))
    phases = gen.uniform(0.0, TWO_PI, size=len(spec.components))
    return PotentialRealization(spec, phases)


def evaluate_q_eps(realization: PotentialRealization, x, eps: EpsilonScale):
    """Point evaluation of the rescaled potential q(x / eps, omega)."""
    return realization.evaluate(x, eps)


def effective_q(spec: PotentialSpec) -> float:
    """Ensemble mean of q at a point: every uniform-phase cosine averages out."""
    return spec.mean


def oscillation_pairing(
    realization: PotentialRealization,
    eps: EpsilonScale,
    u: SpectralField,
    phi: SpectralField,
    resolution: int | None = None,
) -> float:
    """Torus integral of q(x/eps, omega) (u . phi)(x).

    Quadrature is exact once the grid resolves the full trigonometric
    band of the integrand: the oscillation frequency plus twice the field
    cutoff.  An explicitly under-resolved resolution is rejected.
    """
    if u.cutoff != phi.cutoff:
        raise ValueError(f"cutoff mismatch: {u.cutoff} vs {phi.cutoff}")
    kmax = 0
    for comp in realization.spec.components:
        kmax = max(kmax, abs(comp.k[0]), abs(comp.k[1]))
    required = max(eps.inverse * kmax + 2 * u.cutoff + 1, 2 * u.cutoff + 2)
    if resolution is None:
        resolution = required
    elif resolution < required:
        raise ValueError(
            f"resolution {resolution} under-resolves the pairing integrand; "
            f"need at least {required} (= n*max|k| + 2N + 1)"
        )
    ug = to_grid(u, resolution).samples
    pg = to_grid(phi, resolution).samples
    q = realization.grid_samples(resolution, eps)
    w = (TWO_PI / resolution) ** 2
    return float(np.sum(q * (ug[..., 0] * pg[..., 0] + ug[..., 1] * pg[..., 1])) * w)


def cell_average(realization: PotentialRealization, eps: EpsilonScale, resolution: int | None = None) -> float:
    """Exact torus average of q(x/eps): the Birkhoff limit on the torus."""
    kmax = 0
    for comp in realization.spec.components:
        kmax = max(kmax, abs(comp.k[0]), abs(comp.k[1]))
    required = max(eps.inverse * kmax + 1, 4)
    m = resolution if resolution is not None else required
    if m < required:
        raise ValueError(f"resolution {m} under-resolves the cell average; need {required}")
    q = realization.grid_samples(m, eps)
    return float(np.mean(q))


def grid_field_product(q_samples: np.ndarray, g: GridField) -> GridField:
    """Pointwise scalar-times-vector product on a shared grid."""
    if q_samples.shape != (g.resolution, g.resolution):
        raise ValueError("potential samples and grid field resolutions differ")
    return GridField(g.resolution, q_samples[..., None] * g.samples)
