"""Divergence-free spectral velocity fields on the 2-torus.

A field is stored as complex Fourier amplitudes ``u_s`` over the half
lattice (``s1 > 0`` or ``s1 == 0, s2 > 0``) with ``max(|s1|,|s2|) <= N``;
the other half is implied by ``u_{-s} = conj(u_s)``, which makes the
reality constraint structural.  The normalisation is

    u(x) = sum_s u_s exp(i s.x) / (2 pi)

so that ``sum_s |u_s|^2`` over the full lattice equals the squared L2
norm of the grid samples (Parseval holds with constant one), and the
mode-weighted norms ``(sum |u_s|^2 |s|^{2r})^{1/2}`` are exactly the
Sobolev scale used throughout.

The mean mode ``s = 0`` is excluded everywhere: fields are mean zero by
construction.
"""

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np
import scipy.fft as _fft

TWO_PI = 2.0 * math.pi


def half_lattice(s1: int, s2: int) -> bool:
    """True for exactly one of each conjugate pair {s, -s}."""
    return s1 > 0 or (s1 == 0 and s2 > 0)


@dataclass(frozen=True, order=True)
class Mode:
    """A wavevector in Z^2 minus the origin."""

    s1: int
    s2: int

    def __post_init__(self):
        if self.s1 == 0 and self.s2 == 0:
            raise ValueError("the zero wavevector is not a valid mode")

    @property
    def is_half_lattice(self) -> bool:
        return half_lattice(self.s1, self.s2)

    def __neg__(self) -> "Mode":
        return Mode(-self.s1, -self.s2)

    def as_tuple(self) -> tuple[int, int]:
        return (self.s1, self.s2)


class ModeTable:
    """Canonical half-lattice mode enumeration for a cutoff, with the
    per-mode geometry (|s|^2, s-perp) needed by every operator."""

    __slots__ = ("cutoff", "n_modes", "s", "s_sq", "abs_s", "perp", "index")

    def __init__(self, cutoff: int):
        if cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {cutoff}")
        pairs = []
        for s1 in range(0, cutoff + 1):
            lo = 1 if s1 == 0 else -cutoff
            for s2 in range(lo, cutoff + 1):
                if s1 == 0 and s2 == 0:
                    continue
                pairs.append((s1, s2))
        self.cutoff = cutoff
        self.n_modes = len(pairs)
        self.s = np.array(pairs, dtype=np.int64)
        self.s_sq = (self.s[:, 0] ** 2 + self.s[:, 1] ** 2).astype(np.float64)
        self.abs_s = np.sqrt(self.s_sq)
        self.perp = np.stack([-self.s[:, 1], self.s[:, 0]], axis=1).astype(np.float64)
        self.index = {pair: i for i, pair in enumerate(pairs)}

    def slot(self, s1: int, s2: int) -> tuple[int, bool]:
        """Storage slot for a full-lattice wavevector.

        Returns ``(index, conjugate)``: ``conjugate`` is True when the
        stored amplitude is the conjugate of the requested one.
        """
        if half_lattice(s1, s2):
            return self.index[(s1, s2)], False
        return self.index[(-s1, -s2)], True


@lru_cache(maxsize=None)
def mode_table(cutoff: int) -> ModeTable:
    return ModeTable(cutoff)


class SpectralField:
    """Immutable mean-zero divergence-free velocity field."""

    __slots__ = ("cutoff", "coeffs")

    def __init__(self, cutoff: int, coeffs: np.ndarray):
        table = mode_table(cutoff)
        arr = np.asarray(coeffs, dtype=np.complex128)
        if arr.shape != (table.n_modes, 2):
            raise ValueError(
                f"coefficient array must have shape {(table.n_modes, 2)} for "
                f"cutoff {cutoff}, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("non-finite coefficients")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    def __reduce__(self):
        return (SpectralField, (self.cutoff, np.asarray(self.coeffs)))

    @classmethod
    def zeros(cls, cutoff: int) -> "SpectralField":
        return cls(cutoff, np.zeros((mode_table(cutoff).n_modes, 2), dtype=np.complex128))

    @property
    def table(self) -> ModeTable:
        return mode_table(self.cutoff)

    def coefficient(self, s1: int, s2: int) -> np.ndarray:
        """Amplitude u_s for any full-lattice wavevector."""
        i, conj = self.table.slot(s1, s2)
        c = self.coeffs[i]
        return np.conj(c) if conj else c.copy()

    def modes(self) -> Iterator[tuple[Mode, np.ndarray]]:
        for (s1, s2), i in self.table.index.items():
            yield Mode(s1, s2), self.coeffs[i]

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.cutoff, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.cutoff, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.cutoff, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.cutoff, -self.coeffs)

    def _check_compatible(self, other: "SpectralField"):
        if self.cutoff != other.cutoff:
            raise ValueError(f"cutoff mismatch: {self.cutoff} vs {other.cutoff}")

    def tangential_amplitude(self, s1: int, s2: int) -> complex:
        """Complex amplitude along the unit tangent of a stored mode.

        For a divergence-free field ``u_s`` is parallel to ``s_perp``;
        the scalar ``(s_perp . u_s)/|s|`` carries all its information.
        The real and imaginary parts are (up to a factor ``-sqrt(2)``)
        the coefficients of the cosine- and sine-type basis vectors at
        that wavevector, which makes this the natural scalar observable
        for a mode.
        """
        if not half_lattice(s1, s2):
            raise ValueError("tangential amplitude is defined on stored (half-lattice) modes")
        i = self.table.index[(s1, s2)]
        t = self.table
        return complex(
            (t.perp[i, 0] * self.coeffs[i, 0] + t.perp[i, 1] * self.coeffs[i, 1])
            / t.abs_s[i]
        )


class GridField:
    """Real-valued velocity samples on the uniform M x M grid of [0, 2pi)^2."""

    __slots__ = ("resolution", "samples")

    def __init__(self, resolution: int, samples: np.ndarray):
        arr = np.asarray(samples, dtype=np.float64)
        if arr.shape != (resolution, resolution, 2):
            raise ValueError(
                f"samples must have shape {(resolution, resolution, 2)}, got {arr.shape}"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "resolution", resolution)
        object.__setattr__(self, "samples", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridField is immutable")

    def __reduce__(self):
        return (GridField, (self.resolution, np.asarray(self.samples)))

    def l2_norm(self) -> float:
        """Trapezoid (= rectangle, by periodicity) quadrature of ||u||_{L2}."""
        w = (TWO_PI / self.resolution) ** 2
        return math.sqrt(float(np.sum(self.samples**2)) * w)


def grid_points(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Meshgrid ('ij' indexing) of the uniform sampling points."""
    x = np.arange(resolution) * (TWO_PI / resolution)
    return np.meshgrid(x, x, indexing="ij")


# ---------------------------------------------------------------------------
# synthesis / analysis plumbing
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _rfft_plan(cutoff: int, resolution: int):
    """Scatter/gather bins of each half-lattice mode in an rfft2 spectrum.

    Each mode owns one primary bin; modes on the s2 = 0 row additionally
    mirror their conjugate into the (M - s1, 0) bin because Hermitian
    symmetry is implicit only along the last rfft axis.
    """
    t = mode_table(cutoff)
    M = resolution
    if M < 2 * cutoff + 2:
        raise ValueError(
            f"resolution {M} too small for cutoff {cutoff}; need M >= 2N + 2 = {2 * cutoff + 2}"
        )
    s1 = t.s[:, 0]
    s2 = t.s[:, 1]
    rows = np.where(s2 >= 0, s1, (M - s1) % M)
    cols = np.abs(s2)
    conj = s2 < 0
    zrow = np.nonzero(s2 == 0)[0]
    mirror_rows = (M - s1[zrow]) % M
    return rows, cols, conj, zrow, mirror_rows


def _modal_to_rspectrum(coeffs: np.ndarray, cutoff: int, resolution: int) -> np.ndarray:
    """Place half-lattice amplitudes into an rfft2 spectrum array.

    ``coeffs`` is (n,) for a scalar trig polynomial or (n, 2) for a
    vector field; the spectrum is scaled so that irfft2 followed by the
    1/(2 pi) normalisation evaluates sum_s u_s e^{i s.x} / (2 pi).
    """
    rows, cols, conj, zrow, mirror_rows = _rfft_plan(cutoff, resolution)
    M = resolution
    shape = (M, M // 2 + 1) + coeffs.shape[1:]
    spec = np.zeros(shape, dtype=np.complex128)
    cond = conj[:, None] if coeffs.ndim == 2 else conj
    spec[rows, cols] = np.where(cond, np.conj(coeffs), coeffs)
    spec[mirror_rows, 0] = np.conj(coeffs[zrow])
    return spec


def _modal_to_grid(coeffs: np.ndarray, cutoff: int, resolution: int) -> np.ndarray:
    spec = _modal_to_rspectrum(coeffs, cutoff, resolution)
    M = resolution
    out = _fft.irfft2(spec, s=(M, M), axes=(0, 1))
    out *= M * M / TWO_PI
    return out


def _grid_to_modal(samples: np.ndarray, cutoff: int, resolution: int) -> np.ndarray:
    rows, cols, conj, _, _ = _rfft_plan(cutoff, resolution)
    M = resolution
    spec = _fft.rfft2(samples, axes=(0, 1))
    vals = spec[rows, cols] * (TWO_PI / (M * M))
    cond = conj[:, None] if vals.ndim == 2 else conj
    return np.where(cond, np.conj(vals), vals)


def _modal_to_grid_aliased(coeffs: np.ndarray, cutoff: int, resolution: int) -> np.ndarray:
    """Full-complex synthesis that lets under-resolved bins collide.

    Only used as the no-dealiasing negative control; the fast rfft path
    refuses resolutions below 2N + 2.
    """
    t = mode_table(cutoff)
    M = resolution
    shape = (M, M) + coeffs.shape[1:]
    spec = np.zeros(shape, dtype=np.complex128)
    r1 = t.s[:, 0] % M
    r2 = t.s[:, 1] % M
    np.add.at(spec, (r1, r2), coeffs)
    np.add.at(spec, ((-t.s[:, 0]) % M, (-t.s[:, 1]) % M), np.conj(coeffs))
    out = _fft.ifft2(spec, axes=(0, 1)).real
    out *= M * M / TWO_PI
    return out


def _grid_to_modal_aliased(samples: np.ndarray, cutoff: int, resolution: int) -> np.ndarray:
    t = mode_table(cutoff)
    M = resolution
    spec = _fft.fft2(samples, axes=(0, 1))
    return spec[t.s[:, 0] % M, t.s[:, 1] % M] * (TWO_PI / (M * M))


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _fold_raw_mapping(raw: Mapping, cutoff: int) -> np.ndarray:
    """Collect a {wavevector: C^2 value} mapping into half-lattice storage.

    Entries at -s are folded by conjugation; if both halves of a pair are
    present they must agree with the reality convention.  The s = 0 entry,
    if any, is discarded (mean-zero convention).
    """
    table = mode_table(cutoff)
    out = np.zeros((table.n_modes, 2), dtype=np.complex128)
    seen = np.zeros(table.n_modes, dtype=bool)
    for key, value in raw.items():
        s1, s2 = (key.s1, key.s2) if isinstance(key, Mode) else (int(key[0]), int(key[1]))
        if s1 == 0 and s2 == 0:
            continue
        if max(abs(s1), abs(s2)) > cutoff:
            raise ValueError(f"mode ({s1}, {s2}) outside cutoff {cutoff}")
        vec = np.asarray(value, dtype=np.complex128).reshape(2)
        if not np.all(np.isfinite(vec.view(np.float64))):
            raise ValueError(f"non-finite value at mode ({s1}, {s2})")
        i, conj = table.slot(s1, s2)
        stored = np.conj(vec) if conj else vec
        if seen[i]:
            scale = max(float(np.max(np.abs(out[i]))), float(np.max(np.abs(stored))), 1.0)
            if np.max(np.abs(out[i] - stored)) > 1e-12 * scale:
                raise ValueError(
                    f"entries at ({s1}, {s2}) and its negative violate u_-s = conj(u_s)"
                )
        out[i] = stored
        seen[i] = True
    return out


def leray_project(raw, cutoff: int | None = None) -> SpectralField:
    """Orthogonal projection onto mean-zero divergence-free fields.

    Accepts a ``SpectralField`` (returned unchanged: the projector
    restricted to its range is the identity, which makes composition
    bitwise idempotent), a mapping ``{(s1, s2): (c1, c2)}`` over any part
    of the lattice, or a half-lattice coefficient array (``cutoff``
    required).  Per mode the output is ``(I - s s^T/|s|^2) raw_s``,
    evaluated through the tangential component so the incompressibility
    residual is at rounding level.
    """
    if isinstance(raw, SpectralField):
        return raw
    if isinstance(raw, Mapping):
        if cutoff is None:
            flat = [k.as_tuple() if isinstance(k, Mode) else k for k in raw.keys()]
            cutoff = max((max(abs(a), abs(b)) for a, b in flat), default=1)
            cutoff = max(cutoff, 1)
        arr = _fold_raw_mapping(raw, cutoff)
    else:
        if cutoff is None:
            raise ValueError("cutoff is required for array input")
        arr = np.asarray(raw, dtype=np.complex128)
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("non-finite coefficients")
    table = mode_table(cutoff)
    tang = (table.perp[:, 0] * arr[:, 0] + table.perp[:, 1] * arr[:, 1]) / table.s_sq
    return SpectralField(cutoff, tang[:, None] * table.perp)


def stokes_apply(u: SpectralField) -> SpectralField:
    """Stokes operator: diagonal with eigenvalue |s|^2 on each mode."""
    return SpectralField(u.cutoff, u.coeffs * u.table.s_sq[:, None])


def sobolev_norm(u: SpectralField, r: float) -> float:
    """Mode-weighted norm (sum over the full lattice of |u_s|^2 |s|^{2r})^{1/2}.

    Intended range r >= -1 (the scale actually used by the estimates);
    any finite r is accepted since |s| >= 1 on mean-zero fields.
    """
    mag = np.abs(u.coeffs[:, 0]) ** 2 + np.abs(u.coeffs[:, 1]) ** 2
    if r == 0.0:
        total = float(np.sum(mag))
    else:
        total = float(np.sum(mag * u.table.s_sq**r))
    return math.sqrt(2.0 * total)


def inner_product(u: SpectralField, v: SpectralField) -> float:
    """L2 inner product: full-lattice sum of Re(u_s . conj(v_s))."""
    if u.cutoff != v.cutoff:
        raise ValueError(f"cutoff mismatch: {u.cutoff} vs {v.cutoff}")
    return 2.0 * float(np.sum(np.real(u.coeffs * np.conj(v.coeffs))))


def l4_norm(u: SpectralField, oversample: int = 2) -> float:
    """L4 norm by quadrature on an oversampled grid.

    The quartic integrand is band limited to 4N, so a grid with
    M >= 4N + 1 integrates it exactly; the default doubles the loss-free
    transform size.
    """
    M = oversample * (2 * u.cutoff + 2)
    g = _modal_to_grid(u.coeffs, u.cutoff, M)
    speed_sq = g[..., 0] ** 2 + g[..., 1] ** 2
    w = (TWO_PI / M) ** 2
    return float(np.sum(speed_sq**2) * w) ** 0.25


def to_grid(u: SpectralField, resolution: int) -> GridField:
    """Evaluate the trig sum on the uniform grid (exact for M >= 2N + 2)."""
    return GridField(resolution, _modal_to_grid(u.coeffs, u.cutoff, resolution))


def to_spectral(g: GridField, cutoff: int, project: bool = False) -> SpectralField:
    """Invert the grid synthesis back to half-lattice amplitudes.

    The grid mean is dropped (mean-zero convention) and frequencies above
    the cutoff are truncated.  With ``project=True`` the result is passed
    through the Leray projection so it can be used as a velocity state.
    """
    arr = _grid_to_modal(g.samples, cutoff, g.resolution)
    if project:
        return leray_project(arr, cutoff)
    return SpectralField(cutoff, arr)


def synthesize_basis(s1: int, s2: int, resolution: int) -> GridField:
    """Grid samples of the orthonormal basis vector at wavevector s.

    Sine type on the half lattice, cosine type on its negative, both
    scaled by 1/(sqrt(2) pi |s|) times s-perp; unit L2 norm.
    """
    if s1 == 0 and s2 == 0:
        raise ValueError("the zero wavevector has no basis vector")
    x1, x2 = grid_points(resolution)
    phase = s1 * x1 + s2 * x2
    c = 1.0 / (math.sqrt(2.0) * math.pi * math.hypot(s1, s2))
    wave = np.sin(phase) if half_lattice(s1, s2) else np.cos(phase)
    samples = np.empty((resolution, resolution, 2))
    samples[..., 0] = -s2 * c * wave
    samples[..., 1] = s1 * c * wave
    return GridField(resolution, samples)


def basis_field(s1: int, s2: int, cutoff: int) -> SpectralField:
    """Spectral representation of the basis vector at wavevector s."""
    if max(abs(s1), abs(s2)) > cutoff:
        raise ValueError(f"mode ({s1}, {s2}) outside cutoff {cutoff}")
    table = mode_table(cutoff)
    coeffs = np.zeros((table.n_modes, 2), dtype=np.complex128)
    if half_lattice(s1, s2):
        i = table.index[(s1, s2)]
        coeffs[i] = (-1j / math.sqrt(2.0)) * table.perp[i] / table.abs_s[i]
    else:
        i = table.index[(-s1, -s2)]
        coeffs[i] = (-1.0 / math.sqrt(2.0)) * table.perp[i] / table.abs_s[i]
    return SpectralField(cutoff, coeffs)


def field_from_modal_amplitudes(
    cutoff: int, modes: np.ndarray, amplitudes: np.ndarray
) -> SpectralField:
    """Real linear combination sum_j a_j e_{s_j} of basis vectors.

    ``modes`` is an (k, 2) integer array over the full lattice; sine-type
    and cosine-type entries at the same wavevector pair accumulate into
    the same storage slot.
    """
    table = mode_table(cutoff)
    coeffs = np.zeros((table.n_modes, 2), dtype=np.complex128)
    slots, factors = _modal_injection(cutoff, tuple(map(tuple, np.asarray(modes).tolist())))
    np.add.at(coeffs, slots, np.asarray(amplitudes, dtype=np.float64)[:, None] * factors)
    return SpectralField(cutoff, coeffs)


@lru_cache(maxsize=None)
def _modal_injection(cutoff: int, modes: tuple[tuple[int, int], ...]):
    """Per-basis-vector storage slot and complex coefficient vector."""
    table = mode_table(cutoff)
    slots = np.empty(len(modes), dtype=np.int64)
    factors = np.empty((len(modes), 2), dtype=np.complex128)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for j, (s1, s2) in enumerate(modes):
        if max(abs(s1), abs(s2)) > cutoff:
            raise ValueError(f"mode ({s1}, {s2}) outside cutoff {cutoff}")
        if half_lattice(s1, s2):
            i = table.index[(s1, s2)]
            factors[j] = (-1j * inv_sqrt2) * table.perp[i] / table.abs_s[i]
        else:
            i = table.index[(-s1, -s2)]
            factors[j] = (-inv_sqrt2) * table.perp[i] / table.abs_s[i]
        slots[j] = i
    slots.flags.writeable = False
    factors.flags.writeable = False
    return slots, factors


def random_field(
    cutoff: int,
    rng: np.random.Generator,
    slope: float = 2.0,
    amplitude: float = 1.0,
) -> SpectralField:
    """Random divergence-free field with |s|^{-slope} amplitude decay."""
    table = mode_table(cutoff)
    z = rng.standard_normal(table.n_modes) + 1j * rng.standard_normal(table.n_modes)
    tang = amplitude * z / math.sqrt(2.0) * table.abs_s ** (-slope)
    coeffs = tang[:, None] * (table.perp / table.abs_s[:, None])
    return SpectralField(cutoff, coeffs)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def field_to_json(u: SpectralField) -> str:
    """Documented JSON form: half-lattice modes only."""
    modes = []
    table = u.table
    for i in range(table.n_modes):
        c = u.coeffs[i]
        modes.append(
            {
                "s": [int(table.s[i, 0]), int(table.s[i, 1])],
                "re": [c[0].real, c[1].real],
                "im": [c[0].imag, c[1].imag],
            }
        )
    return json.dumps({"cutoff": u.cutoff, "modes": modes})


def field_from_json(text: str) -> SpectralField:
    data = json.loads(text)
    cutoff = int(data["cutoff"])
    table = mode_table(cutoff)
    coeffs = np.zeros((table.n_modes, 2), dtype=np.complex128)
    for entry in data["modes"]:
        s1, s2 = int(entry["s"][0]), int(entry["s"][1])
        if not half_lattice(s1, s2):
            raise ValueError(f"serialized mode ({s1}, {s2}) is not half-lattice")
        i = table.index[(s1, s2)]
        coeffs[i, 0] = entry["re"][0] + 1j * entry["im"][0]
        coeffs[i, 1] = entry["re"][1] + 1j * entry["im"][1]
    return SpectralField(cutoff, coeffs)
