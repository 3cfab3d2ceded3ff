"""Projected advection term B(u, v) = P((u.grad) v), pseudospectral.

The quadratic product is formed on a padded grid (at least 3N + 1 points
per axis) so that after truncation back to the cutoff no aliased energy
contaminates the retained band; with exact quadrature the classical
identities (energy neutrality, skew symmetry, the 2D Laplacian identity)
then hold to rounding, which the verification suites rely on.
"""

import math
from dataclasses import dataclass

import numpy as np

from nshomog.spectral import (
    SpectralField,
    _grid_to_modal,
    _grid_to_modal_aliased,
    _modal_to_grid,
    _modal_to_grid_aliased,
    inner_product,
    leray_project,
    mode_table,
    random_field,
    sobolev_norm,
    stokes_apply,
)


@dataclass(frozen=True)
class DealiasRule:
    """Padded product resolution as a function of the cutoff."""

    margin: int = 2

    def padded(self, cutoff: int) -> int:
        m = 3 * cutoff + self.margin
        if m < 3 * cutoff + 1:
            raise ValueError("padded resolution must be at least 3N + 1")
        return m


DEFAULT_RULE = DealiasRule()


def _advection_raw(
    u_coeffs: np.ndarray, v_coeffs: np.ndarray, cutoff: int, resolution: int
) -> np.ndarray:
    """Unprojected coefficients of (u.grad) v from the padded-grid product.

    The two velocity components and the four gradient components are
    synthesized through a single six-channel transform; small grids make
    per-call overhead the dominant cost.
    """
    table = mode_table(cutoff)
    if resolution < 2 * cutoff + 2:
        ug = _modal_to_grid_aliased(u_coeffs, cutoff, resolution)
        d1 = _modal_to_grid_aliased(1j * table.s[:, 0, None] * v_coeffs, cutoff, resolution)
        d2 = _modal_to_grid_aliased(1j * table.s[:, 1, None] * v_coeffs, cutoff, resolution)
        w = ug[..., 0:1] * d1 + ug[..., 1:2] * d2
        raw = _grid_to_modal_aliased(w, cutoff, resolution)
    else:
        stack = np.empty((u_coeffs.shape[0], 6), dtype=np.complex128)
        stack[:, 0:2] = u_coeffs
        stack[:, 2:4] = (1j * table.s[:, 0, None]) * v_coeffs
        stack[:, 4:6] = (1j * table.s[:, 1, None]) * v_coeffs
        g = _modal_to_grid(stack, cutoff, resolution)
        w = np.empty((resolution, resolution, 2))
        w[..., 0] = g[..., 0] * g[..., 2] + g[..., 1] * g[..., 4]
        w[..., 1] = g[..., 0] * g[..., 3] + g[..., 1] * g[..., 5]
        raw = _grid_to_modal(w, cutoff, resolution)
    if not np.all(np.isfinite(raw.view(np.float64))):
        raise ArithmeticError(
            f"non-finite advection coefficients at cutoff {cutoff}, resolution {resolution}"
        )
    return raw


def bilinear_b(u: SpectralField, v: SpectralField, resolution: int | None = None) -> SpectralField:
    """B(u, v): grid product of u with the spectral gradient of v,
    truncated to the common cutoff and Leray-projected.

    ``resolution`` overrides the padded grid size; values below 2N + 2
    deliberately alias (the negative control used by the identity
    suite).  Non-finite intermediates abort with a diagnostic.
    """
    if u.cutoff != v.cutoff:
        raise ValueError(f"cutoff mismatch: {u.cutoff} vs {v.cutoff}")
    n = u.cutoff
    M = resolution if resolution is not None else DEFAULT_RULE.padded(n)
    return leray_project(_advection_raw(u.coeffs, v.coeffs, n, M), n)


@dataclass(frozen=True)
class IdentityReport:
    """Normalized residuals of the advection identities for one triple.

    ``energy``:    |<B(u,v), v>|            / (||u||_1 ||v||_1^2)
    ``skew``:      |<B(u,v), w> + <B(u,w), v>| / (||u||_1 ||v||_1 ||w||_1)
    ``laplacian``: |<B(u,u), Delta u>|      / (||u||_1^2 ||u||_2)

    Zero inputs report zero residuals.
    """

    energy: float
    skew: float
    laplacian: float

    def max(self) -> float:
        return max(self.energy, self.skew, self.laplacian)


def _normalized(value: float, scale: float) -> float:
    if scale == 0.0:
        return 0.0 if value == 0.0 else math.inf
    return abs(value) / scale


def identity_report(
    u: SpectralField,
    v: SpectralField,
    w: SpectralField,
    resolution: int | None = None,
) -> IdentityReport:
    """Residuals of <B(u,v),v> = 0, skew symmetry, and <B(u),Delta u> = 0."""
    buv = bilinear_b(u, v, resolution)
    buw = bilinear_b(u, w, resolution)
    buu = bilinear_b(u, u, resolution)
    n1u = sobolev_norm(u, 1)
    n1v = sobolev_norm(v, 1)
    n1w = sobolev_norm(w, 1)
    energy = _normalized(inner_product(buv, v), n1u * n1v * n1v)
    skew = _normalized(inner_product(buv, w) + inner_product(buw, v), n1u * n1v * n1w)
    # <B(u,u), Delta u> = -<B(u,u), A u> on divergence-free fields
    laplacian = _normalized(-inner_product(buu, stokes_apply(u)), n1u * n1u * sobolev_norm(u, 2))
    return IdentityReport(energy=energy, skew=skew, laplacian=laplacian)


def identity_suite(
    cutoff: int,
    samples: int,
    seed: int,
    resolution: int | None = None,
    slope: float = 2.0,
) -> list[IdentityReport]:
    """Identity residuals over seeded random triples (one report each)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        u = random_field(cutoff, rng, slope=slope)
        v = random_field(cutoff, rng, slope=slope)
        w = random_field(cutoff, rng, slope=slope)
        out.append(identity_report(u, v, w, resolution))
    return out


def continuity_ratio(u: SpectralField, v: SpectralField) -> float:
    """Empirical ratio ||B(u) - B(v)||_{-1} / ((||u||_1 + ||v||_1) ||u - v||_1).

    The bound holds with an unspecified constant; the suite only records
    the ratio and checks its maximum is stable across cutoffs.
    """
    num = sobolev_norm(bilinear_b(u, u) - bilinear_b(v, v), -1.0)
    den = (sobolev_norm(u, 1) + sobolev_norm(v, 1)) * sobolev_norm(u - v, 1)
    if den == 0.0:
        return 0.0
    return num / den
