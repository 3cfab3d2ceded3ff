"""Pseudospectral 2D stochastic Navier-Stokes with oscillating random coefficients."""

from nshomog.spectral import (
    GridField,
    Mode,
    SpectralField,
    basis_field,
    field_from_json,
    field_to_json,
    half_lattice,
    inner_product,
    l4_norm,
    leray_project,
    random_field,
    sobolev_norm,
    stokes_apply,
    synthesize_basis,
    to_grid,
    to_spectral,
)

__all__ = [
    "GridField",
    "Mode",
    "SpectralField",
    "basis_field",
    "field_from_json",
    "field_to_json",
    "half_lattice",
    "inner_product",
    "l4_norm",
    "leray_project",
    "random_field",
    "sobolev_norm",
    "stokes_apply",
    "synthesize_basis",
    "to_grid",
    "to_spectral",
]
