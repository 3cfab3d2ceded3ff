import json
import math

import numpy as np
import pytest

from nshomog import spectral as sp
from oracles import quadrature_inner_product

TWO_PI = 2.0 * math.pi


class TestModeIndex:
    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            sp.Mode(0, 0)

    def test_half_lattice_partition(self):
        # exactly one of s, -s lies in the half lattice
        for s1 in range(-5, 6):
            for s2 in range(-5, 6):
                if (s1, s2) == (0, 0):
                    continue
                assert sp.half_lattice(s1, s2) != sp.half_lattice(-s1, -s2)


class TestLerayProjection:
    def test_annihilates_gradient_direction(self):
        # raw value parallel to s is the projector's kernel
        for s in [(1, 0), (2, 3), (0, 1), (3, -2)]:
            f = sp.leray_project({s: (float(s[0]), float(s[1]))}, cutoff=4)
            assert np.max(np.abs(f.coefficient(*s))) == 0.0

    def test_hand_value(self):
        # s = (1,1), raw = (1,0): (I - s s^T/2) (1,0) = (1/2, -1/2)
        f = sp.leray_project({(1, 1): (1.0, 0.0)}, cutoff=2)
        np.testing.assert_allclose(f.coefficient(1, 1), [0.5, -0.5], rtol=0, atol=0)

    def test_divergence_free_input_unchanged(self, rng):
        u = sp.random_field(6, rng)
        raw = {m.as_tuple(): np.asarray(c) for m, c in u.modes()}
        again = sp.leray_project(raw, cutoff=6)
        scale = np.max(np.abs(u.coeffs))
        assert np.max(np.abs(again.coeffs - u.coeffs)) <= 1e-15 * scale

    def test_idempotent_bitwise(self, rng):
        f = sp.leray_project(
            {(1, 2): (0.3 + 1j, -0.7), (2, -1): (1.0, 2.0)}, cutoff=4
        )
        assert np.array_equal(sp.leray_project(f).coeffs, f.coeffs)

    def test_mean_mode_discarded(self):
        f = sp.leray_project({(0, 0): (1.0, 1.0), (1, 0): (0.0, 1.0)}, cutoff=2)
        assert sp.sobolev_norm(f, 0) > 0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            sp.leray_project({(1, 0): (math.nan, 0.0)}, cutoff=2)

    def test_conjugate_pair_consistency(self):
        with pytest.raises(ValueError, match="conj"):
            sp.leray_project({(1, 0): (0.0, 1.0), (-1, 0): (0.0, 5.0)}, cutoff=2)

    def test_incompressibility_invariant(self, rng):
        raw = rng.standard_normal((sp.mode_table(8).n_modes, 2)) + 1j * rng.standard_normal(
            (sp.mode_table(8).n_modes, 2)
        )
        f = sp.leray_project(raw, cutoff=8)
        t = f.table
        sdot = np.abs(t.s[:, 0] * f.coeffs[:, 0] + t.s[:, 1] * f.coeffs[:, 1])
        mag = np.maximum(np.abs(f.coeffs).max(axis=1), 1e-300)
        assert np.all(sdot <= 1e-12 * np.maximum(mag, 1e-30))


class TestStokes:
    def test_eigenrelation_exact(self):
        for s, lam in [((1, 0), 1.0), ((1, 2), 5.0), ((-3, 2), 13.0)]:
            e = sp.basis_field(*s, cutoff=4)
            assert np.array_equal(sp.stokes_apply(e).coeffs, lam * e.coeffs)

    def test_zero_field(self):
        z = sp.SpectralField.zeros(4)
        assert np.all(sp.stokes_apply(z).coeffs == 0)


class TestSobolevNorm:
    def test_zero_field(self):
        assert sp.sobolev_norm(sp.SpectralField.zeros(4), 1.5) == 0.0

    def test_unit_mode_value(self):
        # |u_s|^2 = 1 at s = (1,2) plus the implied conjugate: r=1 gives sqrt(2*5)
        t = sp.mode_table(4)
        c = np.zeros((t.n_modes, 2), dtype=np.complex128)
        i = t.index[(1, 2)]
        c[i] = (t.perp[i] / t.abs_s[i]) * ((1.0 + 1.0j) / math.sqrt(2.0))
        f = sp.SpectralField(4, c)
        assert math.isclose(sp.sobolev_norm(f, 1), math.sqrt(10.0), rel_tol=1e-13)

    def test_parseval(self, rng):
        u = sp.random_field(8, rng)
        g = sp.to_grid(u, 2 * 8 + 2)
        lhs = sp.sobolev_norm(u, 0) ** 2
        assert abs(lhs - g.l2_norm() ** 2) <= 1e-10 * lhs


class TestBasis:
    def test_closed_form_single_mode(self):
        # e_(1,0) = (0, 1) sin(x1) / (sqrt(2) pi)
        g = sp.synthesize_basis(1, 0, 16)
        x1, _ = sp.grid_points(16)
        expected = np.zeros((16, 16, 2))
        expected[..., 1] = np.sin(x1) / (math.sqrt(2.0) * math.pi)
        np.testing.assert_allclose(g.samples, expected, atol=1e-15)

    def test_cosine_branch(self):
        g = sp.synthesize_basis(-1, 0, 16)
        x1, _ = sp.grid_points(16)
        expected = np.zeros((16, 16, 2))
        expected[..., 1] = -np.cos(x1) / (math.sqrt(2.0) * math.pi)
        np.testing.assert_allclose(g.samples, expected, atol=1e-15)

    def test_orthonormal_by_quadrature(self):
        modes = [
            (s1, s2)
            for s1 in range(-3, 4)
            for s2 in range(-3, 4)
            if (s1, s2) != (0, 0) and s1 * s1 + s2 * s2 <= 9
        ]
        grids = [sp.synthesize_basis(*s, 32).samples for s in modes]
        for i, gi in enumerate(grids):
            for j, gj in enumerate(grids):
                val = quadrature_inner_product(gi, gj)
                assert abs(val - (1.0 if i == j else 0.0)) <= 1e-10

    def test_spectral_matches_grid(self):
        for s in [(1, 0), (-2, 1), (0, -3), (2, 2)]:
            e = sp.basis_field(*s, cutoff=4)
            made = sp.to_grid(e, 12)
            direct = sp.synthesize_basis(*s, 12)
            np.testing.assert_allclose(made.samples, direct.samples, atol=1e-12)


class TestTransforms:
    def test_round_trip(self, rng):
        u = sp.random_field(8, rng)
        back = sp.to_spectral(sp.to_grid(u, 24), 8)
        scale = np.max(np.abs(u.coeffs))
        assert np.max(np.abs(back.coeffs - u.coeffs)) <= 1e-12 * scale

    def test_resolution_too_small_reported(self, rng):
        u = sp.random_field(8, rng)
        with pytest.raises(ValueError, match="2N \\+ 2"):
            sp.to_grid(u, 17)

    def test_constant_grid_maps_to_zero(self):
        g = sp.GridField(12, np.full((12, 12, 2), 3.7))
        f = sp.to_spectral(g, 4)
        assert np.all(f.coeffs == 0)

    def test_reality_of_samples(self, rng):
        u = sp.random_field(5, rng)
        g = sp.to_grid(u, 16)
        assert g.samples.dtype == np.float64


class TestInnerProduct:
    def test_norm_consistency(self, rng):
        u = sp.random_field(8, rng)
        assert math.isclose(sp.inner_product(u, u), sp.sobolev_norm(u, 0) ** 2, rel_tol=1e-12)

    def test_distinct_modes_orthogonal(self):
        assert sp.inner_product(sp.basis_field(1, 0, 4), sp.basis_field(0, 1, 4)) == 0.0
        assert sp.inner_product(sp.basis_field(1, 0, 4), sp.basis_field(-1, 0, 4)) == 0.0

    def test_bilinearity(self, rng):
        u = sp.random_field(6, rng)
        v = sp.random_field(6, rng)
        w = sp.random_field(6, rng)
        lhs = sp.inner_product(u, v + w)
        rhs = sp.inner_product(u, v) + sp.inner_product(u, w)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_cutoff_mismatch(self, rng):
        with pytest.raises(ValueError, match="cutoff"):
            sp.inner_product(sp.random_field(4, rng), sp.random_field(5, rng))


class TestEmpiricalInequalities:
    def test_interpolation_inequality(self, rng):
        # ||u||_1 <= ||u||_2^{1/2} ||u||^{1/2}: Cauchy-Schwarz on the mode sum
        for _ in range(1000):
            u = sp.random_field(8, rng, slope=rng.uniform(1.0, 3.0))
            lhs = sp.sobolev_norm(u, 1) ** 2
            rhs = sp.sobolev_norm(u, 2) * sp.sobolev_norm(u, 0)
            assert lhs <= rhs * (1.0 + 1e-12)

    def test_l4_ratio_stable_across_cutoffs(self):
        maxima = {}
        for cutoff in (8, 12, 16):
            gen = np.random.default_rng(11)
            ratios = []
            for _ in range(1000):
                u = sp.random_field(cutoff, gen, slope=3.0)
                ratios.append(
                    sp.l4_norm(u) / math.sqrt(sp.sobolev_norm(u, 0) * sp.sobolev_norm(u, 1))
                )
            maxima[cutoff] = max(ratios)
        values = list(maxima.values())
        assert max(values) / min(values) <= 1.05


class TestSerialization:
    def test_json_round_trip(self, rng):
        u = sp.random_field(6, rng)
        back = sp.field_from_json(sp.field_to_json(u))
        assert back.cutoff == u.cutoff
        assert np.array_equal(back.coeffs, u.coeffs)

    def test_json_shape(self, rng):
        data = json.loads(sp.field_to_json(sp.random_field(3, rng)))
        assert set(data) == {"cutoff", "modes"}
        entry = data["modes"][0]
        assert set(entry) == {"s", "re", "im"}
        for item in data["modes"]:
            assert sp.half_lattice(*item["s"])

    def test_rejects_full_lattice_entries(self):
        text = json.dumps(
            {"cutoff": 2, "modes": [{"s": [-1, 0], "re": [0.0, 0.0], "im": [0.0, 0.0]}]}
        )
        with pytest.raises(ValueError, match="half-lattice"):
            sp.field_from_json(text)


class TestFieldInvariants:
    def test_immutable(self, rng):
        u = sp.random_field(4, rng)
        with pytest.raises(AttributeError):
            u.cutoff = 5
        with pytest.raises(ValueError):
            u.coeffs[0] = 1.0

    def test_non_finite_rejected(self):
        t = sp.mode_table(2)
        bad = np.zeros((t.n_modes, 2), dtype=np.complex128)
        bad[0, 0] = math.inf
        with pytest.raises(ValueError, match="non-finite"):
            sp.SpectralField(2, bad)

    def test_operations_preserve_divergence(self, rng):
        u = sp.random_field(8, rng)
        v = sp.random_field(8, rng)
        for f in (u + v, u - v, 2.5 * u, -u, sp.stokes_apply(u)):
            t = f.table
            sdot = np.abs(t.s[:, 0] * f.coeffs[:, 0] + t.s[:, 1] * f.coeffs[:, 1])
            mag = np.abs(f.coeffs).max(axis=1)
            assert np.all(sdot <= 1e-12 * np.maximum(mag, 1e-30))
