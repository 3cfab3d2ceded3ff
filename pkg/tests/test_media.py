import math

import numpy as np
import pytest

from nshomog import media
from nshomog import spectral as sp

SPEC = media.PotentialSpec.from_config(
    {"a0": 0.5, "components": [{"k": [1, 0], "a": 0.4}, {"k": [2, 1], "a": 0.2}]}
)


class TestPotentialSpec:
    def test_bound(self):
        assert SPEC.bound == pytest.approx(1.1)

    def test_zero_wavevector_rejected(self):
        with pytest.raises(ValueError):
            media.PotentialComponent(k=(0, 0), amplitude=1.0)

    def test_config_parse(self):
        assert SPEC.mean == 0.5
        assert SPEC.components[0].k == (1, 0)


class TestEpsilonScale:
    def test_reciprocal_integers_accepted(self):
        for n in (1, 2, 7, 16):
            assert media.EpsilonScale.from_value(1.0 / n).inverse == n

    def test_non_reciprocal_rejected(self):
        with pytest.raises(ValueError, match="1/n"):
            media.EpsilonScale.from_value(0.3)


class TestSampling:
    def test_deterministic_per_seed(self):
        a = media.sample_potential(SPEC, 42)
        b = media.sample_potential(SPEC, 42)
        assert np.array_equal(a.phases, b.phases)
        assert not np.array_equal(a.phases, media.sample_potential(SPEC, 43).phases)

    def test_no_components_is_constant(self):
        flat = media.PotentialSpec(mean=0.7)
        r = media.sample_potential(flat, 1)
        pts = np.random.default_rng(0).uniform(0, 2 * math.pi, (50, 2))
        np.testing.assert_array_equal(r.evaluate(pts), np.full(50, 0.7))

    def test_monte_carlo_point_mean(self):
        # E q(0, omega) = a0; each cosine has variance a_j^2 / 2
        draws = 100_000
        values = np.array(
            [media.sample_potential(SPEC, s).evaluate(np.zeros(2)) for s in range(draws)]
        )
        band = 3.0 * math.sqrt((0.4**2 + 0.2**2) / 2.0 / draws)
        assert abs(values.mean() - 0.5) <= band

    def test_uniform_bound_never_exceeded(self):
        r = media.sample_potential(SPEC, 9)
        pts = np.random.default_rng(1).uniform(0, 2 * math.pi, (10_000, 2))
        for n in (1, 3, 8):
            vals = r.evaluate(pts, media.EpsilonScale(n))
            assert np.max(np.abs(vals)) <= SPEC.bound


class TestShiftAction:
    def test_shift_matches_translation(self):
        r = media.sample_potential(SPEC, 3)
        y = np.array([0.37, -1.24])
        pts = np.random.default_rng(2).uniform(0, 2 * math.pi, (100, 2))
        np.testing.assert_allclose(r.shift(y).evaluate(pts), r.evaluate(pts + y), atol=1e-12)

    def test_statistical_homogeneity(self):
        # moments of (q(x1, T_y .), q(x2, T_y .)) match those of the
        # translated field over disjoint seed ranges
        y = np.array([1.1, 0.6])
        x = np.array([[0.2, 0.4], [2.5, 1.0]])
        draws = 10_000
        shifted = np.array(
            [media.sample_potential(SPEC, s).shift(y).evaluate(x) for s in range(draws)]
        )
        translated = np.array(
            [
                media.sample_potential(SPEC, s).evaluate(x + y)
                for s in range(draws, 2 * draws)
            ]
        )
        var = (0.4**2 + 0.2**2) / 2.0
        mean_band = 3.0 * math.sqrt(var / draws)
        assert np.all(np.abs(shifted.mean(0) - translated.mean(0)) <= 2 * mean_band)
        second_band = 3.0 * math.sqrt(2.0) * (var + 0.25) / math.sqrt(draws)
        s2 = (shifted[:, 0] * shifted[:, 1]).mean()
        t2 = (translated[:, 0] * translated[:, 1]).mean()
        assert abs(s2 - t2) <= second_band


class TestRescaledEvaluation:
    def test_direct_formula(self):
        r = media.sample_potential(SPEC, 5)
        expected = 0.5 + 0.4 * math.cos(r.phases[0]) + 0.2 * math.cos(r.phases[1])
        assert media.evaluate_q_eps(r, np.zeros(2), media.EpsilonScale(1)) == pytest.approx(
            expected, rel=1e-14
        )

    def test_torus_periodicity(self):
        r = media.sample_potential(SPEC, 5)
        eps = media.EpsilonScale(4)
        x = np.array([1.234, 0.567])
        a = media.evaluate_q_eps(r, x, eps)
        b = media.evaluate_q_eps(r, x + np.array([2 * math.pi, 0.0]), eps)
        assert a == pytest.approx(b, abs=1e-12)


class TestEffectiveConstant:
    def test_closed_form(self):
        assert media.effective_q(SPEC) == 0.5

    def test_matches_cell_average_for_every_scale(self):
        r = media.sample_potential(SPEC, 8)
        for n in (1, 2, 3, 5, 8, 13):
            avg = media.cell_average(r, media.EpsilonScale(n))
            assert avg == pytest.approx(0.5, abs=1e-12)


@pytest.fixture(scope="module")
def fields():
    gen = np.random.default_rng(55)
    return sp.random_field(8, gen, slope=2.0), sp.random_field(8, gen, slope=2.0)


class TestOscillationPairing:
    def test_constant_potential_exact(self, fields):
        u, phi = fields
        flat = media.PotentialRealization(media.PotentialSpec(mean=0.7), np.zeros(0))
        got = media.oscillation_pairing(flat, media.EpsilonScale(2), u, phi)
        assert got == pytest.approx(0.7 * sp.inner_product(u, phi), rel=1e-12)

    def test_band_limited_exactness_past_threshold(self, fields):
        u, phi = fields
        single = media.PotentialSpec.from_config(
            {"a0": 0.5, "components": [{"k": [1, 0], "a": 0.4}]}
        )
        r = media.sample_potential(single, 9)
        target = 0.5 * sp.inner_product(u, phi)
        for n in (17, 18, 25, 40):
            got = media.oscillation_pairing(r, media.EpsilonScale(n), u, phi)
            assert abs(got - target) <= 1e-10

    def test_gap_non_increasing_and_floor(self, fields):
        u, phi = fields
        single = media.PotentialSpec.from_config(
            {"a0": 0.5, "components": [{"k": [1, 0], "a": 0.4}]}
        )
        r = media.sample_potential(single, 9)
        target = 0.5 * sp.inner_product(u, phi)
        gaps = [
            abs(media.oscillation_pairing(r, media.EpsilonScale(n), u, phi) - target)
            for n in (2, 4, 8, 16, 17)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 1e-10

    def test_under_resolved_quadrature_reported(self, fields):
        u, phi = fields
        r = media.sample_potential(SPEC, 9)
        with pytest.raises(ValueError, match="under-resolve"):
            media.oscillation_pairing(r, media.EpsilonScale(8), u, phi, resolution=20)
