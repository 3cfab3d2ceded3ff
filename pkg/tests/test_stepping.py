import math

import numpy as np
import pytest

from nshomog import media
from nshomog import noise as nz
from nshomog import spectral as sp
from nshomog import stepping as st

SILENT = nz.SigmaModel(noise=nz.NoiseModel(modes=((1, 0),), amplitudes=(0.0,)))


def _config(u0, coefficients, sigma=SILENT, dt=1e-3, n_steps=100, seed=0, **kw):
    return st.SimulationConfig(
        cutoff=u0.cutoff,
        dt=dt,
        n_steps=n_steps,
        coefficients=coefficients,
        sigma=sigma,
        u0=u0,
        seed=seed,
        **kw,
    )


class TestStepOracles:
    def test_heat_decay_per_step(self):
        # q = 0, sigma = 0, u0 = e_s: the mode follows (1 + dt |s|^2)^{-n}
        for s in [(1, 0), (2, 1), (-1, 3)]:
            e = sp.basis_field(*s, cutoff=8)
            lam = s[0] ** 2 + s[1] ** 2
            cfg = _config(e, st.Effective(q_bar=0.0), n_steps=200)
            stepper = st.Stepper(cfg)
            shrink = 1.0 / (1.0 + cfg.dt * lam)
            u = e.coeffs.copy()
            for n in range(cfg.n_steps):
                prev = np.max(np.abs(u))
                u = stepper.step_raw(u, n * cfg.dt, np.zeros(1))
                assert abs(np.max(np.abs(u)) / (prev * shrink) - 1.0) <= 1e-14

    def test_zero_state_with_silent_noise_stays_zero(self):
        z = sp.SpectralField.zeros(6)
        cfg = _config(z, st.Effective(q_bar=0.3), n_steps=50)
        traj = st.simulate_path(cfg)
        assert np.all(traj.final.coeffs == 0)

    def test_growth_factor_with_constant_potential(self):
        # single mode, advection vanishes: factor (1 + dt q)(1 + dt |s|^2)^{-1}
        e = sp.basis_field(1, 0, 8)
        cfg = _config(e, st.Effective(q_bar=0.3), n_steps=100)
        traj = st.simulate_path(cfg, increments=np.zeros((100, 1)))
        expected = ((1.0 + cfg.dt * 0.3) / (1.0 + cfg.dt)) ** 100
        assert traj.norm0[-1] == pytest.approx(expected, rel=1e-12)

    def test_public_step_matches_path(self, rng):
        u0 = sp.random_field(6, rng)
        cfg = _config(u0, st.Effective(q_bar=0.2), n_steps=1)
        table = nz.sample_increments(SILENT.noise, cfg.dt, 1, seed=0)
        one = st.step(u0, 0.0, cfg, table[0])
        traj = st.simulate_path(cfg, increments=table)
        assert np.array_equal(one.coeffs, traj.final.coeffs)


class TestDissipation:
    def test_monotone_norm_without_forcing(self, rng):
        u0 = sp.random_field(8, rng, slope=2.0)
        cfg = _config(u0, st.Effective(q_bar=0.0), n_steps=300)
        traj = st.simulate_path(cfg, increments=np.zeros((300, 1)))
        assert np.all(np.diff(traj.norm0) <= 1e-15)

    def test_divergence_free_along_path(self, rng):
        u0 = sp.random_field(8, rng)
        real = media.sample_potential(
            media.PotentialSpec.from_config({"a0": 0.4, "components": [{"k": [1, 0], "a": 0.3}]}),
            3,
        )
        noisy = nz.SigmaModel(
            noise=nz.NoiseModel(modes=((1, 0), (0, 1)), amplitudes=(0.4, 0.4))
        )
        cfg = _config(u0, st.Oscillating(eps=media.EpsilonScale(4), realization=real), sigma=noisy,
                      n_steps=50, seed=5)
        traj = st.simulate_path(cfg)
        f = traj.final
        t = f.table
        sdot = np.abs(t.s[:, 0] * f.coeffs[:, 0] + t.s[:, 1] * f.coeffs[:, 1])
        assert np.all(sdot <= 1e-12 * np.maximum(np.abs(f.coeffs).max(axis=1), 1e-30))


class TestCoefficientTerm:
    def test_shift_convolution_matches_grid_product(self, rng):
        u = sp.random_field(8, rng, slope=2.0)
        spec = media.PotentialSpec.from_config(
            {"a0": 0.5, "components": [{"k": [1, 0], "a": 0.4}, {"k": [2, 1], "a": 0.25}]}
        )
        real = media.sample_potential(spec, 7)
        for n in (1, 2, 4, 16):
            eps = media.EpsilonScale(n)
            cfg = _config(u, st.Oscillating(eps=eps, realization=real), n_steps=1)
            got = st.Stepper(cfg)._coefficient_term(u.coeffs)
            resolution = 2 * n + 2 * 8 + 2
            grid = sp.to_grid(u, resolution)
            product = media.grid_field_product(real.grid_samples(resolution, eps), grid)
            expected = sp.to_spectral(product, 8, project=True)
            assert np.max(np.abs(got - expected.coeffs)) <= 1e-13

    def test_effective_term_is_scalar_multiple(self, rng):
        u = sp.random_field(8, rng)
        cfg = _config(u, st.Effective(q_bar=0.37), n_steps=1)
        got = st.Stepper(cfg)._coefficient_term(u.coeffs)
        np.testing.assert_array_equal(got, 0.37 * u.coeffs)


class TestTrajectories:
    def test_bitwise_reproducible(self, rng):
        u0 = sp.random_field(8, rng)
        noisy = nz.SigmaModel(noise=nz.NoiseModel(modes=((1, 0), (0, 1)), amplitudes=(0.5, 0.5)))
        real = media.sample_potential(
            media.PotentialSpec.from_config({"a0": 0.5, "components": [{"k": [1, 0], "a": 0.4}]}),
            11,
        )
        cfg = _config(u0, st.Oscillating(eps=media.EpsilonScale(8), realization=real),
                      sigma=noisy, n_steps=200, seed=42, observables=((1, 0), (0, 1)))
        a = st.simulate_path(cfg)
        b = st.simulate_path(cfg)
        assert np.array_equal(a.final.coeffs, b.final.coeffs)
        assert np.array_equal(a.observables, b.observables)
        assert np.array_equal(a.norm2, b.norm2)

    def test_sampling_stride_and_monotone_times(self, rng):
        u0 = sp.random_field(4, rng)
        cfg = _config(u0, st.Effective(q_bar=0.0), n_steps=100, sample_stride=7)
        traj = st.simulate_path(cfg, increments=np.zeros((100, 1)))
        assert traj.times[0] == 0.0
        assert traj.times[-1] == pytest.approx(0.1)
        assert np.all(np.diff(traj.times) > 0)

    def test_step_refinement_self_convergence(self):
        # nested increments, additive noise: halving dt shrinks the gap
        # to a fine reference by at least 1.7x
        from nshomog.config import RunConfig

        cfg = RunConfig.from_mapping(
            {"seed": 11, "sigma": {"gamma": 0.0, "rho_family": "constant", "rho0": 1.0}}
        )
        n_fine = 2**11
        fine_dt = 1.0 / n_fine
        fine = nz.sample_increments(cfg.noise, fine_dt, n_fine, seed=77)
        real = media.sample_potential(cfg.potential, 5)

        def run(dt, table):
            sim = st.SimulationConfig(
                cutoff=8, dt=dt, n_steps=round(1.0 / dt),
                coefficients=st.Oscillating(eps=media.EpsilonScale(4), realization=real),
                sigma=cfg.sigma, u0=cfg.initial_field(), seed=0,
            )
            return st.simulate_path(sim, increments=table).final

        def coarsen(table, factor):
            return table.reshape(-1, factor, table.shape[1]).sum(axis=1)

        ref = run(fine_dt, fine)
        d1 = sp.sobolev_norm(run(2.0**-8, coarsen(fine, 8)) - ref, 0)
        d2 = sp.sobolev_norm(run(2.0**-9, coarsen(fine, 4)) - ref, 0)
        assert d1 / d2 >= 1.7

    def test_blowup_guard_reports_time(self, rng):
        u0 = sp.random_field(4, rng)
        cfg = _config(u0, st.Effective(q_bar=0.0), n_steps=10, blowup_ceiling=1e-6)
        with pytest.raises(st.DivergenceError) as err:
            st.simulate_path(cfg, increments=np.zeros((10, 1)))
        assert err.value.time > 0.0

    def test_state_storage_stride(self, rng):
        u0 = sp.random_field(4, rng)
        cfg = _config(u0, st.Effective(q_bar=0.0), n_steps=100, store_stride=10)
        traj = st.simulate_path(cfg, increments=np.zeros((100, 1)))
        assert len(traj.states) == 11
        np.testing.assert_array_equal(traj.states[0], u0.coeffs)


class TestValidation:
    def test_observables_must_be_half_lattice(self, rng):
        u0 = sp.random_field(4, rng)
        with pytest.raises(ValueError, match="half-lattice"):
            _config(u0, st.Effective(q_bar=0.0), observables=((-1, 0),))

    def test_noise_modes_within_cutoff(self, rng):
        u0 = sp.random_field(4, rng)
        wide = nz.SigmaModel(noise=nz.NoiseModel(modes=((5, 0),), amplitudes=(0.1,)))
        with pytest.raises(ValueError, match="cutoff"):
            _config(u0, st.Effective(q_bar=0.0), sigma=wide)
