"""Run configuration: one JSON file, documented defaults, strict validation.

Every knob of a run lives in a single config mapping; the command line
only overrides the seed, the oscillation scale, the ensemble size, and
the worker count.  ``RunConfig.validate`` rejects inconsistent settings
with messages that name the violated rule.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from nshomog.media import EpsilonScale, PotentialSpec, sample_potential
from nshomog.noise import NoiseModel, SigmaModel
from nshomog.spectral import SpectralField, basis_field, random_field
from nshomog.stepping import Effective, Oscillating, SimulationConfig


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "cutoff": 8,
    "grid": 26,
    "dt": 1.0e-3,
    "horizon": 1.0,
    "nu": 1.0,
    "eps": 0.125,
    "mode": "oscillating",
    "seed": 1234,
    "blowup_ceiling": 1.0e6,
    "sample_stride": 10,
    "observables": [[1, 0], [0, 1], [1, 1], [2, 0]],
    "initial": {"kind": "random_smooth", "amplitude": 0.8, "slope": 3.0},
    "potential": {"a0": 0.5, "components": [{"k": [1, 0], "a": 0.4}]},
    "noise": {
        "modes": [[1, 0], [0, 1], [-1, 0], [0, -1], [1, 1], [-1, -1], [2, 0], [0, -2]],
        "q": [0.7, 0.7, 0.7, 0.7, 0.5, 0.5, 0.35, 0.35],
    },
    "sigma": {"period": 0.5, "gamma": 0.0, "rho0": 1.0, "gmean": 1.0, "rho_family": "rational"},
    "ensemble": {"members": 64},
    "sweep": {"eps_list": [0.5, 0.25, 0.125, 0.0625], "coupled": True, "permutations": 1000},
    "hoelder": {
        "dt_ladder": [2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6, 2.0**-7, 2.0**-8, 2.0**-9],
        "members": 64,
        "dt": 2.0**-10,
        "cutoff": 16,
        "noise_scale": 0.35,
        "noise_decay": 0.75,
    },
    "threads": 1,
}


def _merge(defaults: dict, override: dict) -> dict:
    out = dict(defaults)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    cutoff: int
    grid: int
    dt: float
    horizon: float
    nu: float
    eps: EpsilonScale
    mode: str
    seed: int
    blowup_ceiling: float
    sample_stride: int
    observables: tuple[tuple[int, int], ...]
    initial: dict
    potential: PotentialSpec
    noise: NoiseModel
    sigma: SigmaModel
    members: int
    sweep_eps: tuple[EpsilonScale, ...]
    sweep_coupled: bool
    permutations: int
    hoelder_ladder: tuple[float, ...]
    hoelder_members: int
    threads: int
    raw: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        cfg = _merge(DEFAULTS, data or {})
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            eps = EpsilonScale.from_value(float(cfg["eps"]))
            sweep_eps = tuple(EpsilonScale.from_value(float(e)) for e in cfg["sweep"]["eps_list"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        noise = NoiseModel.from_config(cfg["noise"])
        sigma = SigmaModel.from_config(cfg["sigma"], noise)
        run = cls(
            cutoff=int(cfg["cutoff"]),
            grid=int(cfg["grid"]),
            dt=float(cfg["dt"]),
            horizon=float(cfg["horizon"]),
            nu=float(cfg["nu"]),
            eps=eps,
            mode=str(cfg["mode"]),
            seed=int(cfg["seed"]),
            blowup_ceiling=float(cfg["blowup_ceiling"]),
            sample_stride=int(cfg["sample_stride"]),
            observables=tuple((int(s[0]), int(s[1])) for s in cfg["observables"]),
            initial=dict(cfg["initial"]),
            potential=PotentialSpec.from_config(cfg["potential"]),
            noise=noise,
            sigma=sigma,
            members=int(cfg["ensemble"]["members"]),
            sweep_eps=sweep_eps,
            sweep_coupled=bool(cfg["sweep"]["coupled"]),
            permutations=int(cfg["sweep"]["permutations"]),
            hoelder_ladder=tuple(float(v) for v in cfg["hoelder"]["dt_ladder"]),
            hoelder_members=int(cfg["hoelder"]["members"]),
            threads=int(cfg["threads"]),
            raw=cfg,
        )
        run.validate()
        return run

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_mapping(data)

    def validate(self):
        if self.cutoff < 1:
            raise ConfigError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.grid < 2 * self.cutoff + 2:
            raise ConfigError(
                f"grid M = {self.grid} is too small for cutoff N = {self.cutoff}: "
                f"the loss-free transform needs M >= 2N + 2 = {2 * self.cutoff + 2}"
            )
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.horizon <= 0.0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        n_steps = round(self.horizon / self.dt)
        if n_steps < 1 or abs(n_steps * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ConfigError(
                f"horizon {self.horizon} is not an integer number of steps of dt = {self.dt}"
            )
        if self.mode not in ("oscillating", "effective"):
            raise ConfigError(f"mode must be 'oscillating' or 'effective', got {self.mode!r}")
        if self.noise.max_mode() > self.cutoff:
            raise ConfigError(
                "active noise modes exceed the cutoff: amplitudes beyond the solver "
                "resolution must be zero"
            )
        for s1, s2 in self.observables:
            if not (s1 > 0 or (s1 == 0 and s2 > 0)):
                raise ConfigError(f"observable mode ({s1}, {s2}) must lie in the half lattice")
            if max(abs(s1), abs(s2)) > self.cutoff:
                raise ConfigError(f"observable mode ({s1}, {s2}) is outside the cutoff")
        if self.members < 2:
            raise ConfigError("ensemble members must be >= 2")
        if self.permutations < 1:
            raise ConfigError("permutations must be >= 1")
        kinds = ("random_smooth", "single_mode", "zero")
        if self.initial.get("kind", "random_smooth") not in kinds:
            raise ConfigError(f"initial.kind must be one of {kinds}")
        vals = [e.value for e in self.sweep_eps]
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("sweep.eps_list must be strictly decreasing")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.dt)

    def initial_field(self) -> SpectralField:
        kind = self.initial.get("kind", "random_smooth")
        if kind == "zero":
            return SpectralField.zeros(self.cutoff)
        if kind == "single_mode":
            s = self.initial.get("s", [1, 0])
            amp = float(self.initial.get("amplitude", 1.0))
            return amp * basis_field(int(s[0]), int(s[1]), self.cutoff)
        rng = np.random.Generator(np.random.Philox(key=(self.seed & (2**64 - 1), 0xF1E1D)))
        return random_field(
            self.cutoff,
            rng,
            slope=float(self.initial.get("slope", 3.0)),
            amplitude=float(self.initial.get("amplitude", 1.0)),
        )

    def hoelder_run_config(self) -> "RunConfig":
        """Derived config for the time-increment profile.

        Uses a dyadic step so the dyadic stride ladder lands exactly on
        the step grid, starts from rest, and drives every resolvable
        mode with |s|^{-decay} amplitudes: the broadband spectrum makes
        the increment variance genuinely sublinear in the stride across
        the ladder instead of saturating only at its top end.  The state
        gain is frozen (constant rho) so the profile reflects the noise
        response rather than the modulation.
        """
        h = self.raw["hoelder"]
        cutoff = int(h["cutoff"])
        scale = float(h["noise_scale"])
        decay = float(h["noise_decay"])
        modes = []
        amps = []
        for s1 in range(0, cutoff + 1):
            lo = 1 if s1 == 0 else -cutoff
            for s2 in range(lo, cutoff + 1):
                if (s1, s2) == (0, 0):
                    continue
                a = scale * (s1 * s1 + s2 * s2) ** (-decay / 2.0)
                modes.extend([[s1, s2], [-s1, -s2]])
                amps.extend([a, a])
        return RunConfig.from_mapping(
            _merge(
                self.raw,
                {
                    "cutoff": cutoff,
                    "grid": 2 * cutoff + 2,
                    "dt": float(h["dt"]),
                    "initial": {"kind": "zero"},
                    "noise": {"modes": modes, "q": amps},
                    "sigma": {"rho_family": "constant"},
                    "ensemble": {"members": int(h["members"])},
                },
            )
        )

    def simulation_config(
        self,
        member_seed: int | None = None,
        mode: str | None = None,
        eps: EpsilonScale | None = None,
        store_stride: int | None = None,
    ) -> SimulationConfig:
        """Materialize one path's config; the medium is sampled from the
        member seed so every member freezes its own realization."""
        seed = self.seed if member_seed is None else member_seed
        mode = mode or self.mode
        if mode == "oscillating":
            coeff = Oscillating(
                eps=eps or self.eps,
                realization=sample_potential(self.potential, seed),
            )
        else:
            coeff = Effective(q_bar=self.potential.mean)
        return SimulationConfig(
            cutoff=self.cutoff,
            dt=self.dt,
            n_steps=self.n_steps,
            coefficients=coeff,
            sigma=self.sigma,
            u0=self.initial_field(),
            seed=seed,
            nu=self.nu,
            sample_stride=self.sample_stride,
            observables=self.observables,
            blowup_ceiling=self.blowup_ceiling,
            store_stride=store_stride,
        )
