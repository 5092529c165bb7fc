"""Multi-particle lifetime experiments: N trapped particles under UV, each
evolving an independent single-electron charge trajectory, dying when its
stability parameter leaves the trap band.  Produces survival curves and the
lifetime-vs-wavelength / lifetime-vs-size sweep tables.

Determinism contract: per-particle generators are spawned from the master
seed with numpy SeedSequence, so results are bit-identical for a given seed
regardless of evaluation order.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import Particle, TrapConfig, UVSource, charge_envelope
from .fitters import FitError, fit_exponential
from .photoemission import EmissionModel, emission_rate, simulate_charge_trajectory

DEFAULT_FRAME_RATE = 10.0  # Hz, CCD-video style sampling


@dataclass(frozen=True)
class SurvivalCurve:
    """Number of still-trapped particles vs time."""

    times: np.ndarray
    n_alive: np.ndarray
    n0: int
    uv_on_time: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        n = np.asarray(self.n_alive, dtype=int)
        if len(t) != len(n):
            raise ValueError("times and n_alive must have equal length")
        if len(n):
            if n[0] != self.n0:
                raise ValueError("curve must start at n0")
            if np.any(np.diff(n) > 0):
                raise ValueError("n_alive must be non-increasing")
            if np.any(n < 0):
                raise ValueError("counts must be non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "n_alive", n)


def stable_charge_range(particle_template: Particle, trap: TrapConfig) -> tuple:
    """(min, max) |charge_count| keeping this particle inside the trap band."""
    from .trap import stability_parameter
    q_per_e = stability_parameter(particle_template.with_charge(1), trap)
    q_min, q_max = trap.stability_band
    lo = math.ceil(q_min / q_per_e - 1e-9)
    hi = math.floor(q_max / q_per_e + 1e-9)
    if lo > hi:
        raise ValueError("no integer charge is stable in this trap for this particle")
    return max(lo, 1), hi


ChargeSampler = Callable[[np.random.Generator, Particle, TrapConfig], int]


def envelope_charge_sampler(band_factor: float = 3.0, sign: int = -1,
                            clip_to_stability: bool = True) -> ChargeSampler:
    """Initial charges log-uniform inside the typical-charge envelope.

    With ``clip_to_stability`` the draw is restricted to the part of the
    envelope that is actually trappable (particles outside the band would
    never have loaded), which is also what keeps n_alive(0) = n0.
    """
    def sampler(rng, particle, trap):
        env = charge_envelope(particle.radius, band_factor=band_factor)
        lo, hi = env.minimum, env.maximum
        if clip_to_stability:
            s_lo, s_hi = stable_charge_range(particle, trap)
            lo, hi = max(lo, s_lo), min(hi, s_hi)
            if lo > hi:
                raise ValueError(
                    "typical-charge envelope does not overlap the stable band; "
                    "adjust the trap geometry factor or drive")
        count = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
        count = min(max(count, math.ceil(lo)), math.floor(hi))
        return sign * count
    return sampler


def margin_charge_sampler(margin_lo: int, margin_hi: int, sign: int = -1) -> ChargeSampler:
    """Initial charges a log-uniform margin above the instability threshold.

    Models loads that sit a size-independent number of electrons above the
    band floor; used by calibrated sweeps where the per-particle electron
    deficit must not co-vary with size.
    """
    if not (1 <= margin_lo <= margin_hi):
        raise ValueError("need 1 <= margin_lo <= margin_hi")

    def sampler(rng, particle, trap):
        s_lo, s_hi = stable_charge_range(particle, trap)
        margin = int(round(math.exp(rng.uniform(math.log(margin_lo), math.log(margin_hi)))))
        margin = min(max(margin, margin_lo), margin_hi)
        count = s_lo + margin
        if count > s_hi:
            raise ValueError("margin sampler exceeds the stable band ceiling")
        return sign * count
    return sampler


def fixed_charge_sampler(charge_count: int) -> ChargeSampler:
    def sampler(rng, particle, trap):
        return charge_count
    return sampler


def integrated_escape_check(particle: Particle, trap: TrapConfig,
                            periods: float = 400.0,
                            growth_factor: float = 1e4) -> bool:
    """Opt-in high-fidelity loss check: integrate the driven motion and
    report whether it diverges.

    The production loss criterion is the algebraic band check; this spot
    check confirms the dynamical side of it.  Note that only the upper band
    edge is a true parametric instability -- the lower edge (q ~ 0.1)
    models practical confinement limits that the ideal single-axis
    integration does not contain, so this check cannot replace the band
    test there.
    """
    from .trap import integrate_mathieu, stability_parameter
    q = stability_parameter(particle, trap)
    _, _, lost, _ = integrate_mathieu(
        q, trap.drive_frequency, periods / trap.drive_frequency,
        x0=0.01 * trap.characteristic_radius,
        escape_radius=growth_factor * 0.01 * trap.characteristic_radius,
        sample_stride=10_000)
    return lost


def _death_time(rng, particle, trap, model, source, duration, uv_on_time,
                background_rate, positive_emission_factor):
    """First time this particle's q leaves the band (or inf)."""
    from .trap import is_stable, stability_parameter
    c0 = particle.charge_count
    q0 = stability_parameter(particle, trap)
    if not is_stable(q0, trap.stability_band):
        raise ValueError(f"initial charge {c0} is outside the stable band (q = {q0:.3g})")
    t_bg = rng.exponential(1.0 / background_rate) if background_rate > 0 else math.inf

    rate = emission_rate(model, source, particle)
    if c0 > 0:
        rate *= positive_emission_factor
    t_uv = math.inf
    if rate > 0 and c0 != 0 and uv_on_time < duration:
        s_lo, s_hi = stable_charge_range(particle, trap)
        # emission moves charge_count positive-ward: a negative particle
        # discharges down through the band floor, a positive one charges up
        # through the ceiling
        if c0 < 0:
            exit_charge = -(s_lo - 1)
        else:
            exit_charge = s_hi + 1
        traj = simulate_charge_trajectory(
            particle, rate, duration - uv_on_time, direction="emit", rng=rng,
            floor_charge=exit_charge)
        if traj.n_events and traj.final_charge == exit_charge:
            t_uv = uv_on_time + float(traj.times[-1])
    return min(t_bg, t_uv)


def simulate_survival(n0: int, particle_template: Particle, trap: TrapConfig,
                      model: EmissionModel, source: UVSource, duration: float,
                      seed: int, charge_sampler: Optional[ChargeSampler] = None,
                      uv_on_time: float = 0.0,
                      frame_rate: float = DEFAULT_FRAME_RATE,
                      background_rate: float = 0.0,
                      positive_emission_factor: float = 0.0,
                      metadata: Optional[dict] = None) -> SurvivalCurve:
    """Simulate n0 independent particles and count survivors over time.

    Each particle draws an initial charge, evolves an independent
    single-electron emission trajectory once the UV turns on, and dies the
    moment its stability parameter exits the trap band.  The curve is
    sampled at ``frame_rate``.  ``background_rate`` adds a UV-independent
    exponential loss channel (the no-UV control rate); UV emission acts on
    negatively charged particles, scaled by ``positive_emission_factor``
    (default 0) for positive ones.
    """
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    if duration <= 0 or frame_rate <= 0:
        raise ValueError("duration and frame_rate must be positive")
    if charge_sampler is None:
        sign = -1 if particle_template.charge_count <= 0 else 1
        charge_sampler = envelope_charge_sampler(sign=sign)

    deaths = np.empty(n0)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seqs = root.spawn(n0)
    for i in range(n0):
        rng = np.random.default_rng(seqs[i])
        p = particle_template.with_charge(charge_sampler(rng, particle_template, trap))
        deaths[i] = _death_time(rng, p, trap, model, source, duration,
                                uv_on_time, background_rate,
                                positive_emission_factor)
    deaths.sort()
    n_frames = int(math.floor(duration * frame_rate)) + 1
    times = np.arange(n_frames) / frame_rate
    alive = n0 - np.searchsorted(deaths, times, side="right")
    meta = {"seed": seed if isinstance(seed, int) else str(seed),
            "wavelength": source.wavelength,
            "diameter": particle_template.diameter,
            "uv_on_time": uv_on_time, "frame_rate": frame_rate,
            "background_rate": background_rate, "duration": duration}
    if metadata:
        meta.update(metadata)
    return SurvivalCurve(times=times, n_alive=alive.astype(int), n0=n0,
                         uv_on_time=uv_on_time, metadata=meta)


def exponential_survival_curve(n0: int, tau: float, duration: float, seed: int,
                               frame_rate: float = DEFAULT_FRAME_RATE,
                               uv_on_time: float = 0.0) -> SurvivalCurve:
    """Survival curve with i.i.d. exponential(tau) loss times injected directly.

    Bypasses the trap physics entirely; validates the lifetime estimator
    against a known ground truth.
    """
    if n0 < 1 or tau <= 0 or duration <= 0:
        raise ValueError("n0, tau and duration must be positive")
    rng = np.random.default_rng(seed)
    deaths = uv_on_time + rng.exponential(tau, n0)
    deaths.sort()
    n_frames = int(math.floor(duration * frame_rate)) + 1
    times = np.arange(n_frames) / frame_rate
    alive = n0 - np.searchsorted(deaths, times, side="right")
    return SurvivalCurve(times=times, n_alive=alive.astype(int), n0=n0,
                         uv_on_time=uv_on_time,
                         metadata={"tau_true": tau, "seed": seed})


SweepPoint = namedtuple("SweepPoint", "x lifetime lifetime_error flags")


def _sweep_lifetime(curve) -> SweepPoint:
    try:
        result = fit_exponential(curve)
    except FitError as exc:
        return SweepPoint(math.nan, math.nan, math.nan, ("fit_failed", str(exc)))
    flags = result.flags
    tau = result.parameters["tau"]
    err = result.errors["tau"]
    if not result.converged:
        flags = flags + ("not_converged",)
    return SweepPoint(math.nan, tau, err, flags)


def lifetime_vs_wavelength_sweep(wavelengths, n0: int, particle_template: Particle,
                                 trap: TrapConfig, model: EmissionModel,
                                 source_template: UVSource, duration: float,
                                 seed: int, **run_kwargs) -> list:
    """Simulate and fit a trap lifetime at each wavelength (nm).

    A failed fit flags its entry and the sweep continues.
    """
    wavelengths = list(wavelengths)
    if len(wavelengths) < 3:
        raise ValueError("sweep needs at least 3 wavelengths")
    seqs = np.random.SeedSequence(seed).spawn(len(wavelengths))
    out = []
    for lam, seq in zip(wavelengths, seqs):
        source = replace(source_template, wavelength=float(lam))
        curve = simulate_survival(n0, particle_template, trap, model, source,
                                  duration, seed=seq, **run_kwargs)
        point = _sweep_lifetime(curve)
        out.append(point._replace(x=float(lam)))
    return out


def lifetime_vs_size_sweep(diameters, n0: int, particle_template: Particle,
                           trap: TrapConfig, model: EmissionModel,
                           source: UVSource, duration: float, seed: int,
                           **run_kwargs) -> list:
    """Simulate and fit a trap lifetime at each particle diameter (m).

    Mass, typical-charge envelope and emission rate all co-vary with the
    diameter; the trap and source stay fixed.
    """
    diameters = list(diameters)
    if len(diameters) < 1:
        raise ValueError("sweep needs at least one diameter")
    seqs = np.random.SeedSequence(seed).spawn(len(diameters))
    out = []
    for d, seq in zip(diameters, seqs):
        particle = replace(particle_template, radius=float(d) / 2.0)
        curve = simulate_survival(n0, particle, trap, model, source,
                                  duration, seed=seq, **run_kwargs)
        point = _sweep_lifetime(curve)
        out.append(point._replace(x=float(d)))
    return out
