"""UV-driven charge changes: per-electron emission rate, stochastic jump
trajectories, and pulsed-laser timing including the single-pulse picker.

The per-electron rate is modelled as

    rate(lambda, d, I) = R0 * (I / I_ref) * (d / d_ref)^alpha * S(lambda) + floor

with S a decreasing logistic in wavelength (half-max at the center
wavelength, 10..90 width = 2 ln 9 / steepness) and alpha the size-scaling
exponent.  Rate is linear in intensity (one-photon regime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import Particle, UVSource

DEFAULT_WIDTH_10_90 = 10.0  # nm


def _logistic_decreasing(u: float) -> float:
    # 1 / (1 + e^u), overflow-safe
    if u >= 0:
        z = math.exp(-u)
        return z / (1.0 + z)
    return 1.0 / (1.0 + math.exp(u))


@dataclass(frozen=True)
class EmissionModel:
    """Wavelength/size/intensity response of the per-electron emission rate."""

    center_wavelength: float = 280.0                          # nm, S = 1/2 here
    steepness: float = 2.0 * math.log(9.0) / DEFAULT_WIDTH_10_90  # 1/nm, > 0
    rate_scale: float = 1.0      # 1/s at reference size/intensity, short wavelength
    size_exponent: float = 1.3
    floor_rate: float = 0.0      # 1/s residual rate far above the step
    reference_diameter: float = 1e-6       # m
    reference_intensity: float = 10.0      # W/m^2 (= 1 mW/cm^2)

    def __post_init__(self):
        if self.steepness <= 0:
            raise ValueError("steepness must be positive (rate decreases with wavelength)")
        if self.rate_scale < 0 or self.floor_rate < 0:
            raise ValueError("rates must be >= 0")
        if self.reference_diameter <= 0 or self.reference_intensity <= 0:
            raise ValueError("reference scales must be positive")

    @classmethod
    def from_width(cls, center_wavelength: float = 280.0,
                   width_10_90: float = DEFAULT_WIDTH_10_90, **kwargs) -> "EmissionModel":
        """Construct from the 10%..90% transition width in nm."""
        if width_10_90 <= 0:
            raise ValueError("width must be positive")
        steepness = 2.0 * math.log(9.0) / width_10_90
        return cls(center_wavelength=center_wavelength, steepness=steepness, **kwargs)

    @property
    def width_10_90(self) -> float:
        return 2.0 * math.log(9.0) / self.steepness

    def wavelength_response(self, wavelength_nm: float) -> float:
        """Decreasing logistic S(lambda), 1/2 at the center wavelength."""
        return _logistic_decreasing(self.steepness * (wavelength_nm - self.center_wavelength))


def emission_rate(model: EmissionModel, source: UVSource, particle: Particle) -> float:
    """Per-electron charge-change rate in 1/s for this source and particle."""
    if particle.radius <= 0:
        raise ValueError("particle radius must be positive")
    s = model.wavelength_response(source.wavelength)
    scale = ((source.average_intensity / model.reference_intensity)
             * (particle.diameter / model.reference_diameter) ** model.size_exponent)
    return model.rate_scale * scale * s + model.floor_rate


@dataclass(frozen=True)
class ChargeTrajectory:
    """Event record of single-electron charge steps on one particle."""

    times: np.ndarray          # s, strictly increasing event times
    charges: np.ndarray        # charge_count after each event
    initial_charge: int
    duration: float
    seed: Optional[int] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        c = np.asarray(self.charges, dtype=int)
        if len(t) != len(c):
            raise ValueError("times and charges must have equal length")
        if len(t) and not np.all(np.diff(t) > 0):
            raise ValueError("event times must be strictly increasing")
        full = np.concatenate(([self.initial_charge], c))
        if len(t) and not np.all(np.abs(np.diff(full)) == 1):
            raise ValueError("each event must change the charge by exactly one e")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "charges", c)

    @property
    def n_events(self) -> int:
        return len(self.times)

    @property
    def final_charge(self) -> int:
        return int(self.charges[-1]) if len(self.charges) else self.initial_charge

    def charge_at(self, t) -> np.ndarray:
        """Charge count at time(s) t (initial charge before the first event)."""
        t = np.asarray(t, dtype=float)
        full = np.concatenate(([self.initial_charge], self.charges))
        idx = np.searchsorted(self.times, t, side="right")
        return full[idx]


RateFunction = Union[float, Callable[[float], float]]


def simulate_charge_trajectory(particle: Particle, rate_fn: RateFunction,
                               duration: float, direction: str = "emit",
                               seed: Optional[int] = 0,
                               rng: Optional[np.random.Generator] = None,
                               rate_max: Optional[float] = None,
                               floor_charge: Optional[int] = 0) -> ChargeTrajectory:
    """Single-electron jump process via Poisson thinning.

    ``direction="emit"`` removes electrons (charge_count moves positive-ward),
    ``"capture"`` adds them (charge_count moves negative-ward).  The process
    stops at ``floor_charge`` (default 0 = neutrality) or at ``duration``.

    Parameters
    ----------
    rate_fn : float or callable
        Constant rate, or instantaneous rate as a function of time in 1/s.
        A callable must be bounded by ``rate_max``; if rate_max is omitted it
        is taken as the maximum over a dense time grid, which is exact for
        piecewise-constant and monotone rates.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if direction not in ("emit", "capture"):
        raise ValueError(f"direction must be 'emit' or 'capture', got {direction!r}")
    step = +1 if direction == "emit" else -1
    c0 = particle.charge_count
    if floor_charge is not None and (floor_charge - c0) * step < 0:
        raise ValueError(
            f"floor_charge {floor_charge} is unreachable from {c0} in direction {direction}")

    if callable(rate_fn):
        rate = rate_fn
        if rate_max is None:
            grid = np.linspace(0.0, duration, 4097)
            rate_max = float(max(rate(t) for t in grid))
    else:
        value = float(rate_fn)
        if value < 0:
            raise ValueError(f"rate must be >= 0, got {value}")
        rate = None
        rate_max = value
    if rate_max < 0:
        raise ValueError("rate bound must be >= 0")

    if rng is None:
        rng = np.random.default_rng(seed)
    times = []
    charges = []
    c = c0
    if rate_max > 0 and (floor_charge is None or c != floor_charge):
        t = 0.0
        while True:
            t += rng.exponential(1.0 / rate_max)
            if t >= duration:
                break
            if rate is not None:
                r = rate(t)
                if r < 0:
                    raise ValueError(f"rate function returned {r} < 0 at t = {t}")
                if r > rate_max * (1.0 + 1e-9):
                    raise ValueError("rate function exceeds its stated bound")
                if rng.random() >= r / rate_max:
                    continue
            c += step
            times.append(t)
            charges.append(c)
            if floor_charge is not None and c == floor_charge:
                break
    return ChargeTrajectory(times=np.asarray(times), charges=np.asarray(charges, dtype=int),
                            initial_charge=c0, duration=duration, seed=seed)


@dataclass(frozen=True)
class PulseTrain:
    """Laser pulse train gated by a mechanical shutter and an optical chopper.

    Phases are fractions in [0, 1): the shutter opening time relative to the
    chopper period, the chopper window offset within its period, and the
    laser pulse offset within its repetition period.
    """

    repetition_rate: float      # Hz
    pulse_duration: float       # s
    shutter_open: float         # s, exposure window length
    chopper_frequency: float    # Hz
    chopper_duty: float         # fraction of the chopper period that is open
    phases: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.repetition_rate <= 0 or self.chopper_frequency <= 0:
            raise ValueError("rates must be positive")
        if self.shutter_open <= 0 or self.pulse_duration <= 0:
            raise ValueError("durations must be positive")
        if not (0.0 < self.chopper_duty < 1.0):
            raise ValueError("chopper duty must be in (0, 1)")
        if len(self.phases) != 3 or any(not (0.0 <= p < 1.0) for p in self.phases):
            raise ValueError("phases must be three fractions in [0, 1)")
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))

    @property
    def chopper_window(self) -> float:
        """Open time per chopper revolution, s."""
        return self.chopper_duty / self.chopper_frequency


def mean_pulses_analytic(train: PulseTrain) -> float:
    """Expected transmitted pulses per shutter exposure over random phases."""
    return train.shutter_open * train.repetition_rate * train.chopper_duty


def pick_pulses(train: PulseTrain, phases: Optional[tuple] = None,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Times of laser pulses transmitted through shutter and chopper.

    Deterministic for given phases (``phases`` argument, else the train's
    own); with ``rng`` given and no explicit phases, all three phases are
    drawn uniformly, which is the Monte Carlo mode.  Pulse centers are
    tested against the windows; at sub-ns pulse lengths the distinction
    from full containment is negligible.
    """
    if phases is None:
        phases = tuple(rng.random(3)) if rng is not None else train.phases
    shutter_phase, chopper_phase, laser_phase = phases
    t_chop = 1.0 / train.chopper_frequency
    t_rep = 1.0 / train.repetition_rate
    t0 = shutter_phase * t_chop
    t1 = t0 + train.shutter_open
    n_lo = math.ceil((t0 - laser_phase * t_rep) / t_rep)
    n_hi = math.floor((t1 - laser_phase * t_rep) / t_rep)
    out = []
    for n in range(n_lo, n_hi + 1):
        t = (n + laser_phase) * t_rep
        if not (t0 <= t < t1):
            continue
        chopper_pos = (t / t_chop - chopper_phase) % 1.0
        if chopper_pos < train.chopper_duty:
            out.append(t)
    return np.asarray(out)


def required_intensity_scaling(target_time: float, measured_time: float) -> float:
    """Intensity factor needed to compress a neutralization to target_time.

    Assumes the one-photon linear rate-intensity relation, so the factor is
    simply measured_time / target_time.
    """
    if target_time <= 0 or measured_time <= 0:
        raise ValueError("times must be positive")
    return measured_time / target_time


def spot_for_power(power: float, target_intensity: float) -> float:
    """Beam spot diameter (m) that turns a power (W) into an intensity (W/m^2)."""
    if power <= 0 or target_intensity <= 0:
        raise ValueError("power and intensity must be positive")
    return 2.0 * math.sqrt(power / (math.pi * target_intensity))
