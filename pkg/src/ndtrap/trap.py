"""Paul-trap physics: stability parameter, secular frequency, gas damping and
time-domain integration of the driven, damped radial equation of motion.

The dimensionless stability parameter is

    q = 2 |Q| V eta / (m Omega^2 r0^2)

with Q the particle charge, V the zero-to-peak drive amplitude, eta the trap
geometry factor, m the particle mass, Omega the angular drive frequency and
r0 the characteristic electrode distance.  With no DC term, particles are
practically trapped for q inside the configured band, default (0.1, 0.9).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .constants import (AIR_MOLECULE_MASS, BOLTZMANN, ELEMENTARY_CHARGE,
                        ROOM_TEMPERATURE)
from .core import Particle, TrapConfig
from .units import torr_to_pa

# first-order pseudopotential formula f_sec = q f_drive / (2 sqrt(2)) holds
# well below this q
FIRST_ORDER_Q_LIMIT = 0.4

MIN_STEPS_PER_PERIOD = 200


def stability_parameter(particle: Particle, trap: TrapConfig) -> float:
    """Dimensionless q for this particle in this trap (sign of charge ignored)."""
    m = particle.mass
    if m <= 0:
        raise ValueError("particle mass must be positive")
    q_coulomb = abs(particle.charge_count) * ELEMENTARY_CHARGE
    omega = trap.angular_frequency
    return (2.0 * q_coulomb * trap.voltage_amplitude * trap.geometry_factor
            / (m * omega**2 * trap.characteristic_radius**2))


def is_stable(q: float, band: tuple) -> bool:
    """True iff q_min <= q <= q_max; boundary values count as stable."""
    q_min, q_max = band
    if not (0 < q_min < q_max):
        raise ValueError(f"invalid stability band {band}")
    return q_min <= q <= q_max


def secular_frequency(particle: Particle, trap: TrapConfig) -> float:
    """First-order secular frequency f = (q / (2 sqrt(2))) f_drive, in Hz.

    Strictly proportional to |charge_count|, which is what makes the
    frequency-lattice charge readout work.  Only approximate above
    q = 0.4; see stability_report for the validity flag.
    """
    q = stability_parameter(particle, trap)
    return q / (2.0 * math.sqrt(2.0)) * trap.drive_frequency


@dataclass(frozen=True)
class StabilityReport:
    q: float
    stable: bool
    secular_frequency: float      # Hz, first-order formula
    first_order_valid: bool       # False when q >= 0.4


def stability_report(particle: Particle, trap: TrapConfig) -> StabilityReport:
    q = stability_parameter(particle, trap)
    return StabilityReport(
        q=q,
        stable=is_stable(q, trap.stability_band),
        secular_frequency=q / (2.0 * math.sqrt(2.0)) * trap.drive_frequency,
        first_order_valid=q < FIRST_ORDER_Q_LIMIT,
    )


def damping_rate(particle: Particle, pressure_torr: float,
                 gas_temperature: float = ROOM_TEMPERATURE,
                 gas_molecule_mass: float = AIR_MOLECULE_MASS,
                 reflection: str = "diffuse") -> float:
    """Free-molecular (Epstein) velocity damping rate gamma in 1/s.

    gamma = delta * P * sqrt(8 m_gas / (pi kB T)) / (radius * density),
    linear in pressure, with delta = 1 + pi/8 for diffuse reflection
    (Epstein's accommodated case) or 1 for specular.
    """
    if pressure_torr < 0:
        raise ValueError("pressure must be >= 0")
    if pressure_torr == 0:
        return 0.0
    if reflection == "diffuse":
        delta = 1.0 + math.pi / 8.0
    elif reflection == "specular":
        delta = 1.0
    else:
        raise ValueError(f"reflection must be 'diffuse' or 'specular', got {reflection!r}")
    pressure_pa = torr_to_pa(pressure_torr)
    speed_factor = math.sqrt(8.0 * gas_molecule_mass / (math.pi * BOLTZMANN * gas_temperature))
    return delta * pressure_pa * speed_factor / (particle.radius * particle.material_density)


@dataclass(frozen=True)
class MotionTrace:
    """Uniformly sampled radial position trace from the integrator."""

    sample_rate: float            # Hz
    times: np.ndarray             # s
    positions: np.ndarray         # m
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.positions):
            raise ValueError("times and positions must have equal length")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("motion trace contains non-finite positions")

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self.times) else 0.0


@dataclass(frozen=True)
class ParticleLost:
    """Returned instead of a trace when the integrated motion diverges."""

    escape_time: float
    q: float
    metadata: dict = field(default_factory=dict)


def _integrate_linear_oscillator(stiffness_table, dt, n_steps, damping,
                                 x0, v0, kick_sigma=0.0, rng=None,
                                 escape_radius=None, sample_stride=1):
    """Fixed-step RK4 for x'' + damping x' + k(t) x = noise.

    ``stiffness_table`` holds k(t) sampled on the half-step grid; it is
    indexed modulo its length, so a periodic stiffness needs exactly
    2 * steps_per_period entries and a constant one a single entry.
    Returns (positions, lost, escape_step, final_state); positions includes
    t = 0 and is sampled every ``sample_stride`` steps.
    """
    tab = [float(s) for s in stiffness_table]
    m = len(tab)
    g = float(damping)
    x = float(x0)
    v = float(v0)
    half = 0.5 * dt
    sixth = dt / 6.0
    out = [x]
    kick = kick_sigma > 0.0
    if kick and rng is None:
        raise ValueError("thermal kicks need an rng")
    normals = rng.standard_normal(n_steps) if kick else None
    for step in range(n_steps):
        j = (2 * step) % m
        s0 = tab[j]
        s1 = tab[(j + 1) % m]
        s2 = tab[(j + 2) % m]
        k1x = v
        k1v = -s0 * x - g * v
        x2 = x + half * k1x
        v2 = v + half * k1v
        k2x = v2
        k2v = -s1 * x2 - g * v2
        x3 = x + half * k2x
        v3 = v + half * k2v
        k3x = v3
        k3v = -s1 * x3 - g * v3
        x4 = x + dt * k3x
        v4 = v + dt * k3v
        k4x = v4
        k4v = -s2 * x4 - g * v4
        x += sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
        v += sixth * (k1v + 2.0 * (k2v + k3v) + k4v)
        if kick:
            v += kick_sigma * normals[step]
        if escape_radius is not None and abs(x) > escape_radius:
            return np.asarray(out), True, step + 1, (x, v)
        if (step + 1) % sample_stride == 0:
            out.append(x)
    return np.asarray(out), False, -1, (x, v)


def _mathieu_stiffness_table(q, omega, steps_per_period):
    """k(t) = (q Omega^2 / 2) cos(Omega t) on the half-step grid of one period."""
    amp = 0.5 * q * omega * omega
    n = steps_per_period
    return [amp * math.cos(math.pi * j / n) for j in range(2 * n)]


def integrate_mathieu(q, drive_frequency, duration, damping=0.0,
                      x0=1.0, v0=0.0, steps_per_period=256,
                      kick_sigma=0.0, rng=None, escape_radius=None,
                      sample_stride=1):
    """Integrate x'' + gamma x' + (q Omega^2 / 2) cos(Omega t) x = noise.

    Dimensionless-friendly core used by integrate_motion and by the
    stability-boundary search.  Returns (times, positions, lost, escape_time).
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if steps_per_period < MIN_STEPS_PER_PERIOD:
        raise ValueError(
            f"steps_per_period must be >= {MIN_STEPS_PER_PERIOD} "
            "(integrator step <= drive period / 200)")
    omega = 2.0 * math.pi * drive_frequency
    dt = 1.0 / (drive_frequency * steps_per_period)
    n_steps = int(round(duration * drive_frequency * steps_per_period))
    tab = _mathieu_stiffness_table(q, omega, steps_per_period)
    xs, lost, esc_step, _ = _integrate_linear_oscillator(
        tab, dt, n_steps, damping, x0, v0, kick_sigma=kick_sigma, rng=rng,
        escape_radius=escape_radius, sample_stride=sample_stride)
    if lost:
        return None, None, True, esc_step * dt
    times = np.arange(len(xs)) * (dt * sample_stride)
    return times, xs, False, None


def integrate_harmonic(omega, cycles, x0=1.0, v0=0.0, steps_per_cycle=450):
    """RK4 on the plain harmonic oscillator x'' + omega^2 x = 0.

    Runs the same integrator core as the Mathieu path with a constant
    stiffness table; exists as an integrator sanity check.  Returns the
    final (x, v) after ``cycles`` full periods.
    """
    dt = 2.0 * math.pi / (omega * steps_per_cycle)
    n_steps = int(round(cycles)) * steps_per_cycle
    _, _, _, final = _integrate_linear_oscillator(
        [omega * omega], dt, n_steps, 0.0, x0, v0, sample_stride=n_steps)
    return final


def integrate_motion(particle: Particle, trap: TrapConfig, duration: float,
                     damping: float = 0.0, rng_seed: int = 0,
                     thermal_noise: bool = False,
                     gas_temperature: float = ROOM_TEMPERATURE,
                     x0: Optional[float] = None, v0: float = 0.0,
                     steps_per_period: int = 256,
                     sample_rate: Optional[float] = None
                     ) -> Union[MotionTrace, ParticleLost]:
    """Time-domain radial motion of a particle in the driven trap.

    Fixed-step RK4 at >= 200 steps per drive period, bit-reproducible for a
    given seed.  With thermal_noise on, a white force with variance set by
    the fluctuation-dissipation theorem at ``gas_temperature`` is applied.
    Divergence beyond 100 r0 reports ParticleLost with the escape time
    instead of emitting a trace.
    """
    q = stability_parameter(particle, trap)
    if x0 is None:
        x0 = 0.01 * trap.characteristic_radius
    step_rate = trap.drive_frequency * steps_per_period
    if sample_rate is None:
        stride = 1
    else:
        stride = max(1, int(round(step_rate / sample_rate)))
    dt = 1.0 / step_rate
    kick_sigma = 0.0
    rng = None
    if thermal_noise and damping > 0.0:
        kick_sigma = math.sqrt(2.0 * damping * BOLTZMANN * gas_temperature
                               / particle.mass * dt)
        rng = np.random.default_rng(rng_seed)
    meta = {
        "q": q,
        "damping": damping,
        "thermal_noise": bool(thermal_noise),
        "rng_seed": rng_seed,
        "drive_frequency": trap.drive_frequency,
        "steps_per_period": steps_per_period,
        "x0": x0,
        "v0": v0,
    }
    times, xs, lost, escape_time = integrate_mathieu(
        q, trap.drive_frequency, duration, damping=damping, x0=x0, v0=v0,
        steps_per_period=steps_per_period, kick_sigma=kick_sigma, rng=rng,
        escape_radius=100.0 * trap.characteristic_radius, sample_stride=stride)
    if lost:
        return ParticleLost(escape_time=escape_time, q=q, metadata=meta)
    return MotionTrace(sample_rate=step_rate / stride, times=times,
                       positions=xs, metadata=meta)


def find_mathieu_boundary(q_lo: float = 0.5, q_hi: float = 1.5,
                          tolerance: float = 1e-3, periods: float = 600,
                          steps_per_period: int = 256,
                          growth_factor: float = 1e4) -> float:
    """Locate the a = 0 Mathieu stability boundary by bisection on q.

    A probe counts as unstable when |x| grows by ``growth_factor`` over
    ``periods`` drive periods starting from x0 = 1, v0 = 0, no damping.
    The known boundary is q ~ 0.908.
    """
    def unstable(q):
        _, _, lost, _ = integrate_mathieu(
            q, 1.0, periods, damping=0.0, x0=1.0, v0=0.0,
            steps_per_period=steps_per_period, escape_radius=growth_factor,
            sample_stride=steps_per_period)
        return lost

    if unstable(q_lo) or not unstable(q_hi):
        raise ValueError("bracket does not straddle the stability boundary")
    lo, hi = q_lo, q_hi
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
