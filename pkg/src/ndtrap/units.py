"""Unit parsing and conversion.

All numerics inside the package are SI (with two deliberate exceptions:
wavelengths are carried in nm and trap pressure in Torr, both stored under
explicitly suffixed names).  Conversion happens only here, at the I/O
boundary.  Peak-to-peak voltages are halved exactly once, when parsed.
"""

from __future__ import annotations

import math

from .constants import EV_NM, TORR


def torr_to_pa(pressure_torr: float) -> float:
    return pressure_torr * TORR


def pa_to_torr(pressure_pa: float) -> float:
    return pressure_pa / TORR


def photon_energy_ev(wavelength_nm: float) -> float:
    """Photon energy in eV for a vacuum wavelength in nm."""
    if wavelength_nm <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength_nm}")
    return EV_NM / wavelength_nm


# unit token (lowercased, spaces and hyphens stripped) -> (dimension, factor to canonical)
# Canonical units: m, s, Hz, V (amplitude), Torr, W, W/m^2, K, 1/s, kg/m^3, nm for
# "wavelength", dimensionless for bare numbers.
_UNIT_TABLE = {
    # length -> m
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "µm": ("length", 1e-6),
    "nm": ("length", 1e-9),
    # time -> s
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "µs": ("time", 1e-6),
    "ns": ("time", 1e-9),
    # frequency -> Hz
    "hz": ("frequency", 1.0),
    "khz": ("frequency", 1e3),
    "mhz": ("frequency", 1e6),
    # rate -> 1/s
    "1/s": ("rate", 1.0),
    "1/hour": ("rate", 1.0 / 3600.0),
    # voltage -> V zero-to-peak; peak-to-peak halves
    "v": ("voltage", 1.0),
    "kv": ("voltage", 1e3),
    "vpp": ("voltage", 0.5),
    "kvpp": ("voltage", 500.0),
    "vp-p": ("voltage", 0.5),
    "kvp-p": ("voltage", 500.0),
    # pressure -> Torr
    "torr": ("pressure", 1.0),
    "pa": ("pressure", 1.0 / TORR),
    "mbar": ("pressure", 100.0 / TORR),
    # power -> W
    "w": ("power", 1.0),
    "mw": ("power", 1e-3),
    "uw": ("power", 1e-6),
    # intensity -> W/m^2
    "w/m2": ("intensity", 1.0),
    "w/m^2": ("intensity", 1.0),
    "mw/cm2": ("intensity", 10.0),
    "mw/cm^2": ("intensity", 10.0),
    "w/cm2": ("intensity", 1e4),
    "w/cm^2": ("intensity", 1e4),
    # temperature -> K
    "k": ("temperature", 1.0),
    # mass density -> kg/m^3
    "kg/m3": ("density", 1.0),
    "kg/m^3": ("density", 1.0),
    "g/cm3": ("density", 1e3),
    "g/cm^3": ("density", 1e3),
    # counts of elementary charge
    "e": ("charge_count", 1.0),
}

# canonical unit suffix written when serializing, per dimension
CANONICAL_UNIT = {
    "length": "m",
    "wavelength": "nm",
    "time": "s",
    "frequency": "Hz",
    "rate": "1/s",
    "voltage": "V",
    "pressure": "Torr",
    "power": "W",
    "intensity": "W/m2",
    "temperature": "K",
    "density": "kg/m3",
    "charge_count": "e",
    "dimensionless": "",
}


def _normalize_unit(token: str) -> str:
    return token.strip().lower().replace(" ", "").replace("p-p", "pp")


def parse_quantity(text: str, dimension: str):
    """Parse ``"4.5 kVpp"`` style text into a canonical-unit float.

    ``dimension`` names the expected quantity kind; a bare number is accepted
    only for ``dimensionless``.  Wavelengths accept any length unit and come
    back in nm.
    """
    parts = text.strip().split()
    if not parts:
        raise ValueError("empty quantity")
    try:
        value = float(parts[0])
    except ValueError:
        raise ValueError(f"cannot parse number from {text!r}") from None
    unit = _normalize_unit(" ".join(parts[1:]))

    if dimension == "dimensionless":
        if unit:
            raise ValueError(f"unexpected unit {unit!r} on dimensionless value")
        return value
    if not unit:
        raise ValueError(f"missing unit on {text!r} (expected {dimension})")

    if dimension == "wavelength":
        # any length unit, canonical nm; exact per-unit factors avoid the
        # round trip through meters
        factor = {"nm": 1.0, "um": 1e3, "µm": 1e3, "mm": 1e6,
                  "cm": 1e7, "m": 1e9}.get(unit)
        if factor is None:
            raise ValueError(f"unit {unit!r} is not a length (wavelength expected)")
        return value * factor

    dim, factor = _UNIT_TABLE.get(unit, (None, None))
    if dim is None:
        raise ValueError(f"unknown unit {unit!r}")
    if dim == "frequency" and dimension == "rate":
        return value * factor  # Hz and 1/s are interchangeable
    if dim != dimension:
        raise ValueError(f"unit {unit!r} has dimension {dim}, expected {dimension}")
    if not math.isfinite(value):
        raise ValueError(f"non-finite value in {text!r}")
    return value * factor


def format_quantity(value: float, dimension: str) -> str:
    """Format a canonical-unit value with its canonical unit suffix."""
    suffix = CANONICAL_UNIT[dimension]
    body = repr(float(value))
    return f"{body} {suffix}".strip()
