"""Force-sensing swab gripper: deflection beam and reflective opto sensor.

The gripper carries the swab on a compliant beam. Tip contact force bends
the beam toward a reflective optical sensor whose output voltage rises
with deflection. Two small parametric models cover the chain:

  force -> deflection   stiffness surrogate anchored at the measured
                        endpoint (2.50 N bends the beam 0.50 mm)
  deflection -> volts   linear over the sensor's selected 0 to 0.50 mm
                        band, saturating (with a flag) beyond it

The beam itself stops against the sensor board once it has crossed the
gap, so deflection is clamped at ``max_deflection_mm``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Printed-material constants from the gripper's resin datasheet, recorded
# for provenance only. The runtime model is anchored to the measured
# force/deflection endpoint rather than recomputing beam elasticity.
GRIPPER_YOUNGS_MODULUS_GPA = 1.70
GRIPPER_POISSON_RATIO = 0.43

DEFAULT_STIFFNESS_N_PER_MM = 5.0
DEFAULT_MAX_DEFLECTION_MM = 0.5


@dataclass(frozen=True)
class BeamModel:
    """Stiffness surrogate for the gripper's deflection beam.

    deflection(f) = f/k + c * (f/k)**3, clamped at max_deflection_mm
    (the mechanical gap between beam and sensor board).
    """

    stiffness_n_per_mm: float = DEFAULT_STIFFNESS_N_PER_MM
    max_deflection_mm: float = DEFAULT_MAX_DEFLECTION_MM
    nonlinearity_coeff: float = 0.0

    def __post_init__(self) -> None:
        if not self.stiffness_n_per_mm > 0:
            raise ValueError("beam stiffness must be positive")
        if not self.max_deflection_mm > 0:
            raise ValueError("beam max deflection must be positive")
        if self.nonlinearity_coeff < 0:
            # negative cubic terms would break monotonicity at high load
            raise ValueError("beam nonlinearity coefficient must be >= 0")


@dataclass(frozen=True)
class OptoSensorModel:
    """Reflective optical sensor reading beam deflection as a voltage."""

    baseline_v: float = 0.30
    sensitivity_v_per_mm: float = 4.0
    linear_range_mm: tuple[float, float] = (0.0, 0.5)
    noise_sigma_v: float = 0.01
    v_supply: float = 3.3

    def __post_init__(self) -> None:
        lo, hi = self.linear_range_mm
        if lo != 0.0:
            raise ValueError("sensor linear range must start at zero deflection")
        if not hi > lo:
            raise ValueError("sensor linear range must be non-empty")
        if self.sensitivity_v_per_mm <= 0:
            raise ValueError("sensor sensitivity must be positive")
        if self.noise_sigma_v < 0:
            raise ValueError("sensor noise sigma must be >= 0")
        if self.v_supply <= 0:
            raise ValueError("sensor supply voltage must be positive")


@dataclass(frozen=True)
class SensorReading:
    """One raw sensor sample. ``out_of_range`` marks saturated output:
    the beam is past the linear band and the value is no longer
    trustworthy (held at the band's endpoint voltage)."""

    volts: float
    out_of_range: bool


def deflection_from_force(force_n: float, beam: BeamModel) -> float:
    """Beam deflection in mm under a tip contact force.

    Negative forces are a caller error: the swab cannot pull on the beam.
    """
    if force_n < 0:
        raise ValueError(f"contact force must be >= 0, got {force_n}")
    x = force_n / beam.stiffness_n_per_mm
    d = x + beam.nonlinearity_coeff * x**3
    return min(d, beam.max_deflection_mm)


def voltage_from_deflection(deflection_mm: float, sensor: OptoSensorModel) -> SensorReading:
    """Sensor output for a beam deflection.

    Inside the linear band the output is baseline + sensitivity * d.
    Beyond the band the output saturates at the endpoint value and the
    reading is flagged out of range. Output is clamped to the supply
    rails in all cases.
    """
    if deflection_mm < 0:
        raise ValueError(f"deflection must be >= 0, got {deflection_mm}")
    lo, hi = sensor.linear_range_mm
    out_of_range = deflection_mm > hi
    d = min(deflection_mm, hi)
    volts = sensor.baseline_v + sensor.sensitivity_v_per_mm * d
    volts = min(max(volts, 0.0), sensor.v_supply)
    return SensorReading(volts=volts, out_of_range=out_of_range)


def simulate_raw_reading(
    force_n: float,
    beam: BeamModel,
    sensor: OptoSensorModel,
    rng: int | np.random.Generator | None = None,
) -> SensorReading:
    """Full force -> voltage chain with additive Gaussian sensor noise.

    ``rng`` may be an integer seed (same seed, same reading) or a
    Generator owned by the caller's control loop. With noise_sigma_v = 0
    the chain is exact and rng is unused.
    """
    reading = voltage_from_deflection(deflection_from_force(force_n, beam), sensor)
    if sensor.noise_sigma_v > 0:
        gen = np.random.default_rng(rng)
        volts = reading.volts + gen.normal(0.0, sensor.noise_sigma_v)
        volts = min(max(volts, 0.0), sensor.v_supply)
        return SensorReading(volts=volts, out_of_range=reading.out_of_range)
    return reading
