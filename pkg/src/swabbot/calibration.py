"""Bench calibration of the sensing gripper: grid acquisition and fit.

A calibration run presses the swab tip against a reference load cell at
a fixed grid of forces, first in ascending (loading) order and then in
descending (unloading) order. The gripper electronics show a small
rate-independent hysteresis between the two directions, modelled here as
a +/- h voltage offset around the true characteristic. Loading and
unloading voltages are averaged per grid point and a second-order
polynomial force(v) = c0 + c1*v + c2*v^2 is fitted by ordinary least
squares. Residuals are reported in the voltage domain: each raw sample
is compared against the fitted curve's voltage at the same force.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .gripper import BeamModel, OptoSensorModel, deflection_from_force, voltage_from_deflection

# Grid covering the gripper's trustworthy working range. The bench can
# drive the wider 0..3.0 N grid, but with the stock beam every force at
# or beyond 2.5 N bottoms the beam out at the same endpoint voltage, so
# points past 2.5 N add no information to the fit (see acquire_record).
DEFAULT_GRID_MAX_N = 2.5
DEFAULT_GRID_STEP_N = 0.5


class AcquisitionError(RuntimeError):
    """Raised when a grid point cannot produce a trustworthy sample."""

    def __init__(self, message: str, force_n: float):
        super().__init__(message)
        self.force_n = force_n


class FitError(RuntimeError):
    """Raised when the polynomial fit is degenerate or non-monotone."""


def make_grid(max_n: float = DEFAULT_GRID_MAX_N, step_n: float = DEFAULT_GRID_STEP_N) -> tuple[float, ...]:
    """Force grid from 0 to max_n inclusive at step_n spacing."""
    if step_n <= 0 or max_n <= 0:
        raise ValueError("grid step and maximum must be positive")
    n = int(round(max_n / step_n))
    if abs(n * step_n - max_n) > 1e-9:
        raise ValueError("grid maximum must be a multiple of the step")
    return tuple(round(i * step_n, 9) for i in range(n + 1))


@dataclass(frozen=True)
class CalibrationRig:
    """Simulated bench: the gripper models plus bench imperfections.

    hysteresis_half_width_v shifts the reported voltage by +h on the
    loading series and -h on the unloading series. noise_sigma_v adds
    seeded Gaussian noise per sample (0 for a clean bench).
    """

    beam: BeamModel = BeamModel()
    sensor: OptoSensorModel = OptoSensorModel()
    hysteresis_half_width_v: float = 0.0
    noise_sigma_v: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hysteresis_half_width_v < 0:
            raise ValueError("hysteresis half-width must be >= 0")
        if self.noise_sigma_v < 0:
            raise ValueError("bench noise sigma must be >= 0")


@dataclass(frozen=True)
class CalibrationRecord:
    """Raw samples from one bench run (volts per grid force, both directions)."""

    grid_forces_n: tuple[float, ...]
    loading_v: tuple[float, ...]
    unloading_v: tuple[float, ...]
    timestamp_s: float

    def __post_init__(self) -> None:
        n = len(self.grid_forces_n)
        if n < 2:
            raise ValueError("calibration record needs at least 2 grid points")
        if len(self.loading_v) != n or len(self.unloading_v) != n:
            raise ValueError("series lengths must match the force grid")
        if self.grid_forces_n[0] != 0.0:
            raise ValueError("force grid must start at 0")
        if any(b <= a for a, b in zip(self.grid_forces_n, self.grid_forces_n[1:])):
            raise ValueError("force grid must be strictly increasing")


@dataclass(frozen=True)
class CalibrationCurve:
    """Fitted voltage-to-force map, valid over [v_min, v_max]."""

    c0: float
    c1: float
    c2: float
    residual_mean_v: float
    residual_std_v: float
    v_min: float
    v_max: float

    def force_at(self, volts: float) -> float:
        return self.c0 + self.c1 * volts + self.c2 * volts * volts


@dataclass(frozen=True)
class ForceReading:
    """Calibrated force sample. below_range flags voltages under the
    calibrated span (benign, reads ~0 N); above_range flags voltages over
    it (the sensing chain is pinned and the value is a floor estimate)."""

    newtons: float
    below_range: bool
    above_range: bool


def acquire_record(
    rig: CalibrationRig,
    grid_forces_n: tuple[float, ...] | None = None,
    timestamp_s: float | None = None,
) -> CalibrationRecord:
    """Run the bench over the grid: ascending loading, descending unloading.

    Any grid point whose sensor reading saturates out of the linear band
    aborts the run; a calibration built from saturated samples would be
    silently wrong.
    """
    grid = tuple(grid_forces_n) if grid_forces_n is not None else make_grid()
    rng = np.random.default_rng(rig.seed)

    def sample(force_n: float, offset_v: float) -> float:
        reading = voltage_from_deflection(deflection_from_force(force_n, rig.beam), rig.sensor)
        if reading.out_of_range:
            raise AcquisitionError(
                f"sensor saturated out of its linear band at {force_n:.2f} N", force_n
            )
        v = reading.volts + offset_v
        if rig.noise_sigma_v > 0:
            v += rng.normal(0.0, rig.noise_sigma_v)
        return min(max(v, 0.0), rig.sensor.v_supply)

    h = rig.hysteresis_half_width_v
    loading = [sample(f, +h) for f in grid]
    unloading = list(reversed([sample(f, -h) for f in reversed(grid)]))
    ts = time.time() if timestamp_s is None else timestamp_s
    return CalibrationRecord(grid, tuple(loading), tuple(unloading), ts)


def fit_curve(record: CalibrationRecord) -> CalibrationCurve:
    """OLS quadratic fit of force against per-point averaged voltage.

    Residual statistics are computed over all raw samples (both series)
    in the voltage domain: the fitted curve is inverted at each sample's
    true force and the absolute voltage gap is pooled (mean and sample
    standard deviation).
    """
    if len(record.grid_forces_n) < 3:
        raise FitError("quadratic fit needs at least 3 grid points")
    forces = np.asarray(record.grid_forces_n, dtype=float)
    avg_v = (np.asarray(record.loading_v) + np.asarray(record.unloading_v)) / 2.0

    vander = np.vander(avg_v, 3, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(vander, forces, rcond=None)
    if rank < 3:
        raise FitError("calibration points are collinear in voltage; fit is degenerate")
    c0, c1, c2 = (float(c) for c in coef)

    v_min = float(avg_v.min())
    v_max = float(avg_v.max())
    # quadratic derivative is linear in v: checking both ends covers the span
    if c1 + 2 * c2 * v_min <= 0 or c1 + 2 * c2 * v_max <= 0:
        raise FitError("fitted curve is not monotone increasing over the voltage span")

    curve = CalibrationCurve(c0, c1, c2, 0.0, 0.0, v_min, v_max)
    residuals = []
    for f, vl, vu in zip(record.grid_forces_n, record.loading_v, record.unloading_v):
        v_pred = voltage_at_force(curve, f)
        residuals.append(abs(vl - v_pred))
        residuals.append(abs(vu - v_pred))
    res = np.asarray(residuals)
    mean = float(res.mean())
    std = float(res.std(ddof=1)) if len(res) > 1 else 0.0
    return CalibrationCurve(c0, c1, c2, mean, std, v_min, v_max)


def voltage_at_force(curve: CalibrationCurve, force_n: float) -> float:
    """Invert the fitted curve: the voltage at which it reads force_n.

    Picks the quadratic root on the curve's monotone branch (the one
    nearest the calibrated span).
    """
    if abs(curve.c2) < 1e-15:
        return (force_n - curve.c0) / curve.c1
    disc = curve.c1 * curve.c1 - 4.0 * curve.c2 * (curve.c0 - force_n)
    disc = max(disc, 0.0)
    sq = math.sqrt(disc)
    r1 = (-curve.c1 + sq) / (2.0 * curve.c2)
    r2 = (-curve.c1 - sq) / (2.0 * curve.c2)

    def dist(v: float) -> float:
        if v < curve.v_min:
            return curve.v_min - v
        if v > curve.v_max:
            return v - curve.v_max
        return 0.0

    return r1 if dist(r1) <= dist(r2) else r2


def force_from_voltage(curve: CalibrationCurve, volts: float) -> ForceReading:
    """Calibrated readout of a raw voltage, clamped to the curve's span.

    Out-of-span inputs are clamped to the nearest endpoint and flagged on
    the matching side. Output force is clamped below at 0 N.
    """
    below = volts < curve.v_min
    above = volts > curve.v_max
    v = min(max(volts, curve.v_min), curve.v_max)
    f = max(curve.force_at(v), 0.0)
    return ForceReading(newtons=f, below_range=below, above_range=above)


# ----- CSV serialization (9 significant digits, lossless round-trip) -----

_REC_HEADER = "force_n,loading_v,unloading_v"
_CURVE_HEADER = "c0,c1,c2,residual_mean_v,residual_std_v,v_min,v_max"


def _fmt(x: float) -> str:
    return format(x, ".9g")


def record_to_csv(record: CalibrationRecord) -> str:
    lines = [f"# calibration record; timestamp_s={_fmt(record.timestamp_s)}", _REC_HEADER]
    for f, vl, vu in zip(record.grid_forces_n, record.loading_v, record.unloading_v):
        lines.append(f"{_fmt(f)},{_fmt(vl)},{_fmt(vu)}")
    return "\n".join(lines) + "\n"


def record_from_csv(text: str) -> CalibrationRecord:
    timestamp = 0.0
    rows: list[tuple[float, float, float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "timestamp_s=" in line:
                timestamp = float(line.split("timestamp_s=", 1)[1])
            continue
        if line == _REC_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"calibration record row {lineno}: expected 3 columns")
        rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
    if not rows:
        raise ValueError("calibration record CSV has no data rows")
    return CalibrationRecord(
        tuple(r[0] for r in rows),
        tuple(r[1] for r in rows),
        tuple(r[2] for r in rows),
        timestamp,
    )


def curve_to_csv(curve: CalibrationCurve) -> str:
    values = (
        curve.c0, curve.c1, curve.c2,
        curve.residual_mean_v, curve.residual_std_v,
        curve.v_min, curve.v_max,
    )
    return (
        "# calibration curve: force_n = c0 + c1*v + c2*v^2 over [v_min, v_max]\n"
        f"# {_CURVE_HEADER}\n" + ",".join(_fmt(x) for x in values) + "\n"
    )


def curve_from_csv(text: str) -> CalibrationCurve:
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ValueError("calibration curve CSV: expected 7 values")
        vals = [float(p) for p in parts]
        return CalibrationCurve(*vals)
    raise ValueError("calibration curve CSV has no data row")
