"""Nasal-passage contact force plant for hardware-in-the-loop runs.

Contact force along the passage is a piecewise-linear baseline (mucosal
drag rising slowly with depth) plus Gaussian bumps where the swab rides
over the turbinates, plus seeded measurement-scale noise while the swab
is moving. Retraction sees slightly lower force (friction asymmetry).
Beyond the end of the passage a stiff wall term takes over, standing in
for rigid anatomy that the swab must never be driven into.

Two profiles are locked in: a nasal-cavity phantom (deterministic,
statistics frozen by regression tests) and an excised pig-nose specimen
(per-seed amplitude variation to model specimen-to-specimen spread).
Their shape parameters were chosen with scripts/tune_profiles.py, a
one-time brute-force sweep that matched the scripted-run force
statistics to the bench ranges, then frozen here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Direction(enum.Enum):
    INSERT = "insert"
    RETRACT = "retract"
    HOLD = "hold"


@dataclass(frozen=True)
class Peak:
    """One turbinate bump: Gaussian in depth."""

    center_mm: float
    width_mm: float
    amplitude_n: float

    def __post_init__(self) -> None:
        if self.width_mm <= 0:
            raise ValueError("peak width must be positive")
        if self.amplitude_n < 0:
            raise ValueError("peak amplitude must be >= 0")


@dataclass(frozen=True)
class TissueProfile:
    name: str
    passage_length_mm: float
    baseline_depth_mm: tuple[float, ...]
    baseline_force_n: tuple[float, ...]
    peaks: tuple[Peak, ...] = ()
    friction_asymmetry: float = 0.9
    noise_sigma_n: float = 0.01
    seed: int = 0
    wall_stiffness_n_per_mm: float = 8.0

    def __post_init__(self) -> None:
        if self.passage_length_mm <= 0:
            raise ValueError("passage length must be positive")
        knots = self.baseline_depth_mm
        if len(knots) < 2 or len(knots) != len(self.baseline_force_n):
            raise ValueError("baseline needs matching depth/force knots (>= 2)")
        if knots[0] != 0.0 or self.baseline_force_n[0] != 0.0:
            raise ValueError("baseline must start at (0 mm, 0 N)")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError("baseline depths must be strictly increasing")
        if any(f < 0 for f in self.baseline_force_n):
            raise ValueError("baseline forces must be >= 0")
        if not 0 < self.friction_asymmetry <= 1:
            raise ValueError("friction asymmetry must be in (0, 1]")
        if self.noise_sigma_n < 0:
            raise ValueError("noise sigma must be >= 0")
        if self.wall_stiffness_n_per_mm < 0:
            raise ValueError("wall stiffness must be >= 0")


def _noise(seed: int, tick_index: int) -> float:
    # counter-based stream: pure function of (seed, tick), no shared state
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, tick_index]))
    return float(gen.standard_normal())


def contact_force(profile: TissueProfile, depth_mm: float,
                  direction: Direction = Direction.HOLD, tick_index: int = 0) -> float:
    """Contact force at a swab depth. Pure in (profile, depth, direction,
    tick_index); holding still reads the noiseless value."""
    if depth_mm <= 0.0:
        return 0.0
    base = float(np.interp(depth_mm, profile.baseline_depth_mm, profile.baseline_force_n))
    for p in profile.peaks:
        z = (depth_mm - p.center_mm) / p.width_mm
        base += p.amplitude_n * float(np.exp(-0.5 * z * z))
    if depth_mm > profile.passage_length_mm:
        base += profile.wall_stiffness_n_per_mm * (depth_mm - profile.passage_length_mm)
    if direction is Direction.RETRACT:
        base *= profile.friction_asymmetry
    if direction is not Direction.HOLD and profile.noise_sigma_n > 0:
        base += profile.noise_sigma_n * _noise(profile.seed, tick_index)
    return max(base, 0.0)


# ----- locked profiles ------------------------------------------------
#
# Shapes picked by scripts/tune_profiles.py against the standard
# three-repetition scripted run, then frozen. The phantom has no rigid
# end wall within scripted reach (the real phantom keeps the swab off
# the nasopharynx); its passage length still carries the wall term for
# misuse protection far past scripted depth.

PHANTOM_SEED = 11


def make_phantom_profile() -> TissueProfile:
    """Nasal-cavity phantom: deterministic, gentle turbinate bumps."""
    return TissueProfile(
        name="phantom",
        passage_length_mm=100.0,
        baseline_depth_mm=(0.0, 4.0, 30.0, 60.0, 90.0, 110.0),
        baseline_force_n=(0.0, 0.06, 0.13, 0.19, 0.25, 0.27),
        peaks=(
            Peak(center_mm=22.0, width_mm=5.0, amplitude_n=0.34),
            Peak(center_mm=44.0, width_mm=6.5, amplitude_n=0.42),
            Peak(center_mm=68.0, width_mm=7.0, amplitude_n=0.52),
        ),
        friction_asymmetry=0.9,
        noise_sigma_n=0.012,
        seed=PHANTOM_SEED,
        wall_stiffness_n_per_mm=8.0,
    )


# Pig-nose base shape before per-seed scaling. Specimens are small and
# stiffer than the phantom: sharper, taller contact peaks.
_PIG_BASELINE_D = (0.0, 5.0, 30.0, 55.0, 80.0, 110.0)
_PIG_BASELINE_F = (0.0, 0.14, 0.37, 0.51, 0.63, 0.69)
_PIG_PEAKS = (
    Peak(center_mm=28.0, width_mm=7.0, amplitude_n=0.95),
    Peak(center_mm=54.0, width_mm=4.5, amplitude_n=1.62),
    Peak(center_mm=74.0, width_mm=6.0, amplitude_n=1.05),
)
# per-seed amplitude scale: clipped so no specimen can approach the
# payload limit even at the top of the spread
_PIG_SCALE_SIGMA = 0.12
_PIG_SCALE_MIN = 0.78
_PIG_SCALE_MAX = 1.10


def pig_amplitude_scale(seed: int) -> float:
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, 0xF00D]))
    return float(np.clip(1.0 + _PIG_SCALE_SIGMA * gen.standard_normal(),
                         _PIG_SCALE_MIN, _PIG_SCALE_MAX))


def make_pig_profile(seed: int = 1) -> TissueProfile:
    """Excised pig-nose specimen; seed selects the specimen (scales the
    whole force profile within a clipped spread)."""
    s = pig_amplitude_scale(seed)
    return TissueProfile(
        name=f"pig-{seed}",
        passage_length_mm=100.0,
        baseline_depth_mm=_PIG_BASELINE_D,
        baseline_force_n=tuple(round(f * s, 9) for f in _PIG_BASELINE_F),
        peaks=tuple(
            Peak(p.center_mm, p.width_mm, round(p.amplitude_n * s, 9)) for p in _PIG_PEAKS
        ),
        friction_asymmetry=0.88,
        noise_sigma_n=0.015,
        seed=seed,
        wall_stiffness_n_per_mm=8.0,
    )


def make_wall_profile(wall_depth_mm: float = 50.0,
                      wall_stiffness_n_per_mm: float = 8.0) -> TissueProfile:
    """Synthetic rigid-stop profile for safety testing only: free travel,
    then a stiff wall at wall_depth_mm."""
    return TissueProfile(
        name="wall",
        passage_length_mm=wall_depth_mm,
        baseline_depth_mm=(0.0, wall_depth_mm + 50.0),
        baseline_force_n=(0.0, 0.0),
        peaks=(),
        friction_asymmetry=1.0,
        noise_sigma_n=0.0,
        seed=0,
        wall_stiffness_n_per_mm=wall_stiffness_n_per_mm,
    )


# Frozen statistics of the standard scripted run (see scripts/
# tune_profiles.py). Regression tests require fresh runs to match these
# exactly; everything in the loop is seeded, so any drift is a real
# behavior change.
PHANTOM_RUN_REGRESSION: dict[str, float] = {
    "mean_force_n": 0.34035354116376637,
    "std_force_n": 0.16242276436790326,
    "max_force_n": 0.7596994689563489,
    "max_depth_mm": 90.10000000000382,
}
PIG_RUN_REGRESSION: dict[int, dict[str, float]] = {
    1: {
        "mean_force_n": 0.8366265754387072,
        "std_force_n": 0.42915608909320474,
        "max_force_n": 2.0417534849980985,
        "max_depth_mm": 90.10000000000382,
    },
    2: {
        "mean_force_n": 0.9132218321269467,
        "std_force_n": 0.4684045190625456,
        "max_force_n": 2.233761374490522,
        "max_depth_mm": 90.10000000000382,
    },
    3: {
        "mean_force_n": 0.9456022284745689,
        "std_force_n": 0.4853065939395242,
        "max_force_n": 2.311943478303695,
        "max_depth_mm": 90.10000000000382,
    },
}


# ----- key-value serialization ----------------------------------------

def profile_to_config(profile: TissueProfile) -> str:
    lines = [
        f"tissue.name = {profile.name}",
        f"tissue.passage_length_mm = {profile.passage_length_mm!r}",
        f"tissue.friction_asymmetry = {profile.friction_asymmetry!r}",
        f"tissue.noise_sigma_n = {profile.noise_sigma_n!r}",
        f"tissue.seed = {profile.seed}",
        f"tissue.wall_stiffness_n_per_mm = {profile.wall_stiffness_n_per_mm!r}",
    ]
    for i, (d, f) in enumerate(zip(profile.baseline_depth_mm, profile.baseline_force_n)):
        lines.append(f"tissue.knot.{i}.depth_mm = {d!r}")
        lines.append(f"tissue.knot.{i}.force_n = {f!r}")
    for i, p in enumerate(profile.peaks):
        lines.append(f"tissue.peak.{i}.center_mm = {p.center_mm!r}")
        lines.append(f"tissue.peak.{i}.width_mm = {p.width_mm!r}")
        lines.append(f"tissue.peak.{i}.amplitude_n = {p.amplitude_n!r}")
    return "\n".join(lines) + "\n"


def profile_from_config(text: str) -> TissueProfile:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"profile line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        kv[key.strip()] = value.strip()

    def need(key: str) -> str:
        if key not in kv:
            raise ValueError(f"profile is missing key '{key}'")
        return kv[key]

    knots_d, knots_f = [], []
    i = 0
    while f"tissue.knot.{i}.depth_mm" in kv:
        knots_d.append(float(kv[f"tissue.knot.{i}.depth_mm"]))
        knots_f.append(float(need(f"tissue.knot.{i}.force_n")))
        i += 1
    peaks = []
    i = 0
    while f"tissue.peak.{i}.center_mm" in kv:
        peaks.append(Peak(
            float(kv[f"tissue.peak.{i}.center_mm"]),
            float(need(f"tissue.peak.{i}.width_mm")),
            float(need(f"tissue.peak.{i}.amplitude_n")),
        ))
        i += 1
    return TissueProfile(
        name=need("tissue.name"),
        passage_length_mm=float(need("tissue.passage_length_mm")),
        baseline_depth_mm=tuple(knots_d),
        baseline_force_n=tuple(knots_f),
        peaks=tuple(peaks),
        friction_asymmetry=float(need("tissue.friction_asymmetry")),
        noise_sigma_n=float(need("tissue.noise_sigma_n")),
        seed=int(need("tissue.seed")),
        wall_stiffness_n_per_mm=float(need("tissue.wall_stiffness_n_per_mm")),
    )


def load_profile(path: str) -> TissueProfile:
    with open(path, "r", encoding="utf-8") as fh:
        return profile_from_config(fh.read())


def save_profile(profile: TissueProfile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(profile_to_config(profile))
