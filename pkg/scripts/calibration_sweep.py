"""Calibration bench sweep.

Fits the voltage-to-force curve across a range of hysteresis widths and
noise levels on the simulated bench, reporting coefficient drift and
residuals. Useful for judging how much bench imperfection the quadratic
fit tolerates before the readout error grows past the 0.1 N budget.

Usage: python3 scripts/calibration_sweep.py [--grid-max 3.0] [--trials 20]
"""

from __future__ import annotations

import argparse

import numpy as np

from swabbot.calibration import (CalibrationRig, acquire_record, fit_curve,
                                 force_from_voltage, make_grid,
                                 voltage_at_force)
from swabbot.gripper import BeamModel, OptoSensorModel


def bench_rig(h: float, sigma: float, seed: int) -> CalibrationRig:
    # beam stiff enough to keep the whole grid inside the sensing band
    return CalibrationRig(
        beam=BeamModel(stiffness_n_per_mm=6.0),
        sensor=OptoSensorModel(noise_sigma_v=0.0),
        hysteresis_half_width_v=h, noise_sigma_v=sigma, seed=seed,
    )


def recovery_error_n(curve, record) -> float:
    errs = []
    for f, lv, uv in zip(record.grid_forces_n, record.loading_v,
                         record.unloading_v):
        mid = 0.5 * (lv + uv)
        errs.append(abs(force_from_voltage(curve, mid).newtons - f))
    return max(errs)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid-max", type=float, default=3.0)
    ap.add_argument("--trials", type=int, default=20,
                    help="noise seeds per (hysteresis, sigma) cell")
    args = ap.parse_args()
    grid = make_grid(args.grid_max, 0.5)

    print(f"grid: {len(grid)} points, 0..{args.grid_max:g} N")
    print(f"{'h (V)':>7} {'sigma (V)':>10} {'c0':>9} {'c1':>8} {'c2':>9} "
          f"{'resid mean (V)':>15} {'worst err (N)':>14}")
    for h in (0.0, 0.02, 0.05, 0.1):
        for sigma in (0.0, 0.005, 0.02):
            coefs, resids, errs = [], [], []
            for seed in range(args.trials if sigma > 0 else 1):
                rig = bench_rig(h, sigma, seed)
                record = acquire_record(rig, grid)
                curve = fit_curve(record)
                coefs.append((curve.c0, curve.c1, curve.c2))
                resids.append(curve.residual_mean_v)
                errs.append(recovery_error_n(curve, record))
            c0, c1, c2 = np.mean(np.asarray(coefs), axis=0)
            print(f"{h:7.3f} {sigma:10.3f} {c0:9.4f} {c1:8.4f} {c2:9.5f} "
                  f"{np.mean(resids):15.5f} {max(errs):14.5f}")

    # sanity anchor: clean bench must invert the sensor almost exactly
    rig = bench_rig(0.0, 0.0, 0)
    curve = fit_curve(acquire_record(rig, grid))
    v_mid = voltage_at_force(curve, args.grid_max / 2)
    print(f"\nclean bench: force({v_mid:.4f} V) = "
          f"{force_from_voltage(curve, v_mid).newtons:.6f} N "
          f"(expected {args.grid_max / 2:g})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
