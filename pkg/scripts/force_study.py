"""Insertion force study across specimens.

Reproduces the headline bench experiment: the standard three-repetition
teleoperated insertion-retraction protocol against the phantom and a set
of pig specimens, reporting per-repetition and pooled contact-force
statistics plus the depth of the force peak.

Usage: python3 scripts/force_study.py [--seeds 1 2 3] [--reps 3]
       [--sensor-seed 0] [--out-dir traces/]
"""

from __future__ import annotations

import argparse
import os

from swabbot.session import (Session, make_standard_script, rep_statistics,
                             run_script, save_trace)
from swabbot.tissue import make_phantom_profile, make_pig_profile


def study(profile, reps: int, sensor_seed: int, out_dir: str | None):
    session = Session(profile=profile, sensor_seed=sensor_seed)
    result = run_script(session, make_standard_script(reps))
    s, st = result.summary, result.stats
    print(f"{profile.name}:")
    print(f"  completed {s.completed_reps}/{reps} repetitions, "
          f"{s.safety_faults} safety faults, final phase {s.final_phase}")
    for i, rs in enumerate(rep_statistics(result.trace), start=1):
        print(f"  rep {i}: mean={rs.mean_force_n:.3f} N  "
              f"std={rs.std_force_n:.3f} N  max={rs.max_force_n:.3f} N  "
              f"peak depth={rs.max_depth_mm:.1f} mm")
    print(f"  pooled: mean={st.mean_force_n:.3f} N  std={st.std_force_n:.3f} N  "
          f"max={st.max_force_n:.3f} N over {st.active_rows} active rows")
    if out_dir:
        path = os.path.join(out_dir, f"{profile.name}.csv")
        save_trace(result.trace, path)
        print(f"  trace -> {path}")
    return st


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3],
                    help="pig specimen seeds")
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--sensor-seed", type=int, default=0)
    ap.add_argument("--out-dir", help="write one trace CSV per specimen here")
    args = ap.parse_args()
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)

    phantom = study(make_phantom_profile(), args.reps, args.sensor_seed,
                    args.out_dir)
    pig_stats = [study(make_pig_profile(seed), args.reps, args.sensor_seed,
                       args.out_dir) for seed in args.seeds]

    print("\nsummary:")
    print(f"  phantom pooled mean {phantom.mean_force_n:.3f} N "
          f"(nominal 0.35 +/- 0.10), max {phantom.max_force_n:.3f} N")
    worst = max(ps.max_force_n for ps in pig_stats)
    print(f"  pig worst-case max over {len(pig_stats)} specimens: "
          f"{worst:.3f} N (payload limit 3.5 N)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
