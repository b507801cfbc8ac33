#!/usr/bin/env python3
"""Simulate one two-half boundary walk path and dump it as CSV.

Default parameters: kills 0.25 on both origins, escape scale 2, switch
rates 6 (plus to minus) and 4 (minus to plus), scale n = 500, start u = 1/3,
horizon t = 1.  The walk typically bounces off both origins, may switch
half-lines several times, and is eventually absorbed.
"""

import argparse
from pathlib import Path

from genbm.coeffs import WalkParamsTwoHalf
from genbm.walk import FULL_PATH, SimConfig, path_to_rows, simulate_path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--u", type=float, default=1 / 3)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="walk_path.csv")
    args = ap.parse_args()

    p = WalkParamsTwoHalf(A_plus=0.25, A_minus=0.25, B_plus=2.0, B_minus=2.0,
                          C_plus=6.0, C_minus=4.0)
    cfg = SimConfig(n=args.n, t_horizon=args.t, start=args.u, seed=args.seed,
                    record_mode=FULL_PATH)
    rec = simulate_path(cfg, p)
    s = rec.summary
    rows = path_to_rows(rec)
    out = Path(args.out)
    out.write_text("t,state\n" + "\n".join(f"{t!r},{lab}" for t, lab in rows) + "\n")
    print(f"wrote {len(rows)} events to {out}")
    print(f"terminal: {s.terminal_flag} at t={s.final_time:.4f}")
    print(f"time at 0+/0-: {s.time_at_origin_pos:.4f}/{s.time_at_origin_neg:.4f}")
    print(f"switches +->-: {s.switches_pm}, -->+: {s.switches_mp}")


if __name__ == "__main__":
    main()
