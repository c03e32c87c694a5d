"""Calibrate the finite-lead oracle against the continuum unbiased current.

Runs the filtered-level junction at gamma in {0.3, 1, 3} for M in
{100, 200, 400, 800} lead modes and records the raw relative error together
with the first-order Richardson estimate 2 J(2M) - J(M).  The output table
(oracle_richardson.csv next to this file) fixes the tolerance used by the
acceptance test: the error is first order in 1/M, so the raw M = 400 value is
still several percent off while the extrapolated 400/200 estimate is within
1%.

Usage: python3 tests/calibration/oracle_richardson.py [--max-modes 800]
"""
import argparse
import csv
import time
from pathlib import Path

from monitored_transport import filter_level_junction, transport
from monitored_transport.oracle import oracle_transport

GAMMAS = (0.3, 1.0, 3.0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-modes", type=int, default=800)
    ap.add_argument("--out", default=str(Path(__file__).with_suffix(".csv")))
    args = ap.parse_args()
    modes = [m for m in (100, 200, 400, 800) if m <= args.max_modes]

    rows = []
    for g in GAMMAS:
        j = filter_level_junction(g)
        ref = transport(j).through_current
        vals = {}
        for M in modes:
            t0 = time.perf_counter()
            oc, _ = oracle_transport(j, M)
            vals[M] = oc.current(1, 0)
            rich = 2 * vals[M] - vals[M // 2] if M // 2 in vals else float("nan")
            rows.append(dict(
                gamma=g, modes=M, J0_continuum=ref, J0_oracle=vals[M],
                rel_error=vals[M] / ref - 1, J0_richardson=rich, rel_error_richardson=rich / ref - 1,
                mismatch=oc.mismatch, seconds=round(time.perf_counter() - t0, 1),
            ))
            print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in rows[-1].items()),
                  flush=True)

    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
