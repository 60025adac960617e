"""Replay the interval computations and write a JSON certificate.

Example: python scripts/replay_proof.py --coarse --certificate cert.json
"""

import argparse

from apsis.verified import (
    default_workers,
    verify_first_grid,
    verify_second_grid,
    verify_tail_region,
    write_certificate,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--coarse", action="store_true", help="second grid at ds=0.02, dq=0.002")
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--certificate", default="apsis_certificate.json")
    args = ap.parse_args()
    ds, dq = (0.02, 0.002) if args.coarse else (2e-3, 2e-4)
    reports = {
        "tail_region": verify_tail_region(),
        "first_grid": verify_first_grid(),
        "second_grid": verify_second_grid(ds, dq, workers=args.workers),
    }
    for name, rep in reports.items():
        print(f"{'PASS' if rep.passed else 'FAIL'} {name:12s} min_lo={rep.min_lo:.6f} "
              f"cells={rep.cells} time={rep.elapsed_ms / 1e3:.2f}s worst={rep.worst_cell}")
    payload = write_certificate(args.certificate, reports)
    print(f"overall {'PASS' if payload['pass'] else 'FAIL'}; certificate {args.certificate}")


if __name__ == "__main__":
    main()
