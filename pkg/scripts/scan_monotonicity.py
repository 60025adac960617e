"""Scan the apsidal angle over the admissible ell range and report monotonicity.

Example: python scripts/scan_monotonicity.py --energies -1 0 1 --points 50
"""

import argparse

from apsis.apsidal import scan
from apsis.central_force import PotentialSpec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.0, help="0 selects the logarithmic potential")
    ap.add_argument("--energies", type=float, nargs="+", default=[-1.0, 0.0, 1.0])
    ap.add_argument("--points", type=int, default=50)
    args = ap.parse_args()
    spec = PotentialSpec.from_alpha(args.alpha)
    for E in args.energies:
        res = scan(spec, E, args.points)
        first, last = res.rows[0], res.rows[-1]
        print(f"E={E:+.3f}  angle {first.angle:.9f} -> {last.angle:.9f}  "
              f"max dAngle/dq {max(r.d_angle_dq for r in res.rows):+.3e}  "
              f"failed rows {len(res.failed_rows)}  {'increasing' if res.increasing else 'NOT increasing'}")


if __name__ == "__main__":
    main()
