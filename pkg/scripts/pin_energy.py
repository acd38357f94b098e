"""Find the energy with a given rotation number and run the reduction there.

Used to pin the end-to-end energy of the acceptance suite:
    python scripts/pin_energy.py --lam 1e-3 --rho 0.2505
"""

import argparse
import json

from cocycle_reduce.scheme import rotations_reduce
from cocycle_reduce.sweep import RunConfig, energy_for_rho


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=1e-3)
    ap.add_argument("--alpha", default="golden")
    ap.add_argument("--rho", type=float, required=True, help="target rotation number in (0, 1/2)")
    args = ap.parse_args(argv)

    cfg = RunConfig(alpha=args.alpha, potential=[0.0, args.lam])
    E = energy_for_rho(cfg, args.rho)
    rep = rotations_reduce(cfg.cocycle(E))
    print(
        json.dumps(
            {
                "E": repr(E),
                "rho": rep.rho,
                "outcome": rep.outcome.value,
                "steps": rep.steps,
                "final_defect": rep.final_defect,
                "B_distance": rep.B_distance,
                "message": rep.message,
            },
            indent=1,
        )
    )


if __name__ == "__main__":
    main()
