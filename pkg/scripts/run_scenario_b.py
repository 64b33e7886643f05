#!/usr/bin/env python3
"""Regenerate the scenario B table (granularity sweep at the reference SNR).

Equivalent to ``frisim repro-b``.
"""

import argparse

from frisim.pipeline import SCENARIO_B_TRIALS, reproduce_scenario_b


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/scenario_b")
    parser.add_argument("--seed", type=int, default=7,
                        help="base seed for the estimation seed list")
    parser.add_argument("--trials", type=int, default=SCENARIO_B_TRIALS)
    args = parser.parse_args()
    tables = reproduce_scenario_b(args.out, base_seed=args.seed,
                                  trials=args.trials)
    print(f"scenario B written to {args.out} "
          f"({len(tables['sweep'].rows)} sweep rows)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
