#!/usr/bin/env python3
"""Run the full benchmark study at desk scale.

Fits every applicable family (EC, LRC ranks, MC, UC) to all 14 sliced
benchmark functions over clustered sliced LHDs, and writes records.csv
and summary.csv. At the default 20 replications this takes on the
order of an hour on a laptop; pass --replications 100 --n-values 4 8
--test-size 1000 for the full-scale protocol.
"""

import argparse
import sys
import time

from mixedgp.bench import ExperimentConfig, run_experiment
from mixedgp.gpcore import FitOptions
from mixedgp.testbed import testbed_ids


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="desk_study_out", help="output directory")
    parser.add_argument("--replications", type=int, default=20)
    parser.add_argument("--n-values", type=int, nargs="+", default=[4, 8])
    parser.add_argument("--functions", nargs="+", default=None,
                        help="testbed ids (default: all 14)")
    parser.add_argument("--base-seed", type=int, default=1)
    parser.add_argument("--test-size", type=int, default=1000)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--n-starts", type=int, default=10)
    args = parser.parse_args(argv)

    cfg = ExperimentConfig(
        functions=tuple(args.functions or testbed_ids()),
        n_values=tuple(args.n_values),
        families=("auto",),
        replications=args.replications,
        base_seed=args.base_seed,
        test_size=args.test_size,
        fit_options=FitOptions(n_starts=args.n_starts),
    )
    n_cells = len(cfg.functions) * len(cfg.n_values) * cfg.replications
    print(f"running {n_cells} cells ({len(cfg.functions)} functions, "
          f"n in {list(cfg.n_values)}, {cfg.replications} replications) "
          f"with {args.jobs} job(s)")
    t0 = time.time()
    records = run_experiment(cfg, args.out, jobs=args.jobs)
    failed = sum(1 for r in records if r.status == "failed")
    print(f"done: {len(records)} records, {failed} failed fits, "
          f"{(time.time() - t0) / 60:.1f} min -> {args.out}/records.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
