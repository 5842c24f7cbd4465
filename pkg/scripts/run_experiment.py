"""Run a harness sweep and print the per-n summary.

    python scripts/run_experiment.py --out report.csv            # default sweep
    python scripts/run_experiment.py --config small.json --jobs 4
"""

import argparse
import time

from ktriangle import io as kio
from ktriangle.harness import ExperimentConfig, run_experiment, summarize


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", help="JSON file of ExperimentConfig fields")
    ap.add_argument("--out", default="report.csv")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict(kio.read_json(args.config)) if args.config else ExperimentConfig()
    t0 = time.time()
    report = run_experiment(cfg, jobs=args.jobs)
    kio.atomic_write(args.out, report.to_csv())
    kio.write_json(kio.sidecar_path(args.out), {"config": cfg.to_dict(), "seeds": report.seeds()})

    print(f"{'n':>6} {'rows':>5} {'error':>7} {'+-':>6} {'exceed':>7} {'+-':>6} {'psi1':>5} {'psi2':>5} {'psi3':>5}")
    for (n,), s in summarize(report).items():
        print(f"{n:>6} {s.count:>5} {s.error_rate:7.3f} {s.stderr(s.error_rate):6.3f} "
              f"{s.exceed_rate:7.3f} {s.stderr(s.exceed_rate):6.3f} {s.psi_counts[0]:>5} {s.psi_counts[1]:>5} "
              f"{s.psi_counts[2]:>5}")
    print(f"{len(report.rows)} rows in {time.time() - t0:.0f}s -> {args.out}")


if __name__ == "__main__":
    main()
