"""Run the reference sweeps in configs/ and print the aggregated curves.

    python scripts/run_sweeps.py [--out results] [--workers 4] [--draws N]
"""

import argparse
from dataclasses import replace
from pathlib import Path

from jbps import harness
from jbps.model import Method

CONFIGS = ("sinr_sweep", "sinr_sweep_low_harvest", "harvest_sweep", "antenna_sweep")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="results")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--draws", type=int, help="override num_draws (quick look)")
    args = parser.parse_args()
    root = Path(__file__).resolve().parent.parent / "configs"
    for name in CONFIGS:
        config = harness.load_config(root / f"{name}.yaml")
        if args.draws:
            config = replace(config, num_draws=args.draws)
        records = harness.run_sweep(config, workers=args.workers)
        rows = harness.aggregate(records)
        out = Path(args.out) / name
        out.mkdir(parents=True, exist_ok=True)
        harness.write_csv(records, out / "records.csv")
        harness.write_csv(rows, out / "aggregate.csv")

        print(f"\n{name}: mean transmit power [dBm] vs {config.axis.value} ({config.num_draws} draws)")
        methods = [m for m in Method if m in config.methods]
        print(f"{config.axis.value:>12}" + "".join(f"{m.value:>11}" for m in methods))
        table = {(r.axis_value, r.method): r for r in rows}
        for v in config.values:
            cells = []
            for m in methods:
                p = table[(v, m)].mean_power_dbm
                cells.append(f"{'-':>11}" if p is None else f"{p:>11.3f}")
            print(f"{v:>12g}" + "".join(cells))


if __name__ == "__main__":
    main()
