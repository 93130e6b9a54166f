"""Wall time and iteration counts of single solves at K=4, N_t=8.

    python scripts/time_solves.py [--draws 20]
"""

import argparse
import time

import numpy as np

from jbps import ChannelConfig, Targets, generate_instance, solve_jbps_optimal, solve_sinr_only


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--draws", type=int, default=20)
    args = parser.parse_args()
    config = ChannelConfig(num_antennas=8)
    targets = Targets.uniform(4, 10.0, -10.0)
    times, steps, fp_iters = [], [], []
    for d in range(args.draws):
        instance = generate_instance(config, draw_index=d)
        t0 = time.perf_counter()
        sol = solve_jbps_optimal(instance, targets)
        times.append(time.perf_counter() - t0)
        steps.append(sol.info["relaxation"].info["newton_steps"])
        fp_iters.append(solve_sinr_only(instance, targets.sinr).iterations)
    print(f"SDR solve: max {max(times):.3f} s, mean {np.mean(times):.3f} s, Newton steps <= {max(steps)}")
    print(f"duality fixed point: iterations <= {max(fp_iters)}")


if __name__ == "__main__":
    main()
