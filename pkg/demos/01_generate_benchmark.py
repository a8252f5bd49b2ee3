"""Generate the two synthetic benchmarks and eyeball their ground truth.

Writes ar_series.csv / nar_series.csv plus truth JSON next to this script
and prints a short summary of the planted causal events.
"""

import os

from dwgc.series import save_csv
from dwgc.synth import ArSimConfig, NarSimConfig, gen_ar, gen_nar, save_ground_truth

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "out")


def main():
    os.makedirs(OUT, exist_ok=True)

    ar_series, ar_truth = gen_ar(ArSimConfig(T=1000, lag="random", seed=0))
    save_csv(ar_series, os.path.join(OUT, "ar_series.csv"))
    save_ground_truth(ar_truth, os.path.join(OUT, "ar_truth.json"))
    print("linear pair:", ar_series.n_channels, "channels,", ar_series.length, "steps")
    print("  coupling lag:", ar_truth.lag)
    print("  impulses 1->2:", len(ar_truth.impulse_times_1to2))
    print("  impulses 2->1:", len(ar_truth.impulse_times_2to1))

    nar_series, nar_truth = gen_nar(NarSimConfig(T=1000, seed=0))
    save_csv(nar_series, os.path.join(OUT, "nar_series.csv"))
    save_ground_truth(nar_truth, os.path.join(OUT, "nar_truth.json"))
    print("nonlinear triple:", ", ".join(nar_series.channel_names))
    print("  gated episodes 1->2:", len(nar_truth.impulse_times_1to2))
    print("  gated episodes 2->1:", len(nar_truth.impulse_times_2to1))

    print("wrote series and truth files to", OUT)


if __name__ == "__main__":
    main()
