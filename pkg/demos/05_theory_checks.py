"""Numerical checks behind the window-length story.

Part 1 samples the noise cross terms that perturb the windowed F ratio and
shows their share shrinking as the window grows. Part 2 measures how often
the F test fires on truly causal windows, per window length.
"""

from dwgc import theory
from dwgc.eval import theorem1_check, theorem1_nondecreasing_within_se
from dwgc.synth import ArSimConfig


def cross_terms():
    print("cross-term share of the F numerator (95th percentile):")
    print(f"{'k':>6} {'sigma0=0.5':>12} {'sigma0=1.0':>12}")
    cells = theory.grid_summary([10, 30, 100], [0.5, 1.0], n_samples=20000, seed=0)
    by_k = {}
    for cell in cells:
        by_k.setdefault(cell.k, {})[cell.sigma0] = cell.p95_ratio
    for k in sorted(by_k):
        row = by_k[k]
        print(f"{k:>6} {row[0.5]:>12.4f} {row[1.0]:>12.4f}")


def f_trend():
    result = theorem1_check(
        ArSimConfig(T=600), window_lengths=(10, 20, 30), n_seeds=5
    )
    print("detection probability on causal windows:")
    for k in result.window_lengths:
        p = result.p_hat[k]
        shown = "n/a" if p is None else f"{p:.3f}"
        print(f"  k={k:>3}: {shown} ({result.n_causal[k]} causal windows)")
    print("non-decreasing within one pooled SE:", theorem1_nondecreasing_within_se(result))


if __name__ == "__main__":
    cross_terms()
    print()
    f_trend()
