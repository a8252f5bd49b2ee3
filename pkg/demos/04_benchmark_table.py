"""Small recall/accuracy sweep, printed as the usual text table.

Three seeds and two window lengths keep this quick. The numbers quoted in
the test suite come from 20-seed sweeps over lengths 10, 20, 30, and 100,
which take a few minutes; run with FULL=1 to reproduce those.
"""

import os

from dwgc import eval as evaluation
from dwgc.synth import ArSimConfig

FULL = os.environ.get("FULL") == "1"


def main():
    lengths = (10, 20, 30, 100) if FULL else (10, 20)
    n_seeds = 20 if FULL else 3

    for method in ("naive_dwgc", "dwgc"):
        report = evaluation.sweep(
            ArSimConfig(),
            method=method,
            window_lengths=lengths,
            n_seeds=n_seeds,
        )
        print(evaluation.report_to_text(report))
        print()


if __name__ == "__main__":
    main()
