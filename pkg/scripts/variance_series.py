"""Max posterior variance over well-covered indices as tests accumulate.

Simulates random walks against the bug-armed protocol, tracks one Beta
posterior per consecutive event pair and writes the series as CSV. A short
text summary (value every ``--every`` steps) goes to stdout.

    python scripts/variance_series.py [--tests 50000] [--min-coverage 1000] [--out variance.csv]
"""
import argparse
from pathlib import Path

from seqcover import bundled_abp_model
from seqcover.cli import write_atomic
from seqcover.criteria import consecutive_window
from seqcover.risk import max_variance_series, series_to_csv
from seqcover.sut import STANDARD_BUGS, simulate_history


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tests", type=int, default=50_000)
    parser.add_argument("--min-coverage", type=int, default=1000)
    parser.add_argument("--qualify", choices=["final", "running"], default="final")
    parser.add_argument("--convention", choices=["pass", "bug"], default="pass")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--every", type=int, default=5000)
    parser.add_argument("--out", type=Path, default=Path("variance.csv"))
    args = parser.parse_args()

    model = bundled_abp_model()
    family = consecutive_window(model.alphabet.events, 2)
    history = simulate_history(model, family, STANDARD_BUGS, args.tests, args.seed)
    failing = sum(not passed for _, passed in history)
    series = max_variance_series(history, args.min_coverage, family.indices, args.convention, args.qualify)
    write_atomic(str(args.out), series_to_csv(series))
    print(f"{args.tests} tests, {failing} failing -> {args.out}")
    for step in range(args.every, len(series) + 1, args.every):
        print(f"{step:>7}  {series[step - 1]:.3e}")


if __name__ == "__main__":
    main()
