"""``seqcover`` command line.

Subcommands: ``pool``, ``generate``, ``cover``, ``bayes``, ``experiment`` and
``ttt-count``. Exit status is 0 on success, 1 when an experiment check
fails and 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import statistics
import sys
import tempfile
import time
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import boards
from .coverage import RankFitness, TestSuite, coverage_report, covers
from .criteria import CriterionError, consecutive_window, kuhn_higdon, load_criterion
from .evolve import GaParams, best_of_k_indices, evolve_indices, random_indices
from .model import ModelError, TestModel, WalkError, format_pool, generate_pool, load_model, read_pool
from .risk import RiskError, history_from_csv, history_to_csv, max_variance_series, replay, series_to_csv
from .sut import STANDARD_BUGS, BugError, detection_rate, failure_mask, load_bugs, sample_suites, simulate_history

DEFAULT_CRITERION = {"kind": "consecutive_window", "t": 2}
DEFAULT_MAX_LEN = 30


class UsageError(Exception):
    pass


def bundled_model_text() -> str:
    return resources.files("seqcover").joinpath("data/abp.json").read_text()


def threads() -> int:
    raw = os.environ.get("SEQCOVER_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"SEQCOVER_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def write_atomic(path: Optional[str], text: str) -> None:
    """Write via a temp file and rename; ``None`` or ``-`` means stdout."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {what} {path!r}: {e.strerror}") from None


def _model(args) -> TestModel:
    return load_model(_read(args.model, "model file") if args.model else bundled_model_text())


def _criterion(args, model: TestModel):
    spec = args.criteria
    if spec is None:
        return load_criterion(DEFAULT_CRITERION, model.alphabet.events)
    text = spec if spec.lstrip().startswith("{") else _read(spec, "criteria file")
    try:
        return load_criterion(json.loads(text), model.alphabet.events)
    except json.JSONDecodeError as e:
        raise CriterionError(f"criteria: line {e.lineno}, column {e.colno}: {e.msg}") from None


def _pool(args, model: TestModel) -> list:
    if getattr(args, "pool", None):
        return read_pool(_read(args.pool, "pool file"))
    if args.walks < 1:
        raise UsageError("--walks must be at least 1")
    return list(generate_pool(model, args.walks, args.max_len, args.seed).cases)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    out = io.StringIO()
    if rows:
        w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return out.getvalue()


def _ga_params(args, n: int, seed: int) -> GaParams:
    return GaParams(n=n, population_size=args.population, mutation_prob=args.mutation,
                    crossover_prob=args.crossover, tournament_k=args.tournament,
                    max_generations=args.generations, epsilon=args.epsilon,
                    convergence_window=args.window, elitism=args.elitism, seed=seed)


def cmd_pool(args) -> int:
    model = _model(args)
    if args.walks < 1:
        raise UsageError("--walks must be at least 1")
    pool = generate_pool(model, args.walks, args.max_len, args.seed)
    stats = f"walks={pool.walks} distinct={len(pool)} duplicates={pool.duplicates} retries={pool.retries} seed={pool.seed}"
    write_atomic(args.out, format_pool(pool.cases, [stats, f"max_len={args.max_len}"]))
    print(stats, file=sys.stderr)
    return 0


def cmd_generate(args) -> int:
    model = _model(args)
    family = _criterion(args, model)
    cases = _pool(args, model)
    if args.n < 1:
        raise UsageError("-n must be at least 1")
    if args.n > len(cases):
        raise UsageError(f"suite size {args.n} exceeds the pool size {len(cases)}")
    fitness = RankFitness(family, cases)
    start = time.perf_counter()
    log = None
    if args.method == "ga":
        chosen, log = evolve_indices(len(cases), _ga_params(args, args.n, args.seed), fitness)
    elif args.method == "best-of-k":
        chosen = best_of_k_indices(len(cases), args.n, fitness, args.k, args.seed)
    else:
        chosen = random_indices(len(cases), args.n, args.seed)
    seconds = time.perf_counter() - start
    suite = [cases[i] for i in chosen]
    r = fitness(chosen)
    header = [f"method={args.method} n={args.n} criterion={family.name} rank={r} seed={args.seed}"]
    write_atomic(args.out, format_pool(suite, header))
    if args.log and log is not None:
        write_atomic(args.log, log.to_csv())
    print(f"rank={r} of {len(family)} time={seconds:.3f}s" + (f" generations={log.generations} ({log.reason})" if log else ""),
          file=sys.stderr)
    return 0


def cmd_cover(args) -> int:
    model = _model(args)
    family = _criterion(args, model)
    suite = TestSuite.of(read_pool(_read(args.suite, "suite file")))
    bad = [t for t in suite if not model.accepts(t)]
    if bad:
        raise UsageError(f"suite contains a test the model rejects: {','.join(bad[0])}")
    report = coverage_report(family, suite, model, args.len_cap)
    if args.format == "json":
        data = json.loads(report.to_json())
        data["covers"] = covers(family, suite, model, args.len_cap) if report.feasible else False
        data["criterion"] = family.name
        data["seed"] = args.seed
        write_atomic(args.out, json.dumps(data, indent=1) + "\n")
    else:
        write_atomic(args.out, report.to_csv())
    ratio = f"{report.ratio_float:.6f}" if report.feasible else "undefined"
    print(f"covered={report.covered} feasible={report.feasible} ratio={ratio}" + (" (capped)" if report.capped else ""),
          file=sys.stderr)
    return 0


def cmd_bayes(args) -> int:
    model = _model(args)
    family = _criterion(args, model)
    if args.history:
        history = history_from_csv(_read(args.history, "history file"))
    else:
        if args.tests < 0:
            raise UsageError("--tests must be non-negative")
        bugs = load_bugs(_read(args.bugs, "bug file")) if args.bugs else list(STANDARD_BUGS)
        history = simulate_history(model, family, bugs, args.tests, args.seed, args.max_len)
    if args.save_history:
        write_atomic(args.save_history, history_to_csv(history))
    series = max_variance_series(history, args.min_coverage, family.indices, args.convention, args.qualify)
    final = replay(history, family.indices, args.convention)
    if args.snapshot:
        write_atomic(args.snapshot, final.to_json() + "\n")
    if args.format == "json":
        write_atomic(args.out, json.dumps({"seed": args.seed, "min_coverage": args.min_coverage,
                                           "max_variance": [None if np.isnan(v) else float(v) for v in series]}) + "\n")
    else:
        write_atomic(args.out, series_to_csv(series))
    tracked = int((final.counts() >= args.min_coverage).sum())
    end = f"{series[-1]:.3g}" if len(series) else "n/a"
    print(f"tests={len(history)} tracked_indices={tracked}/{len(family)} final_max_variance={end}", file=sys.stderr)
    return 0


def _mean_ci(values: Sequence[float]) -> tuple[float, float]:
    m = statistics.fmean(values)
    half = 1.96 * statistics.stdev(values) / len(values) ** 0.5 if len(values) > 1 else 0.0
    return m, half


def rank_table(cases, families, sizes, runs: int, seed: int, k: int = 1000, params=None) -> list[dict]:
    """Mean rank and median time per (criterion, method, n), in the layout of a method comparison table."""
    rows = []
    for family in families:
        fitness = RankFitness(family, cases)
        for method in ("ga", "best-of-k", "random"):
            for n in sizes:
                ranks, times = [], []
                for rep in range(runs):
                    s = seed * 1_000_003 + rep
                    t0 = time.perf_counter()
                    if method == "ga":
                        base = params or GaParams(n=n)
                        chosen = evolve_indices(len(cases), GaParams(**{**base.__dict__, "n": n, "seed": s}), fitness)[0]
                    elif method == "best-of-k":
                        chosen = best_of_k_indices(len(cases), n, fitness, k, s)
                    else:
                        chosen = random_indices(len(cases), n, s)
                    times.append(time.perf_counter() - t0)
                    ranks.append(fitness(chosen))
                mean, half = _mean_ci(ranks)
                rows.append({"criterion": family.name, "method": method, "n": n, "runs": runs,
                             "rank_mean": round(mean, 4), "rank_ci95": round(half, 4),
                             "time_median_s": round(statistics.median(times), 5)})
    return rows


def catch_table(cases, families, bugs, n: int, repetitions: int, seed: int, params=None) -> list[dict]:
    """Detection probability per (bug, method); optimized suites are shared across bugs."""
    masks = {b.name: failure_mask(cases, [b]) for b in bugs}
    methods = [("random", None)] + [(f.name, f) for f in families]
    suites = {}
    for label, family in methods:
        if family is None:
            suites[label] = sample_suites(len(cases), "random", None, n, repetitions, seed)
        else:
            suites[label] = sample_suites(len(cases), "ga", RankFitness(family, cases), n, repetitions, seed,
                                          params=params, workers=threads())
    return [{"method": label, "bug": b.name, "n": n, "repetitions": repetitions,
             "probability": round(detection_rate(suites[label], masks[b.name]), 4)}
            for b in bugs for label, _ in methods]


def check_rank_ordering(rows: list[dict], criterion: str) -> list[str]:
    """GA > best-of-k > random with disjoint 95% intervals, per size."""
    problems = []
    by = {(r["method"], r["n"]): r for r in rows if r["criterion"] == criterion}
    for n in sorted({r["n"] for r in rows}):
        ga, bk, rd = by[("ga", n)], by[("best-of-k", n)], by[("random", n)]
        for hi, lo in ((ga, bk), (bk, rd)):
            if not hi["rank_mean"] - hi["rank_ci95"] > lo["rank_mean"] + lo["rank_ci95"]:
                problems.append(f"n={n}: {hi['method']} {hi['rank_mean']}±{hi['rank_ci95']} "
                                f"does not clear {lo['method']} {lo['rank_mean']}±{lo['rank_ci95']}")
    return problems


def check_catch_ordering(rows: list[dict], strong: str, weak: str, margin: float = 0.05) -> list[str]:
    """``strong`` beats ``weak`` on every bug; ``weak`` is at least random minus ``margin``."""
    problems = []
    p = {(r["method"], r["bug"]): r["probability"] for r in rows}
    for bug in dict.fromkeys(r["bug"] for r in rows):
        if not p[(strong, bug)] > p[(weak, bug)]:
            problems.append(f"{bug}: {strong} {p[(strong, bug)]} not above {weak} {p[(weak, bug)]}")
        if p[(weak, bug)] < p[("random", bug)] - margin:
            problems.append(f"{bug}: {weak} {p[(weak, bug)]} below random {p[('random', bug)]} by more than {margin}")
    return problems


def cmd_experiment(args) -> int:
    model = _model(args)
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    if args.walks < 1:
        raise UsageError("--walks must be at least 1")
    cases = list(generate_pool(model, args.walks, args.max_len, args.seed).cases)
    events = model.alphabet.events
    families = [kuhn_higdon(events, 2), consecutive_window(events, 2)]
    problems: list[str] = []
    outputs = {}
    if args.table in ("ranks", "all"):
        rows = rank_table(cases, families, args.sizes, args.reps, args.seed, args.k)
        outputs["ranks"] = rows
        problems += check_rank_ordering(rows, families[1].name)
    if args.table in ("catch", "all"):
        bugs = load_bugs(_read(args.bugs, "bug file")) if args.bugs else list(STANDARD_BUGS)
        rows = catch_table(cases, families, bugs, args.catch_n, args.reps, args.seed)
        outputs["catch"] = rows
        problems += check_catch_ordering(rows, families[1].name, families[0].name)
    for name, rows in outputs.items():
        target = None if args.out is None else str(Path(args.out) / f"{name}.{args.format}")
        write_atomic(target, _table(rows, args.format))
    for p in problems:
        print(f"check failed: {p}", file=sys.stderr)
    return 1 if args.check and problems else 0


def cmd_ttt_count(args) -> int:
    if args.n < 1:
        raise UsageError("-n must be at least 1")
    stats = {"n": args.n, **boards.game_statistics(args.n, args.budget)}
    if args.format == "json":
        write_atomic(args.out, json.dumps(stats, indent=1) + "\n")
    else:
        write_atomic(args.out, _table([stats], "csv"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model file (default: bundled alternating-bit protocol)")
    common.add_argument("--criteria", help="criterion spec file or inline JSON (default: consecutive pairs)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="csv")

    walks = argparse.ArgumentParser(add_help=False)
    walks.add_argument("--walks", type=int, default=50_000, help="random walks for the pool")
    walks.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)

    ga = argparse.ArgumentParser(add_help=False)
    d = GaParams(n=1)
    ga.add_argument("--population", type=int, default=d.population_size)
    ga.add_argument("--mutation", type=float, default=d.mutation_prob)
    ga.add_argument("--crossover", type=float, default=d.crossover_prob)
    ga.add_argument("--tournament", type=int, default=d.tournament_k)
    ga.add_argument("--generations", type=int, default=d.max_generations)
    ga.add_argument("--epsilon", type=float, default=d.epsilon)
    ga.add_argument("--window", type=int, default=d.convergence_window)
    ga.add_argument("--elitism", type=int, default=d.elitism)

    parser = argparse.ArgumentParser(prog="seqcover", description="Combinatorial sequence coverage toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", parents=[common, walks], help="generate a pool of valid tests")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("generate", parents=[common, walks, ga], help="build a high-rank suite")
    p.add_argument("--pool", help="pool file (default: generate one from the model)")
    p.add_argument("--method", choices=("ga", "best-of-k", "random"), default="ga")
    p.add_argument("-n", type=int, default=10, help="suite size")
    p.add_argument("-k", type=int, default=1000, help="samples for best-of-k")
    p.add_argument("--log", help="write the evolution log CSV here")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cover", parents=[common], help="coverage ratio of a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--len-cap", type=int, help="search depth cap for feasibility on unbounded cyclic models")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("bayes", parents=[common], help="risk estimates and max-variance series")
    p.add_argument("--history", help="history CSV (test_id, indices, passed); default: simulate")
    p.add_argument("--tests", type=int, default=50_000, help="tests to simulate")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.add_argument("--bugs", help="bug spec JSON (default: the four standard protocol bugs)")
    p.add_argument("--min-coverage", type=int, default=1000)
    p.add_argument("--qualify", choices=("final", "running"), default="final")
    p.add_argument("--convention", choices=("pass", "bug"), default="pass")
    p.add_argument("--snapshot", help="write the final posterior JSON here")
    p.add_argument("--save-history", help="write the simulated history CSV here")
    p.set_defaults(func=cmd_bayes)

    p = sub.add_parser("experiment", parents=[common, walks], help="method comparison and bug-catch tables")
    p.add_argument("--table", choices=("ranks", "catch", "all"), default="all")
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20])
    p.add_argument("--catch-n", type=int, default=10)
    p.add_argument("-k", type=int, default=1000)
    p.add_argument("--bugs", help="bug spec JSON (default: the four standard protocol bugs)")
    p.add_argument("--check", action="store_true", help="exit 1 if an ordering check fails")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("ttt-count", parents=[common], help="tic-tac-toe game and symmetry-class counts")
    p.add_argument("-n", type=int, default=3, help="board side")
    p.add_argument("--budget", type=int, default=5_000_000, help="node budget for the game-tree walk")
    p.set_defaults(func=cmd_ttt_count)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads()
        return args.func(args)
    except (UsageError, ModelError, CriterionError, RiskError, BugError, WalkError,
            boards.EnumerationBudgetExceeded, ValueError) as e:
        print(f"seqcover {args.command}: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"seqcover {args.command}: error: {e.strerror}: {e.filename}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
