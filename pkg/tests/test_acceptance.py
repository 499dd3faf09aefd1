"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script.
"""
import json
import math
import random
import statistics
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import accepted_words, beta_variance, regex_for, regex_match, two_way_rank, words
from seqcover import boards
from seqcover.cli import main as cli_main
from seqcover.coverage import RankFitness, coverage_report, rank
from seqcover.criteria import (
    classic_tway, consecutive_window, exact_once, kuhn_higdon, message_order, relax, transaction_safety,
)
from seqcover.evolve import GaParams, best_of_k_indices, evolve_indices, random_indices
from seqcover.model import TestModel
from seqcover.risk import BetaPrior, RiskState, max_variance_series
from seqcover.sut import STANDARD_BUGS, detection_rate, failure_mask, sample_suites, simulate_history

# pinned tolerances
TTT = {"games": 255_168, "classes": 26_830, "permutations": 362_880, "first_move_classes": 3}
KH_BOUND = 121
KH_TARGET_RANK = 119
KH_TARGET_FRACTION = 0.90
SEEDED_RUNS = 30
CATCH_REPS = 1000
CATCH_N = 10
KH_RANDOM_MARGIN = 0.05
TESTS_SIMULATED = 50_000
MIN_COVERAGE = 1000
WARMUP = 1000
STEP_SLACK = 1e-4
FINAL_VARIANCE = 1e-3
VARIANCE_TOL = 1e-12


def test_1_tic_tac_toe_counts(report, capsys):
    start = time.perf_counter()
    assert cli_main(["ttt-count", "--format", "json"]) == 0
    got = json.loads(capsys.readouterr().out)
    seconds = time.perf_counter() - start
    ok = all(got[k] == v for k, v in TTT.items()) and seconds < 10
    report(1, "tic-tac-toe oracle", ok,
           f"games={got['games']} classes={got['classes']} 9!={got['permutations']} "
           f"first-move classes={got['first_move_classes']} in {seconds:.1f}s")
    assert ok


def test_2_rank_bound(report, abp_model, abp_pool):
    family = kuhn_higdon(abp_model.alphabet.events, 2)
    fitness = RankFitness(family, abp_pool.cases)
    assert len(abp_model.alphabet) == 11
    # the bound holds for every single test and for random suites of any size
    single_max = int(fitness.batch(np.arange(len(abp_pool))[:, None]).max())
    rng = np.random.default_rng(0)
    suite_max = max(fitness(rng.choice(len(abp_pool), size=n, replace=False))
                    for n in (1, 5, 20, 100, 1000) for _ in range(20))
    whole = fitness(np.arange(len(abp_pool)))
    ranks = [fitness(evolve_indices(len(abp_pool), GaParams(n=20, seed=s), fitness)[0]) for s in range(SEEDED_RUNS)]
    hit = sum(r >= KH_TARGET_RANK for r in ranks) / SEEDED_RUNS
    ok = max(single_max, suite_max, whole, *ranks) <= KH_BOUND and hit >= KH_TARGET_FRACTION
    report(2, "Kuhn-Higdon rank bound", ok,
           f"max rank seen {max(single_max, suite_max, whole, *ranks)} <= {KH_BOUND}; "
           f"GA n=20 reaches >= {KH_TARGET_RANK} in {hit:.0%} of {SEEDED_RUNS} runs (mean {statistics.fmean(ranks):.3f})")
    assert ok


def _ci(values):
    m = statistics.fmean(values)
    return m, 1.96 * statistics.stdev(values) / math.sqrt(len(values))


def test_3_method_ordering(report, abp_model, abp_pool):
    family = consecutive_window(abp_model.alphabet.events, 2)
    fitness = RankFitness(family, abp_pool.cases)
    size = len(abp_pool)
    details, ok = [], True
    for n in (5, 10, 20):
        ga = [fitness(evolve_indices(size, GaParams(n=n, seed=s), fitness)[0]) for s in range(SEEDED_RUNS)]
        bk = [fitness(best_of_k_indices(size, n, fitness, 1000, s)) for s in range(SEEDED_RUNS)]
        rd = [fitness(random_indices(size, n, s)) for s in range(SEEDED_RUNS)]
        (g, gh), (b, bh), (r, rh) = _ci(ga), _ci(bk), _ci(rd)
        ok &= g - gh > b + bh and b - bh > r + rh
        details.append(f"n={n}: GA {g:.1f}±{gh:.1f} > best-of-1K {b:.1f}±{bh:.1f} > random {r:.1f}±{rh:.1f}")
    report(3, "method ordering on consecutive pairs", ok, "; ".join(details))
    assert ok


def test_4_bug_catch_ordering(report, abp_model, abp_pool):
    events = abp_model.alphabet.events
    cases = abp_pool.cases
    suites = {
        "random": sample_suites(len(cases), "random", None, CATCH_N, CATCH_REPS, seed=1),
        "kuhn-higdon": sample_suites(len(cases), "ga", RankFitness(kuhn_higdon(events, 2), cases),
                                     CATCH_N, CATCH_REPS, seed=1),
        "consecutive": sample_suites(len(cases), "ga", RankFitness(consecutive_window(events, 2), cases),
                                     CATCH_N, CATCH_REPS, seed=1),
    }
    details, ok = [], True
    for bug in STANDARD_BUGS:
        fails = failure_mask(cases, [bug])
        p = {m: detection_rate(s, fails) for m, s in suites.items()}
        row_ok = p["consecutive"] > p["kuhn-higdon"] and p["kuhn-higdon"] >= p["random"] - KH_RANDOM_MARGIN
        ok &= row_ok
        details.append(f"{bug.name}: {p['consecutive']:.3f} > {p['kuhn-higdon']:.3f} ~>= {p['random']:.3f}")
    report(4, "bug-catch ordering (consecutive > KH ~>= random)", ok, "; ".join(details))
    assert ok


def test_5_variance_convergence(report, abp_model):
    family = consecutive_window(abp_model.alphabet.events, 2)
    history = simulate_history(abp_model, family, STANDARD_BUGS, TESTS_SIMULATED, seed=11)
    series = max_variance_series(history, MIN_COVERAGE, family.indices)
    tail = series[WARMUP - 1:]
    rises = np.diff(tail)
    worst = float(rises.max()) if len(rises) else 0.0
    ok = worst <= STEP_SLACK and series[-1] <= FINAL_VARIANCE
    failed = sum(not p for _, p in history)
    report(5, "max-variance convergence", ok,
           f"{TESTS_SIMULATED} tests ({failed} failing), largest step increase after {WARMUP} = {worst:.2e} "
           f"(<= {STEP_SLACK}), final max variance {series[-1]:.2e} (<= {FINAL_VARIANCE})")
    assert ok


def test_6_beta_arithmetic(report):
    u = BetaPrior()
    ok = u.mean == 0.5 and abs(u.variance - 1 / 12) <= VARIANCE_TOL
    state = RiskState(["x"])
    rng = random.Random(6)
    outcomes = [rng.random() < 0.7 for _ in range(500)]
    for passed in outcomes:
        state.observe(["x"], passed)
    ok &= int(state.alpha[0]) - 1 == sum(outcomes) and int(state.beta[0]) - 1 == len(outcomes) - sum(outcomes)
    worst = 0.0
    for _ in range(1000):
        a, b = rng.uniform(1, 1e4), rng.uniform(1, 1e4)
        closed = beta_variance(a, b)
        worst = max(worst, abs(BetaPrior(a, b).variance - closed))
        mean = a / (a + b)
        worst = max(worst, abs(mean * (1 - mean) / (a + b + 1) - closed))
    ok &= worst <= VARIANCE_TOL
    report(6, "Beta arithmetic", ok,
           f"Beta(1,1) mean {u.mean} var {u.variance:.6f}; alpha-1 = {sum(outcomes)} passes; "
           f"max |V - closed form| over 1000 pairs = {worst:.1e}")
    assert ok


def _families(alphabet):
    out = []
    for t in (1, 2):
        for make, kind in ((kuhn_higdon, "kuhn-higdon"), (exact_once, "exact-once"),
                           (consecutive_window, "consecutive-window")):
            out.append((make(alphabet, t), kind, {}))
        for n in range(t, 6):
            out.append((classic_tway(alphabet, n, t), "classic-tway", {"n": n}))
    for make, kind in ((kuhn_higdon, "kuhn-higdon"), (consecutive_window, "consecutive-window")):
        base = make(alphabet, 2)
        blocks = [[i for i in base.indices if i[0] == e] for e in alphabet]
        out.append((relax(base, blocks), "relaxed", {"base_kind": kind}))
    for k in range(1, len(alphabet)):
        first, second = alphabet[:k], alphabet[k:]
        out.append((message_order(first, second), "message-order", {}))
        out.append((transaction_safety(first, second), "transaction-safety",
                    {"debits": first, "credits": second}))
    return out


def _toy_models(alphabet):
    """A few bounded models over ``alphabet``, including a cyclic one."""
    a = alphabet
    yield TestModel(a, ["s"], "s", ["s"], [("s", e, "s") for e in a], length_bound=5)
    yield TestModel(a, ["s", "t"], "s", ["t"],
                    [("s", a[0], "t"), ("t", a[-1], "s")] + [("t", e, "t") for e in a[1:-1]], length_bound=5)
    yield TestModel(a, ["s", "t", "u"], "s", ["u", "s"],
                    [("s", a[-1], "t"), ("t", a[0], "u"), ("u", a[0], "t")], length_bound=4)


def test_7_oracle_equivalence(report):
    start = time.perf_counter()
    decisions = mismatches = ratio_checks = ratio_mismatches = 0
    rng = random.Random(7)
    for size in (1, 2, 3):
        alphabet = tuple("xyz"[:size])
        all_words = list(words(alphabet, 5))
        for family, kind, kw in _families(alphabet):
            for index in family.indices:
                pattern = regex_for(kind, index, alphabet, **kw)
                for w in all_words:
                    decisions += 1
                    expected = regex_match(pattern, w, alphabet)
                    if family.matches(index, w) != expected or (index in family.covered(w)) != expected:
                        mismatches += 1
            for model in _toy_models(alphabet):
                p = accepted_words(model, 5)
                if not p:
                    continue
                suite = rng.sample(p, min(len(p), 3))
                patterns = {i: regex_for(kind, i, alphabet, **kw) for i in family.indices}
                feasible = {i for i in family.indices if any(regex_match(patterns[i], w, alphabet) for w in p)}
                hit = {i for i in feasible if any(regex_match(patterns[i], w, alphabet) for w in suite)}
                got = coverage_report(family, suite, model)
                ratio_checks += 1
                if got.feasible != len(feasible) or (feasible and got.ratio != Fraction(len(hit), len(feasible))):
                    ratio_mismatches += 1
    seconds = time.perf_counter() - start
    ok = mismatches == 0 and ratio_mismatches == 0 and seconds < 60
    report(7, "matchers and coverage ratio vs brute force", ok,
           f"{decisions} matcher decisions, {mismatches} mismatches; {ratio_checks} coverage ratios, "
           f"{ratio_mismatches} mismatches; {seconds:.1f}s")
    assert ok


def test_8_positional_pair_rank(report, abp_model, abp_pool):
    family = kuhn_higdon(abp_model.alphabet.events, 2)
    fitness = RankFitness(family, abp_pool.cases)
    rng = np.random.default_rng(8)
    mismatches = 0
    for k in range(1000):
        n = int(rng.integers(1, 21))
        chosen = rng.choice(len(abp_pool), size=n, replace=False)
        suite = [abp_pool.cases[i] for i in chosen]
        expected = two_way_rank(suite)
        if rank(family, suite) != expected or fitness(chosen) != expected:
            mismatches += 1
    ok = mismatches == 0
    report(8, "generic rank equals the positional-pair count", ok, f"1000 random suites, {mismatches} mismatches")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
