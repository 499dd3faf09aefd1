import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import beta_variance as exact_variance
from seqcover.risk import (
    BetaPrior, LossModel, RiskError, RiskState, UsageProfile, bug_likelihood, expected_loss,
    history_from_csv, history_to_csv, max_variance_series, replay, select_target,
)

IDX = [("a", "b"), ("b", "a"), ("a", "a")]


def test_one_pass_update():
    s = RiskState(IDX).observe([("a", "b")], True)
    p = s.prior(("a", "b"))
    assert (p.alpha, p.beta) == (2, 1)
    assert math.isclose(p.mean, 2 / 3)
    assert math.isclose(p.variance, 2 / 36)
    assert math.isclose(BetaPrior().variance, 1 / 12)


def test_bug_convention_swaps_roles():
    s = RiskState(IDX, convention="bug").observe([("a", "b")], True)
    p = s.prior(("a", "b"))
    assert (p.alpha, p.beta) == (1, 2)
    assert math.isclose(s.no_bug_mean()[0], 2 / 3)
    with pytest.raises(RiskError):
        RiskState(IDX, convention="other")


def test_unknown_index_rejected():
    with pytest.raises(RiskError, match="unknown index"):
        RiskState(IDX).observe([("z", "z")], True)


def test_likelihood_examples():
    s = RiskState(IDX)
    assert math.isclose(bug_likelihood(s, UsageProfile.uniform(IDX)).no_bug, 0.5)
    one = RiskState([("a",)])
    for _ in range(100):
        one.observe([("a",)], True)
    lk = bug_likelihood(one, UsageProfile({("a",): 1.0}, partition=True))
    assert math.isclose(lk.no_bug, 101 / 102) and math.isclose(lk.bug_risk, 1 / 102)
    assert lk.partition_valid
    heavy = bug_likelihood(s, UsageProfile({i: 0.4 for i in IDX}, partition=True))
    assert math.isclose(heavy.no_bug, 0.6) and not heavy.partition_valid


def test_expected_loss_examples():
    s = RiskState(IDX)
    prof = UsageProfile.uniform(IDX)
    assert expected_loss(s, prof, LossModel(default=0.0)) == 0
    assert math.isclose(expected_loss(RiskState([("a",)]), UsageProfile({("a",): 1.0}), LossModel({("a",): 10})), 5.0)
    s.observe(IDX[:2], False)
    base = LossModel({IDX[0]: 3, IDX[1]: 1}, default=2)
    double = LossModel({IDX[0]: 6, IDX[1]: 2}, default=4)
    assert math.isclose(2 * expected_loss(s, prof, base), expected_loss(s, prof, double))
    with pytest.raises(RiskError):
        LossModel(default=-1)


def test_reset():
    s = RiskState(IDX).observe(IDX, False).observe(IDX[:1], True)
    s.reset()
    assert np.allclose(s.no_bug_mean(), 0.5)
    again = s.copy().reset()
    assert (again.alpha == s.alpha).all() and (again.beta == s.beta).all()
    s.observe([IDX[1]], False)
    changed = np.flatnonzero(s.no_bug_mean() != 0.5)
    assert list(changed) == [1]


def test_select_target_cases():
    s = RiskState(IDX)
    assert select_target(s, IDX) == IDX[0]
    for _ in range(4):
        s.observe([IDX[0]], True)
        s.observe([IDX[1]], False)
    # IDX[2] is the only never-visited candidate
    for policy in ("no-bug-first", "max-risk", "max-variance"):
        assert select_target(s, IDX, policy=policy) == IDX[2]
    assert select_target(s, IDX[:2], policy="max-risk") == IDX[1]
    assert select_target(s, IDX[:2], policy="no-bug-first") == IDX[0]
    assert select_target(s, IDX[:2], LossModel({IDX[0]: 100}), policy="max-risk") == IDX[0]
    with pytest.raises(RiskError):
        select_target(s, [], policy="max-risk")
    with pytest.raises(RiskError):
        select_target(s, IDX, policy="greedy")


def test_series_examples():
    assert len(max_variance_series([], 0)) == 0
    series = max_variance_series([([("a",)], True), ([("a",)], True)], 0)
    assert np.allclose(series, [exact_variance(2, 1), exact_variance(3, 1)])
    with pytest.raises(RiskError, match="no index meets"):
        max_variance_series([([("a",)], True)], 5)


def test_running_qualification():
    hist = [([("a",)], True), ([("a",), ("b",)], False), ([("b",)], True)]
    run = max_variance_series(hist, 2, qualify="running")
    assert math.isnan(run[0])
    assert math.isclose(run[1], exact_variance(2, 2))
    final = max_variance_series(hist, 2)
    assert np.isfinite(final).all()


def test_json_and_csv_round_trips():
    s = RiskState(IDX, convention="bug").observe(IDX[:2], False)
    back = RiskState.from_json(s.to_json())
    assert back.indices == s.indices and back.convention == "bug"
    assert (back.alpha == s.alpha).all() and (back.beta == s.beta).all()
    hist = [(IDX[:2], True), ((), False), ((IDX[2],), False)]
    assert history_from_csv(history_to_csv(hist)) == [(tuple(h), p) for h, p in hist]


histories = st.lists(st.tuples(st.lists(st.sampled_from(IDX), unique=True), st.booleans()), max_size=40)


@settings(max_examples=200, deadline=None)
@given(histories, st.sampled_from(["pass", "bug"]))
def test_counts_and_variance_invariants(hist, conv):
    s = replay(hist, IDX, conv)
    hits = np.array([sum(i in h for h, _ in hist) for i in IDX])
    assert (s.counts() == hits).all()
    assert (s.variance() <= 1 / 12 + 1e-15).all()
    again = replay(hist, IDX, conv)
    assert (again.alpha == s.alpha).all() and (again.beta == s.beta).all()
    for k, (a, b) in enumerate(zip(s.alpha, s.beta)):
        assert math.isclose(s.variance()[k], exact_variance(int(a), int(b)), rel_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(histories, st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(0.1, 10))
def test_likelihood_linear_and_loss_scale_invariant(hist, w, c):
    s = replay(hist, IDX)
    prof = UsageProfile(dict(zip(IDX, w)))
    scaled = UsageProfile({i: c * x for i, x in zip(IDX, w)})
    assert math.isclose(bug_likelihood(s, scaled).no_bug, c * bug_likelihood(s, prof).no_bug, abs_tol=1e-12)
    loss = LossModel(dict(zip(IDX, w)))
    bigger = LossModel({i: c * x for i, x in zip(IDX, w)}, default=c)
    assert select_target(s, IDX, loss, "max-risk") == select_target(s, IDX, bigger, "max-risk")
