import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from oracles import accepted_words
from seqcover.model import (
    Alphabet, ModelError, TestModel, WalkError, count_traces, enumerate_traces, format_pool,
    generate_pool, load_model, random_walk, read_pool, serialize_model,
)


def single_path():
    return TestModel(["a", "b", "c"], ["s0", "s1", "s2", "s3"], "s0", ["s3"],
                     [("s0", "a", "s1"), ("s1", "b", "s2"), ("s2", "c", "s3")])


def test_load_minimal_model():
    m = load_model('{"alphabet": ["a"], "states": ["s0", "s1"], "initial": "s0",'
                   ' "accepting": ["s1"], "transitions": [{"from": "s0", "event": "a", "to": "s1"}]}')
    assert len(m.transitions) == 1 and len(m.alphabet) == 1
    assert m.accepts(("a",)) and not m.accepts(())


def test_undeclared_event_rejected():
    with pytest.raises(ModelError, match="undeclared event 'x'"):
        TestModel(["a"], ["s0", "s1"], "s0", ["s1"], [("s0", "x", "s1")])


def test_unreachable_state_rejected():
    with pytest.raises(ModelError, match="unreachable"):
        TestModel(["a"], ["s0", "s1", "s2"], "s0", ["s1"], [("s0", "a", "s1")])


def test_parse_error_has_location():
    with pytest.raises(ModelError, match="line 2"):
        load_model('{"alphabet": ["a"],\n "states": [}')


def test_alphabet_validation():
    with pytest.raises(ModelError):
        Alphabet(())
    with pytest.raises(ModelError):
        Alphabet(("a", "a"))


def test_bundled_model_has_eleven_events(abp_model):
    assert len(abp_model.alphabet) == 11


def test_single_path_walk_is_deterministic():
    m = single_path()
    for seed in range(20):
        assert random_walk(m, random.Random(seed), 10) == ("a", "b", "c")


def test_two_branch_walk_frequencies():
    m = TestModel(["a", "b"], ["s", "t", "u"], "s", ["t", "u"], [("s", "a", "t"), ("s", "b", "u")])
    rng = random.Random(3)
    counts = Counter(random_walk(m, rng, 5) for _ in range(10_000))
    for trace in (("a",), ("b",)):
        assert abs(counts[trace] / 10_000 - 0.5) <= 0.02


def test_walk_retry_budget():
    m = TestModel(["a"], ["s0", "s1", "s2", "s3"], "s0", ["s3"],
                  [("s0", "a", "s1"), ("s1", "a", "s2"), ("s2", "a", "s3")])
    with pytest.raises(WalkError, match="retry budget"):
        random_walk(m, random.Random(0), 2)


def test_pool_dedup_stats():
    pool = generate_pool(single_path(), 3, 10, seed=1)
    assert len(pool) == 1 and pool.duplicates == 2 and pool.walks == 3


def test_pool_on_branching_model():
    m = TestModel(["a", "b"], ["s"], "s", ["s"], [("s", "a", "s"), ("s", "b", "s")])
    pool = generate_pool(m, 30_000, 12, seed=5)
    assert 1 < len(pool) < 30_000
    assert len(set(pool.cases)) == len(pool)


def test_pool_is_deterministic_and_valid(abp_model):
    a = generate_pool(abp_model, 500, 30, seed=3)
    b = generate_pool(abp_model, 500, 30, seed=3)
    assert a == b
    assert all(abp_model.accepts(t) for t in a)


def test_count_traces_examples():
    assert count_traces(single_path(), 10) == 1
    full = TestModel(["a", "b"], ["r"] + [f"n{k}" for k in range(14)], "r", [f"n{k}" for k in range(14)],
                     [("r", "a", "n0"), ("r", "b", "n1")]
                     + [(f"n{k}", e, f"n{2 * k + 2 + j}") for k in range(6) for j, e in enumerate("ab")])
    assert count_traces(full, 3) == 2 + 4 + 8
    diamond = TestModel(["a", "b"], ["s", "l", "r", "t"], "s", ["t"],
                        [("s", "a", "l"), ("s", "b", "r"), ("l", "b", "t"), ("r", "a", "t")])
    assert count_traces(diamond, 2) == 2


def test_count_is_by_trace_not_path():
    # two paths spell the same word
    m = TestModel(["a"], ["s", "x", "y"], "s", ["x", "y"], [("s", "a", "x"), ("s", "a", "y")])
    assert count_traces(m, 3) == 1


def test_length_bound_limits_traces():
    m = TestModel(["a"], ["s"], "s", ["s"], [("s", "a", "s")], length_bound=3)
    assert count_traces(m, 10) == 4
    assert not m.accepts(("a",) * 4)


def test_pool_file_round_trip():
    cases = [("a", "b"), (), ("c",)]
    text = format_pool(cases, ["seed=1"])
    assert read_pool(text) == cases
    assert read_pool(format_pool([])) == []


@st.composite
def small_models(draw):
    alphabet = ("a", "b")[: draw(st.integers(1, 2))]
    n = draw(st.integers(1, 5))
    states = [f"q{k}" for k in range(n)]
    edges = draw(st.lists(st.tuples(st.sampled_from(states), st.sampled_from(alphabet), st.sampled_from(states)),
                          max_size=10, unique=True))
    reach, todo = {"q0"}, ["q0"]
    while todo:
        s = todo.pop()
        for a, _, b in edges:
            if a == s and b not in reach:
                reach.add(b)
                todo.append(b)
    edges = [e for e in edges if e[0] in reach]
    keep = [s for s in states if s in reach]
    accepting = draw(st.lists(st.sampled_from(keep), unique=True))
    return TestModel(alphabet, keep, "q0", accepting, edges)


@settings(max_examples=150, deadline=None)
@given(small_models(), st.integers(0, 6))
def test_count_matches_brute_force(model, max_len):
    brute = accepted_words(model, max_len)
    assert count_traces(model, max_len) == len(brute)
    assert sorted(enumerate_traces(model, max_len)) == sorted(brute)


@settings(max_examples=100, deadline=None)
@given(small_models())
def test_serialize_round_trip(model):
    assert load_model(serialize_model(model)) == model


@settings(max_examples=60, deadline=None)
@given(small_models(), st.integers(0, 1000))
def test_walks_are_accepted_traces(model, seed):
    if not model.accepting:
        return
    try:
        trace = random_walk(model, random.Random(seed), 6)
    except WalkError:
        return
    assert model.accepts(trace)
