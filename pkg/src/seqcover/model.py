"""Test models as finite labeled transition systems.

A :class:`TestModel` defines the set of valid test sequences: every path from
the initial state that ends in an accepting state, optionally bounded in
length. Pools of concrete tests are sampled from it with random walks.
"""
from __future__ import annotations

import json
import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

TestCase = tuple[str, ...]

STOP_RETRIES = 100


class ModelError(ValueError):
    """Raised for malformed or invalid model files."""


class WalkError(RuntimeError):
    """Raised when no accepting trace is found within the retry budget."""


@dataclass(frozen=True)
class Alphabet:
    events: tuple[str, ...]

    def __post_init__(self):
        if not self.events:
            raise ModelError("alphabet must contain at least one event")
        seen = set()
        for e in self.events:
            if not isinstance(e, str) or not e:
                raise ModelError(f"invalid event name {e!r}")
            if e in seen:
                raise ModelError(f"duplicate event {e!r} in alphabet")
            seen.add(e)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __contains__(self, event) -> bool:
        return event in self._index

    @property
    def _index(self) -> dict[str, int]:
        return _index_map(self.events)

    def index(self, event: str) -> int:
        return self._index[event]


@lru_cache(maxsize=None)
def _index_map(events: tuple[str, ...]) -> dict[str, int]:
    return {e: i for i, e in enumerate(events)}


@dataclass(frozen=True)
class TestModel:
    """Finite LTS over ``alphabet``; ``length_bound=None`` means unbounded."""

    __test__ = False  # not a pytest class
    alphabet: Alphabet
    states: tuple[str, ...]
    initial: str
    accepting: frozenset[str]
    transitions: tuple[tuple[str, str, str], ...]
    length_bound: Optional[int] = None
    _out: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.alphabet, (list, tuple)):
            object.__setattr__(self, "alphabet", Alphabet(tuple(self.alphabet)))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "transitions", tuple(tuple(t) for t in self.transitions))

        state_set = set(self.states)
        if len(state_set) != len(self.states):
            raise ModelError("duplicate state names")
        if self.initial not in state_set:
            raise ModelError(f"initial state {self.initial!r} is not a declared state")
        for s in self.accepting:
            if s not in state_set:
                raise ModelError(f"accepting state {s!r} is not a declared state")
        if self.length_bound is not None and (
            not isinstance(self.length_bound, int) or self.length_bound < 0
        ):
            raise ModelError(f"length_bound must be a natural number or null, got {self.length_bound!r}")

        out: dict[str, list[tuple[str, str]]] = {s: [] for s in self.states}
        for src, event, dst in self.transitions:
            if src not in state_set:
                raise ModelError(f"transition from undeclared state {src!r}")
            if dst not in state_set:
                raise ModelError(f"transition to undeclared state {dst!r}")
            if event not in self.alphabet:
                raise ModelError(f"transition {src!r} --{event}--> {dst!r} uses undeclared event {event!r}")
            out[src].append((event, dst))
        object.__setattr__(self, "_out", {s: tuple(v) for s, v in out.items()})

        reached = self.reachable()
        missing = [s for s in self.states if s not in reached]
        if missing:
            raise ModelError(f"unreachable states: {', '.join(missing[:5])}")

    def outgoing(self, state: str) -> tuple[tuple[str, str], ...]:
        return self._out[state]

    def reachable(self) -> set[str]:
        seen = {self.initial}
        todo = [self.initial]
        while todo:
            s = todo.pop()
            for _, dst in self._out[s]:
                if dst not in seen:
                    seen.add(dst)
                    todo.append(dst)
        return seen

    def step(self, states: frozenset[str], event: str) -> frozenset[str]:
        return frozenset(dst for s in states for e, dst in self._out[s] if e == event)

    def accepts(self, trace: Sequence[str]) -> bool:
        """Membership of ``trace`` in the model language (handles nondeterminism)."""
        if self.length_bound is not None and len(trace) > self.length_bound:
            return False
        current = frozenset([self.initial])
        for event in trace:
            current = self.step(current, event)
            if not current:
                return False
        return bool(current & self.accepting)

    def is_acyclic(self) -> bool:
        indeg = defaultdict(int)
        for _, _, dst in self.transitions:
            indeg[dst] += 1
        queue = deque(s for s in self.states if indeg[s] == 0)
        removed = 0
        while queue:
            s = queue.popleft()
            removed += 1
            for _, dst in self._out[s]:
                indeg[dst] -= 1
                if indeg[dst] == 0:
                    queue.append(dst)
        return removed == len(self.states)


@dataclass(frozen=True)
class TestPool:
    __test__ = False  # not a pytest class
    cases: tuple[TestCase, ...]
    walks: int
    duplicates: int
    retries: int
    seed: int

    def __len__(self) -> int:
        return len(self.cases)

    def __getitem__(self, i):
        return self.cases[i]

    def __iter__(self):
        return iter(self.cases)


def load_model(text: str) -> TestModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ModelError("model file must contain a JSON object")
    for key in ("alphabet", "states", "initial", "accepting", "transitions"):
        if key not in data:
            raise ModelError(f"missing field {key!r}")
    transitions = []
    for k, t in enumerate(data["transitions"]):
        try:
            transitions.append((t["from"], t["event"], t["to"]))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"transitions[{k}]: expected object with from/event/to") from exc
    return TestModel(
        alphabet=Alphabet(tuple(data["alphabet"])),
        states=tuple(data["states"]),
        initial=data["initial"],
        accepting=frozenset(data["accepting"]),
        transitions=tuple(transitions),
        length_bound=data.get("length_bound"),
    )


def serialize_model(model: TestModel) -> str:
    data = {
        "alphabet": list(model.alphabet.events),
        "states": list(model.states),
        "initial": model.initial,
        "accepting": [s for s in model.states if s in model.accepting],
        "transitions": [{"from": a, "event": e, "to": b} for a, e, b in model.transitions],
        "length_bound": model.length_bound,
    }
    return json.dumps(data, indent=1)


def random_walk(model: TestModel, rng: random.Random, max_len: int) -> TestCase:
    """Sample one accepting trace by walking uniformly over outgoing transitions.

    At an accepting state with ``d`` outgoing transitions the walk stops with
    probability ``1/(1+d)``. Walks that dead-end or reach ``max_len`` outside
    an accepting state are discarded and retried.
    """
    trace, _ = _walk(model, rng, max_len)
    return trace


def _walk(model: TestModel, rng: random.Random, max_len: int) -> tuple[TestCase, int]:
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    if model.length_bound is not None:
        max_len = min(max_len, model.length_bound)
    out = model._out
    accepting = model.accepting
    for attempt in range(STOP_RETRIES + 1):
        state = model.initial
        trace = []
        while True:
            moves = out[state]
            if state in accepting:
                if not moves or rng.random() * (1 + len(moves)) < 1:
                    return tuple(trace), attempt
            if not moves or len(trace) >= max_len:
                break
            event, state = moves[rng.randrange(len(moves))]
            trace.append(event)
    raise WalkError(f"no accepting trace found within retry budget ({STOP_RETRIES} retries, max_len={max_len})")


def walk_seed(seed: int, k: int) -> random.Random:
    """Per-walk generator; walk ``k`` depends only on ``(seed, k)``."""
    return random.Random(f"{seed}:{k}")


def generate_pool(model: TestModel, walk_count: int, max_len: int, seed: int) -> TestPool:
    if walk_count < 1:
        raise ValueError("walk_count must be at least 1")
    seen: dict[TestCase, None] = {}
    retries = 0
    for k in range(walk_count):
        trace, r = _walk(model, walk_seed(seed, k), max_len)
        retries += r
        seen.setdefault(trace, None)
    cases = tuple(seen)
    return TestPool(cases, walk_count, walk_count - len(cases), retries, seed)


def count_traces(model: TestModel, max_len: int) -> int:
    """Exact number of distinct accepting traces of length ``<= max_len``.

    Works on the subset construction so nondeterministic models are counted
    by traces, not paths.
    """
    if model.length_bound is not None:
        max_len = min(max_len, model.length_bound)
    events = model.alphabet.events
    memo: dict[tuple[frozenset, int], int] = {}

    def count(states: frozenset, remaining: int) -> int:
        key = (states, remaining)
        if key in memo:
            return memo[key]
        total = 1 if states & model.accepting else 0
        if remaining > 0:
            for e in events:
                nxt = model.step(states, e)
                if nxt:
                    total += count(nxt, remaining - 1)
        memo[key] = total
        return total

    return count(frozenset([model.initial]), max_len)


def enumerate_traces(model: TestModel, max_len: int) -> Iterable[TestCase]:
    """Yield every distinct accepting trace of length ``<= max_len``."""
    if model.length_bound is not None:
        max_len = min(max_len, model.length_bound)
    stack = [((), frozenset([model.initial]))]
    while stack:
        trace, states = stack.pop()
        if states & model.accepting:
            yield trace
        if len(trace) < max_len:
            for e in reversed(model.alphabet.events):
                nxt = model.step(states, e)
                if nxt:
                    stack.append((trace + (e,), nxt))


def read_pool(text: str) -> list[TestCase]:
    cases = []
    # a blank line is the empty trace
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            continue
        cases.append(tuple(e.strip() for e in line.split(",")) if line else ())
    return cases


def format_pool(cases: Iterable[Sequence[str]], header: Sequence[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    lines.extend(",".join(c) for c in cases)
    return "\n".join(lines) + "\n" if lines else ""
