"""Executable alternating-bit protocol with injectable bugs.

The protocol: a sender repeatedly transmits the current packet tagged with
its bit until it receives an acknowledgment carrying that bit, then moves to
the next packet (``done``) and flips the bit. The receiver accepts a packet
whose bit equals the expected one and flips its own bit; it answers with an
acknowledgment of the last accepted bit (``rAck``) or a negative one
(``rNak``). Both channels are bounded FIFOs that may lose the oldest message
or swap the two oldest.

Each event has a precondition. The instrumentation layer reports a
violation when a precondition fails, and also when the state left behind by
an event differs from what the correct protocol would produce, so an
activated bug is reported at the step that triggers it.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

ABP_EVENTS = ("send", "receive", "sAck", "sNak", "rAck", "rNak",
              "loseData", "loseAck", "reorderData", "reorderAck", "done")
DATA_CAP = 2
ACK_CAP = 2

# (sender_bit, acked, expected_bit, last_accepted, data, acks)
# data holds bits; acks holds "A0"/"A1" (acknowledgment of a bit) or "N"
State = tuple
INITIAL: State = (0, False, 0, None, (), ())


def successors(state: State, data_cap: int = DATA_CAP, ack_cap: int = ACK_CAP) -> Iterator[tuple[str, State]]:
    """Every enabled event of the correct protocol with its successor state."""
    sb, acked, rb, last, data, acks = state
    if not acked and len(data) < data_cap:
        yield "send", (sb, acked, rb, last, data + (sb,), acks)
    if data:
        d, rest = data[0], data[1:]
        if d == rb:
            yield "receive", (sb, acked, 1 - rb, d, rest, acks)
        else:
            yield "receive", (sb, acked, rb, last, rest, acks)
        yield "loseData", (sb, acked, rb, last, rest, acks)
    if len(data) >= 2:
        yield "reorderData", (sb, acked, rb, last, (data[1], data[0]) + data[2:], acks)
    if last is not None and len(acks) < ack_cap:
        yield "rAck", (sb, acked, rb, last, data, acks + (f"A{last}",))
        yield "rNak", (sb, acked, rb, last, data, acks + ("N",))
    if acks:
        head, rest = acks[0], acks[1:]
        if head == f"A{sb}":
            yield "sAck", (sb, True, rb, last, data, rest)
        else:
            yield "sNak", (sb, acked, rb, last, data, rest)
        yield "loseAck", (sb, acked, rb, last, data, rest)
    if len(acks) >= 2:
        yield "reorderAck", (sb, acked, rb, last, data, (acks[1], acks[0]) + acks[2:])
    if acked:
        yield "done", (1 - sb, False, rb, last, data, acks)


@lru_cache(maxsize=1 << 16)
def _enabled(state: State, data_cap: int, ack_cap: int) -> dict:
    return dict(successors(state, data_cap, ack_cap))


def is_accepting(state: State) -> bool:
    """A test may end once a packet was delivered and the sender is in step with the receiver."""
    sb, acked, rb, last, data, acks = state
    return last is not None and not acked and sb == rb


def state_name(state: State) -> str:
    sb, acked, rb, last, data, acks = state
    return "S{}{}|R{}{}|D{}|A{}".format(
        sb, "+" if acked else "", rb, "-" if last is None else last,
        "".join(map(str, data)) or "_", "".join(a[-1] for a in acks) or "_")


def _why_disabled(state: State, event: str, data_cap: int, ack_cap: int) -> str:
    sb, acked, rb, last, data, acks = state
    reasons = {
        "send": "packet already acknowledged" if acked else "data channel full",
        "receive": "data channel empty",
        "loseData": "data channel empty",
        "reorderData": "fewer than two packets in flight",
        "rAck": "nothing received yet" if last is None else "ack channel full",
        "rNak": "nothing received yet" if last is None else "ack channel full",
        "sAck": "ack channel empty" if not acks else f"head acknowledgment {acks[0]} does not match bit {sb}",
        "sNak": "ack channel empty" if not acks else f"head acknowledgment {acks[0]} matches bit {sb}",
        "loseAck": "ack channel empty",
        "reorderAck": "fewer than two acknowledgments in flight",
        "done": "current packet not acknowledged",
    }
    return reasons[event]


# Misbehaviours. Each maps (state before, correct state after) to the state the buggy system ends in.

def _resend_ignore_acks(before: State, after: State) -> State:
    # both acknowledgments are dropped and the current packet goes out again
    sb, _, rb, last, data, acks = after
    return (sb, False, rb, last, data + (sb,), acks)


def _withhold_ack(before: State, after: State) -> State:
    # the receiver does not put its acknowledgment on the channel
    sb, acked, rb, last, data, acks = after
    return (sb, acked, rb, last, data, acks[:-1])


def _ignore_ack_resend(before: State, after: State) -> State:
    # the acknowledgment is consumed but disregarded; the last packet is re-sent
    sb, _, rb, last, data, acks = after
    return (sb, False, rb, last, data + (sb,), acks)


EFFECTS: dict[str, Optional[Callable[[State, State], State]]] = {
    "resend-ignore-acks": _resend_ignore_acks,
    "withhold-ack": _withhold_ack,
    "ignore-ack-resend": _ignore_ack_resend,
    "violate-next-precondition": None,
}


class BugError(ValueError):
    pass


@dataclass(frozen=True)
class BugSpec:
    trigger: tuple[str, ...]
    effect: str

    def __post_init__(self):
        object.__setattr__(self, "trigger", tuple(self.trigger))
        if not self.trigger:
            raise BugError("bug trigger must be non-empty")
        unknown = [e for e in self.trigger if e not in ABP_EVENTS]
        if unknown:
            raise BugError(f"trigger uses events outside the protocol alphabet: {unknown}")
        if self.effect not in EFFECTS:
            raise BugError(f"unknown effect {self.effect!r}; expected one of {sorted(EFFECTS)}")

    @property
    def name(self) -> str:
        return ",".join(self.trigger)

    def to_json(self) -> dict:
        return {"trigger": list(self.trigger), "effect": self.effect}

    @classmethod
    def from_json(cls, data) -> "BugSpec":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(tuple(data["trigger"]), data["effect"])
        except (KeyError, TypeError) as e:
            raise BugError(f"bug spec needs 'trigger' and 'effect': {e}") from None


def load_bugs(text: str) -> list[BugSpec]:
    """A bug file holds one spec object or a list of them."""
    data = json.loads(text)
    return [BugSpec.from_json(d) for d in (data if isinstance(data, list) else [data])]


STANDARD_BUGS = (
    # two acknowledgments in a row: both ignored, packet re-sent
    BugSpec(("sAck", "sAck"), "resend-ignore-acks"),
    # acknowledgment right after a negative one is not sent
    BugSpec(("rNak", "rAck"), "withhold-ack"),
    # acknowledgment after the sender saw two negatives in a row is not sent
    BugSpec(("sNak", "sNak", "rAck"), "withhold-ack"),
    # acknowledgment after two sends is ignored and the packet re-sent
    BugSpec(("send", "send", "sAck"), "ignore-ack-resend"),
)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    failing_step: Optional[int] = None
    reason: str = ""

    def __post_init__(self):
        if self.passed != (self.failing_step is None):
            raise ValueError("a verdict fails exactly when it names a failing step")


@dataclass
class AbpSystem:
    bugs: tuple[BugSpec, ...] = ()
    data_cap: int = DATA_CAP
    ack_cap: int = ACK_CAP
    state: State = INITIAL
    history: list = field(default_factory=list)
    poisoned: bool = False

    def reset(self) -> None:
        self.state = INITIAL
        self.history = []
        self.poisoned = False

    def _triggered(self) -> list[BugSpec]:
        h = self.history
        return [b for b in self.bugs if tuple(h[len(h) - len(b.trigger):]) == b.trigger]

    def step(self, event: str) -> Optional[str]:
        """Execute one event; returns None on success or the violation message."""
        if event not in ABP_EVENTS:
            raise BugError(f"unknown event {event!r}")
        if self.poisoned:
            return f"{event}: precondition broken by an earlier misbehaviour"
        correct = _enabled(self.state, self.data_cap, self.ack_cap).get(event)
        if correct is None:
            return f"{event}: {_why_disabled(self.state, event, self.data_cap, self.ack_cap)}"
        before = self.state
        self.history.append(event)
        actual = correct
        for bug in self._triggered():
            effect = EFFECTS[bug.effect]
            if effect is None:
                self.poisoned = True
            else:
                actual = effect(before, actual)
        self.state = actual
        if actual != correct:
            return f"{event}: resulting state {state_name(actual)} differs from expected {state_name(correct)}"
        return None


def new_abp(bugs: Iterable[BugSpec] = ()) -> AbpSystem:
    return AbpSystem(tuple(bugs))


def execute(system: AbpSystem, test: Sequence[str]) -> Verdict:
    """Run ``test`` from the initial state; the first violation fails it."""
    system.reset()
    for k, event in enumerate(test):
        problem = system.step(event)
        if problem is not None:
            return Verdict(False, k, problem)
    return Verdict(True)


def has_infix(test: Sequence[str], word: Sequence[str]) -> bool:
    w = len(word)
    word = tuple(word)
    return any(tuple(test[k:k + w]) == word for k in range(len(test) - w + 1))


def build_model_dict(data_cap: int = DATA_CAP, ack_cap: int = ACK_CAP, length_bound: Optional[int] = None) -> dict:
    """Explore the correct protocol and return it as a model-file object."""
    order = [INITIAL]
    seen = {INITIAL}
    transitions = []
    queue = deque([INITIAL])
    while queue:
        s = queue.popleft()
        for event, t in successors(s, data_cap, ack_cap):
            transitions.append({"from": state_name(s), "event": event, "to": state_name(t)})
            if t not in seen:
                seen.add(t)
                order.append(t)
                queue.append(t)
    return {
        "alphabet": list(ABP_EVENTS),
        "states": [state_name(s) for s in order],
        "initial": state_name(INITIAL),
        "accepting": [state_name(s) for s in order if is_accepting(s)],
        "transitions": transitions,
        "length_bound": length_bound,
    }


def failure_mask(cases: Sequence[Sequence[str]], bugs: Iterable[BugSpec]) -> np.ndarray:
    """Which pool tests fail on a fresh system with ``bugs`` armed."""
    system = new_abp(bugs)
    return np.array([not execute(system, c).passed for c in cases], dtype=bool)


def _repetition_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([seed, rep]).generate_state(1)[0])


def _one_suite(pool_size: int, method: str, fitness, n: int, seed: int, k: int, params) -> list[int]:
    from .evolve import GaParams, best_of_k_indices, evolve_indices, random_indices

    if method == "random":
        return random_indices(pool_size, n, seed)
    if method == "best-of-k":
        return best_of_k_indices(pool_size, n, fitness, k, seed)
    if method == "ga":
        base = params or GaParams(n=n)
        return evolve_indices(pool_size, GaParams(**{**base.__dict__, "n": n, "seed": seed}), fitness)[0]
    raise ValueError(f"unknown method {method!r}")


def sample_suites(pool_size: int, method: str, fitness, n: int, repetitions: int, seed: int,
                  k: int = 1000, params=None, workers: int = 1) -> list[list[int]]:
    """``repetitions`` suites (as pool positions) built by ``method``.

    Repetition ``r`` is seeded from ``(seed, r)`` alone, so the result does
    not depend on ``workers``.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    seeds = [_repetition_seed(seed, rep) for rep in range(repetitions)]
    if workers <= 1 or repetitions == 1:
        return [_one_suite(pool_size, method, fitness, n, s, k, params) for s in seeds]
    from concurrent.futures import ProcessPoolExecutor
    from functools import partial

    job = partial(_one_suite, pool_size, method, fitness, n, k=k, params=params)
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(job, seeds, chunksize=max(1, repetitions // (4 * workers))))


def detection_rate(suites: Sequence[Sequence[int]], failing: np.ndarray) -> float:
    """Fraction of suites containing at least one failing test."""
    if not len(suites):
        raise ValueError("no suites")
    return float(np.mean([failing[np.asarray(s, dtype=np.intp)].any() for s in suites]))


def catch_probability(pool, method: str, fitness, bug: BugSpec, n: int, repetitions: int, seed: int,
                      k: int = 1000, params=None) -> float:
    """Fraction of generated suites in which some test fails on the bug-armed system."""
    suites = sample_suites(len(pool), method, fitness, n, repetitions, seed, k, params)
    return detection_rate(suites, failure_mask(pool, [bug]))


def simulate_history(model, family, bugs: Iterable[BugSpec], tests: int, seed: int, max_len: int = 30):
    """Execute ``tests`` random walks on the bug-armed system.

    Returns ``(covered indices, passed)`` per test, indices in family order.
    """
    from .model import _walk, walk_seed

    system = new_abp(bugs)
    order = family.position
    history = []
    for k in range(tests):
        trace, _ = _walk(model, walk_seed(seed, k), max_len)
        hit = tuple(sorted(family.covered(trace), key=order.__getitem__))
        history.append((hit, execute(system, trace).passed))
    return history
