"""Coverage criteria: indexed families of languages over an event alphabet.

A family has a finite, ordered index set and a membership test
``matches(index, test)``. Built-in families also know how to compute every
index one test covers in a single pass (``covered``), which is what ranking
uses, and how to express an index as a regular pattern, which is what the
emptiness check against a test model uses.
"""
from __future__ import annotations

import itertools
import json
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import boards
from .automata import Nfa, compile_pattern, find_uncovered_word, quote, search_product

Index = Hashable


class CriterionError(ValueError):
    pass


class CriterionFamily:
    """Base class; subclasses implement :meth:`matches`."""

    kind = "custom"
    complete = False

    def __init__(self, name: str, indices: Iterable[Index], alphabet: Optional[Sequence[str]] = None):
        self.name = name
        self.indices = tuple(indices)
        self.alphabet = None if alphabet is None else tuple(alphabet)
        self.position = {i: k for k, i in enumerate(self.indices)}
        if len(self.position) != len(self.indices):
            raise CriterionError(f"{name}: duplicate indices")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name!r} |I|={len(self)}>"

    def matches(self, index: Index, test: Sequence[str]) -> bool:
        raise NotImplementedError

    def covered(self, test: Sequence[str]) -> set:
        """All indices whose language contains ``test``."""
        return {i for i in self.indices if self.matches(i, test)}

    def cover_vector(self, test: Sequence[str]) -> np.ndarray:
        vec = np.zeros(len(self.indices), dtype=bool)
        for i in self.covered(test):
            vec[self.position[i]] = True
        return vec

    def pattern(self, index: Index) -> Optional[str]:
        """Regular pattern for ``index`` or None when the language is not given as one."""
        return None

    def automaton(self, index: Index) -> Optional[Nfa]:
        cache = self.__dict__.setdefault("_nfa_cache", {})
        if index not in cache:
            p = self.pattern(index)
            cache[index] = None if p is None else compile_pattern(p)
        return cache[index]


def _events(seq: Iterable[str]) -> str:
    return " ".join(quote(e) for e in seq)


def _class(events: Iterable[str], negated: bool = False) -> str:
    return "[" + ("^" if negated else "") + _events(sorted(events)) + "]"


class ClassicTway(CriterionFamily):
    kind = "classic-tway"

    def __init__(self, alphabet: Sequence[str], n: int, t: int):
        if not 1 <= t <= n:
            raise CriterionError(f"classic t-way needs 1 <= t <= n, got t={t}, n={n}")
        self.n, self.t = n, t
        indices = [
            tuple(zip(positions, letters))
            for positions in itertools.combinations(range(1, n + 1), t)
            for letters in itertools.product(alphabet, repeat=t)
        ]
        super().__init__(f"classic-{t}way-n{n}", indices, alphabet)

    def matches(self, index, test) -> bool:
        return len(test) == self.n and all(test[p - 1] == e for p, e in index)

    def covered(self, test) -> set:
        if len(test) != self.n or any(e not in self.position_letters for e in test):
            return set()
        return {tuple((p, test[p - 1]) for p in positions)
                for positions in itertools.combinations(range(1, self.n + 1), self.t)}

    @cached_property
    def position_letters(self) -> frozenset:
        return frozenset(self.alphabet)

    def pattern(self, index) -> str:
        at = dict(index)
        return " ".join(quote(at[p]) if p in at else "." for p in range(1, self.n + 1))


class _TupleFamily(CriterionFamily):
    """Indices are all t-tuples over the alphabet, in product order."""

    def __init__(self, name: str, alphabet: Sequence[str], t: int):
        if t < 1:
            raise CriterionError("t must be at least 1")
        self.t = t
        super().__init__(name, itertools.product(alphabet, repeat=t), alphabet)
        self.letter = {e: k for k, e in enumerate(self.alphabet)}


class KuhnHigdon(_TupleFamily):
    """t-sequence coverage: the tuple occurs in order, gaps allowed."""

    kind = "kuhn-higdon"

    def __init__(self, alphabet: Sequence[str], t: int):
        super().__init__(f"kuhn-higdon-{t}", alphabet, t)

    def matches(self, index, test) -> bool:
        it = iter(test)
        return all(e in it for e in index)

    def cover_vector(self, test) -> np.ndarray:
        # seen[k] marks every k-tuple occurring as a subsequence of the prefix read so far
        size = len(self.alphabet)
        seen = [np.ones((), dtype=bool)] + [np.zeros((size,) * k, dtype=bool) for k in range(1, self.t + 1)]
        for e in test:
            x = self.letter.get(e)
            if x is None:
                continue
            for k in range(self.t, 0, -1):
                seen[k][..., x] |= seen[k - 1]
        return seen[self.t].reshape(-1)

    def covered(self, test) -> set:
        vec = self.cover_vector(test)
        return {self.indices[k] for k in np.flatnonzero(vec)}

    def pattern(self, index) -> str:
        return ".* " + " .* ".join(quote(e) for e in index) + " .*"


class ExactOnce(_TupleFamily):
    """Like Kuhn-Higdon, but the tuple's letters occur nowhere else."""

    kind = "exact-once"

    def __init__(self, alphabet: Sequence[str], t: int):
        super().__init__(f"exact-once-{t}", alphabet, t)

    def matches(self, index, test) -> bool:
        letters = set(index)
        return tuple(e for e in test if e in letters) == tuple(index)

    def pattern(self, index) -> str:
        other = _class(set(index), negated=True) + "*"
        return " ".join([other] + [f"{quote(e)} {other}" for e in index])


class ConsecutiveWindow(_TupleFamily):
    """The tuple occurs as a contiguous infix."""

    kind = "consecutive-window"

    def __init__(self, alphabet: Sequence[str], t: int):
        super().__init__(f"consecutive-{t}", alphabet, t)

    def matches(self, index, test) -> bool:
        t = self.t
        index = tuple(index)
        test = tuple(test)
        return any(test[k:k + t] == index for k in range(len(test) - t + 1))

    def covered(self, test) -> set:
        t = self.t
        test = tuple(test)
        windows = {test[k:k + t] for k in range(len(test) - t + 1)}
        return {w for w in windows if w in self.position}

    def pattern(self, index) -> str:
        return ".* " + _events(index) + " .*"


class _PairFamily(CriterionFamily):
    def __init__(self, name: str, first: Sequence[str], second: Sequence[str], labels: tuple[str, str]):
        first, second = tuple(dict.fromkeys(first)), tuple(dict.fromkeys(second))
        if not first or not second:
            raise CriterionError(f"{name}: both event sets must be non-empty")
        overlap = set(first) & set(second)
        if overlap:
            raise CriterionError(f"{name}: {labels[0]} and {labels[1]} must be disjoint, both contain {sorted(overlap)}")
        self.first, self.second = first, second
        super().__init__(name, itertools.product(first, second))


class MessageOrder(_PairFamily):
    """(s, r): a send event s occurs somewhere before a receive event r."""

    kind = "message-order"

    def __init__(self, sends: Sequence[str], receives: Sequence[str]):
        super().__init__("message-order", sends, receives, ("sends", "receives"))

    def matches(self, index, test) -> bool:
        s, r = index
        try:
            first = list(test).index(s)
        except ValueError:
            return False
        return r in test[first + 1:]

    def covered(self, test) -> set:
        out = set()
        sends_seen = set()
        for e in test:
            if e in self._receives:
                out.update((s, e) for s in sends_seen)
            if e in self._sends:
                sends_seen.add(e)
        return out

    @cached_property
    def _sends(self):
        return frozenset(self.first)

    @cached_property
    def _receives(self):
        return frozenset(self.second)

    def pattern(self, index) -> str:
        s, r = index
        return f".* {quote(s)} .* {quote(r)} .*"


class TransactionSafety(_PairFamily):
    """(d, a): the only money-moving events are one debit d followed by one credit a.

    Events outside debits and credits may occur any number of times in each gap.
    """

    kind = "transaction-safety"

    def __init__(self, debits: Sequence[str], credits: Sequence[str]):
        super().__init__("transaction-safety", debits, credits, ("debits", "credits"))
        self._money = frozenset(self.first) | frozenset(self.second)

    def matches(self, index, test) -> bool:
        return tuple(e for e in test if e in self._money) == tuple(index)

    def covered(self, test) -> set:
        moves = tuple(e for e in test if e in self._money)
        return {moves} if moves in self.position else set()

    def pattern(self, index) -> str:
        d, a = index
        other = _class(self._money, negated=True) + "*"
        return f"{other} {quote(d)} {other} {quote(a)} {other}"


class SymmetryClasses(CriterionFamily):
    """Complete n x n tic-tac-toe games, one index per symmetry class.

    Tests are plays written as cell numbers (``"1"`` .. ``"9"`` for n=3).
    """

    kind = "symmetry"

    def __init__(self, n: int = 3, budget: int = 5_000_000):
        if n < 1:
            raise CriterionError("board size must be at least 1")
        self.n = n
        classes = boards.game_classes(n, budget)
        super().__init__(f"symmetry-{n}x{n}", classes, [str(c) for c in range(1, n * n + 1)])

    def _canonical(self, test) -> Optional[tuple]:
        try:
            moves = tuple(int(e) for e in test)
            if not boards.check_play(moves, self.n):
                return None
            return boards._canonical(moves, self.n)
        except (ValueError, boards.IllegalPlay):
            return None

    def matches(self, index, test) -> bool:
        return self._canonical(test) == tuple(index)

    def covered(self, test) -> set:
        c = self._canonical(test)
        return {c} if c in self.position else set()


class Relaxed(CriterionFamily):
    """Union of a base family's languages over the blocks of an index partition."""

    kind = "relaxed"

    def __init__(self, base: CriterionFamily, blocks: Sequence[Iterable[Index]]):
        normalized = []
        owner = {}
        for b, block in enumerate(blocks):
            block = list(block)
            if not block:
                raise CriterionError(f"block {b} is empty")
            for i in block:
                if i not in base.position:
                    raise CriterionError(f"block {b}: {i!r} is not an index of {base.name}")
                if i in owner:
                    raise CriterionError(f"index {i!r} appears in blocks {owner[i]} and {b}")
                owner[i] = b
            normalized.append(tuple(sorted(block, key=base.position.__getitem__)))
        missing = [i for i in base.indices if i not in owner]
        if missing:
            raise CriterionError(f"partition misses {len(missing)} indices, e.g. {missing[0]!r}")
        self.base = base
        self.block_of = {i: normalized[b] for i, b in owner.items()}
        super().__init__(f"relaxed({base.name})", normalized, base.alphabet)

    def matches(self, index, test) -> bool:
        return any(self.base.matches(i, test) for i in index)

    def covered(self, test) -> set:
        return {self.block_of[i] for i in self.base.covered(test)}

    def pattern(self, index) -> Optional[str]:
        parts = [self.base.pattern(i) for i in index]
        if any(p is None for p in parts):
            return None
        return " | ".join(f"({p})" for p in parts)


class CustomRegular(CriterionFamily):
    """Named indices, each an anchored regular pattern over event names."""

    kind = "custom-regular"

    def __init__(self, alphabet: Sequence[str], patterns: Mapping[str, str], complete: bool = False):
        self.patterns = dict(patterns)
        self.complete = complete
        super().__init__("custom-regular", self.patterns, alphabet)
        for name, p in self.patterns.items():
            self.__dict__.setdefault("_nfa_cache", {})[name] = compile_pattern(p, self.alphabet)

    def matches(self, index, test) -> bool:
        return self.automaton(index).accepts(test)

    def pattern(self, index) -> str:
        return self.patterns[index]


def classic_tway(alphabet, n: int, t: int) -> ClassicTway:
    return ClassicTway(tuple(alphabet), n, t)


def kuhn_higdon(alphabet, t: int) -> KuhnHigdon:
    return KuhnHigdon(tuple(alphabet), t)


def exact_once(alphabet, t: int) -> ExactOnce:
    return ExactOnce(tuple(alphabet), t)


def consecutive_window(alphabet, t: int) -> ConsecutiveWindow:
    return ConsecutiveWindow(tuple(alphabet), t)


def message_order(sends, receives) -> MessageOrder:
    return MessageOrder(tuple(sends), tuple(receives))


def transaction_safety(debits, credits) -> TransactionSafety:
    return TransactionSafety(tuple(debits), tuple(credits))


def symmetry_classes(n: int = 3, budget: int = 5_000_000) -> SymmetryClasses:
    return SymmetryClasses(n, budget)


def custom_regular(alphabet, patterns: Mapping[str, str], complete: bool = False) -> CustomRegular:
    return CustomRegular(tuple(alphabet), patterns, complete)


def relax(family: CriterionFamily, partition: Sequence[Iterable[Index]]) -> Relaxed:
    return Relaxed(family, partition)


canonical = boards.canonical


def covered_indices(family: CriterionFamily, suite: Iterable[Sequence[str]]) -> set:
    out = set()
    for test in suite:
        out |= family.covered(test)
    return out


def check_feasible(family: CriterionFamily, index: Index, model, len_cap: Optional[int] = None) -> tuple[bool, bool]:
    """``(C(index) ∩ P != ∅, capped)``; see :func:`intersects_model`."""
    nfa = family.automaton(index)
    if nfa is not None:
        return search_product(model, nfa, len_cap)
    # no automaton: enumerate model traces up to the bound
    from .model import enumerate_traces

    bound = model.length_bound
    if bound is None and len_cap is None:
        raise CriterionError(f"{family.name}: an unbounded model needs len_cap for enumeration")
    limit = bound if len_cap is None else (len_cap if bound is None else min(bound, len_cap))
    for trace in enumerate_traces(model, limit):
        if family.matches(index, trace):
            return True, False
    capped = len_cap is not None and (bound is None or len_cap < bound)
    return False, capped


def intersects_model(family: CriterionFamily, index: Index, model, len_cap: Optional[int] = None) -> bool:
    """Does some accepting trace of ``model`` belong to ``C(index)``?

    Regular indices are decided exactly by a product search; ``len_cap``
    optionally limits trace length, making a negative answer conservative.
    """
    return check_feasible(family, index, model, len_cap)[0]


def uncovered_word(family: CriterionFamily, length_bound: Optional[int]) -> Optional[tuple]:
    """A word over the family's alphabet in no ``C(i)``, or None if the union is everything."""
    parts = [family.pattern(i) for i in family.indices]
    if family.alphabet is None or any(p is None for p in parts):
        raise CriterionError(f"{family.name}: completeness needs an alphabet and regular indices")
    nfa = compile_pattern(" | ".join(f"({p})" for p in parts) if parts else "[]")
    return find_uncovered_word(nfa, family.alphabet, length_bound)


def index_key(index: Index) -> str:
    """Stable string form of an index for files and reports."""
    if isinstance(index, tuple) and index and all(isinstance(x, tuple) for x in index):
        if all(len(x) == 2 and isinstance(x[0], int) for x in index):
            return ",".join(f"{p}:{e}" for p, e in index)
        return "|".join(index_key(x) for x in index)
    if isinstance(index, tuple):
        return ",".join(map(str, index))
    return str(index)


def index_from_json(obj) -> Index:
    if isinstance(obj, list):
        return tuple(index_from_json(x) for x in obj)
    return obj


def index_to_json(index: Index):
    if isinstance(index, tuple):
        return [index_to_json(x) for x in index]
    return index


def load_criterion(spec, alphabet: Sequence[str]) -> CriterionFamily:
    """Build a family from a criterion spec (dict or JSON text)."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    kind = spec.get("kind")
    alphabet = tuple(alphabet)
    try:
        if kind == "kuhn_higdon":
            return kuhn_higdon(alphabet, int(spec["t"]))
        if kind == "exact_once":
            return exact_once(alphabet, int(spec["t"]))
        if kind in ("consecutive_window", "consecutive"):
            return consecutive_window(alphabet, int(spec["t"]))
        if kind == "classic_tway":
            return classic_tway(alphabet, int(spec["n"]), int(spec["t"]))
        if kind == "message_order":
            return message_order(_known(spec["sends"], alphabet), _known(spec["receives"], alphabet))
        if kind == "transaction_safety":
            return transaction_safety(_known(spec["debits"], alphabet), _known(spec["credits"], alphabet))
        if kind == "symmetry":
            return symmetry_classes(int(spec.get("n", 3)))
        if kind == "custom_regular":
            patterns = {d["name"]: d["pattern"] for d in spec["indices"]}
            return custom_regular(alphabet, patterns, bool(spec.get("complete", False)))
        if kind == "relaxed":
            base = load_criterion(spec["base"], alphabet)
            return relax(base, [[index_from_json(i) for i in block] for block in spec["blocks"]])
    except KeyError as exc:
        raise CriterionError(f"criterion {kind!r}: missing field {exc.args[0]!r}") from exc
    raise CriterionError(f"unknown criterion kind {kind!r}")


def _known(events, alphabet) -> tuple:
    unknown = [e for e in events if e not in alphabet]
    if unknown:
        raise CriterionError(f"events not in the alphabet: {unknown}")
    return tuple(events)
