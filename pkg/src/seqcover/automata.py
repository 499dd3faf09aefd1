"""Regular expressions over event names and their NFAs.

Syntax: event names are tokens (letters, digits, ``_``, ``-``, ``:``, or any
text in single quotes); juxtaposition concatenates; ``|`` unions;
postfix ``*``, ``+``, ``?``; ``.`` is any event; ``[a b]`` is a class and
``[^a b]`` its complement. Patterns are anchored at both ends.

Example: ``.* send .* [^send]* receive`` .
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z0-9_\-:]+)|'(?P<quoted>[^']*)'|(?P<op>[()|*+?.\[\]^]))")


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class Label:
    """Set of events, or its complement when ``negated``."""

    events: frozenset
    negated: bool = False

    def __call__(self, event: str) -> bool:
        return (event in self.events) != self.negated


ANY = Label(frozenset(), negated=True)


class Nfa:
    """Thompson NFA with a single start and a single accept state."""

    def __init__(self):
        self.edges: list[list[tuple[Label, int]]] = []
        self.eps: list[list[int]] = []
        self.start = self.accept = 0

    def new_state(self) -> int:
        self.edges.append([])
        self.eps.append([])
        return len(self.edges) - 1

    def closure(self, states: Iterable[int]) -> frozenset[int]:
        seen = set(states)
        todo = list(seen)
        while todo:
            s = todo.pop()
            for t in self.eps[s]:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        return frozenset(seen)

    def initial(self) -> frozenset[int]:
        return self.closure([self.start])

    def step(self, states: frozenset[int], event: str) -> frozenset[int]:
        return self.closure(dst for s in states for label, dst in self.edges[s] if label(event))

    def is_final(self, states: frozenset[int]) -> bool:
        return self.accept in states

    def accepts(self, word: Sequence[str]) -> bool:
        current = self.initial()
        for e in word:
            current = self.step(current, e)
            if not current:
                return False
        return self.accept in current


# AST nodes are tuples: ("sym", Label) | ("cat", a, b) | ("alt", a, b) | ("star", a) | ("eps",)

def _tokenize(pattern: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(pattern):
        if pattern[pos:].strip() == "":
            break
        m = _TOKEN.match(pattern, pos)
        if not m:
            raise PatternError(f"unexpected character {pattern[pos:].lstrip()[:1]!r} at offset {pos}")
        if m.group("name") is not None:
            tokens.append(("name", m.group("name")))
        elif m.group("quoted") is not None:
            tokens.append(("name", m.group("quoted")))
        else:
            tokens.append(("op", m.group("op")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, pattern: str, alphabet: Optional[Iterable[str]]):
        self.tokens = _tokenize(pattern)
        self.pos = 0
        self.alphabet = None if alphabet is None else frozenset(alphabet)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def name(self, value: str) -> str:
        if self.alphabet is not None and value not in self.alphabet:
            raise PatternError(f"unknown event {value!r}")
        return value

    def parse(self):
        node = self.alt()
        if self.pos != len(self.tokens):
            raise PatternError(f"unexpected token {self.peek()[1]!r}")
        return node

    def alt(self):
        node = self.concat()
        while self.peek() == ("op", "|"):
            self.take()
            node = ("alt", node, self.concat())
        return node

    def concat(self):
        node = ("eps",)
        while True:
            kind, value = self.peek()
            if kind is None or (kind == "op" and value in ")|"):
                return node
            item = self.repeat()
            node = item if node == ("eps",) else ("cat", node, item)

    def repeat(self):
        node = self.atom()
        while self.peek() in (("op", "*"), ("op", "+"), ("op", "?")):
            _, op = self.take()
            if op == "*":
                node = ("star", node)
            elif op == "+":
                node = ("cat", node, ("star", node))
            else:
                node = ("alt", node, ("eps",))
        return node

    def atom(self):
        kind, value = self.take()
        if kind == "name":
            return ("sym", Label(frozenset([self.name(value)])))
        if value == ".":
            return ("sym", ANY)
        if value == "(":
            node = self.alt()
            if self.take() != ("op", ")"):
                raise PatternError("missing ')'")
            return node
        if value == "[":
            negated = False
            if self.peek() == ("op", "^"):
                self.take()
                negated = True
            names = []
            while self.peek()[0] == "name":
                names.append(self.name(self.take()[1]))
            if self.take() != ("op", "]"):
                raise PatternError("missing ']'")
            return ("sym", Label(frozenset(names), negated))
        raise PatternError(f"unexpected token {value!r}")


def _build(nfa: Nfa, node) -> tuple[int, int]:
    kind = node[0]
    if kind == "eps":
        s = nfa.new_state()
        return s, s
    if kind == "sym":
        s, t = nfa.new_state(), nfa.new_state()
        nfa.edges[s].append((node[1], t))
        return s, t
    if kind == "cat":
        s1, t1 = _build(nfa, node[1])
        s2, t2 = _build(nfa, node[2])
        nfa.eps[t1].append(s2)
        return s1, t2
    if kind == "alt":
        s, t = nfa.new_state(), nfa.new_state()
        for child in node[1:]:
            cs, ct = _build(nfa, child)
            nfa.eps[s].append(cs)
            nfa.eps[ct].append(t)
        return s, t
    if kind == "star":
        s, t = nfa.new_state(), nfa.new_state()
        cs, ct = _build(nfa, node[1])
        nfa.eps[s] += [cs, t]
        nfa.eps[ct] += [cs, t]
        return s, t
    raise AssertionError(kind)


def compile_pattern(pattern: str, alphabet: Optional[Iterable[str]] = None) -> Nfa:
    """Compile ``pattern``; names are checked against ``alphabet`` when given."""
    tree = _Parser(pattern, alphabet).parse()
    nfa = Nfa()
    nfa.start, nfa.accept = _build(nfa, tree)
    return nfa


def quote(event: str) -> str:
    return event if re.fullmatch(r"[A-Za-z0-9_\-:]+", event) else f"'{event}'"


def search_product(model, nfa: Nfa, len_cap: Optional[int] = None) -> tuple[bool, bool]:
    """Is some accepting model trace accepted by ``nfa``?

    Breadth-first search over (model state, NFA state set); the model's own
    length bound is honoured exactly. Returns ``(found, capped)`` where
    ``capped`` means ``len_cap`` cut the search short, so ``False`` may be
    conservative.
    """
    bound = model.length_bound
    limit = bound if len_cap is None else (len_cap if bound is None else min(bound, len_cap))
    start = (model.initial, nfa.initial())
    if start[0] in model.accepting and nfa.is_final(start[1]):
        return True, False
    seen = {start}
    frontier = [start]
    depth = 0
    step_cache: dict[tuple[frozenset, str], frozenset] = {}
    while frontier:
        if limit is not None and depth >= limit:
            capped = len_cap is not None and (bound is None or len_cap < bound)
            return False, capped
        depth += 1
        nxt = []
        for state, nstates in frontier:
            for event, dst in model.outgoing(state):
                key = (nstates, event)
                ns = step_cache.get(key)
                if ns is None:
                    ns = step_cache[key] = nfa.step(nstates, event)
                if not ns:
                    continue
                pair = (dst, ns)
                if pair in seen:
                    continue
                if dst in model.accepting and nfa.is_final(ns):
                    return True, False
                seen.add(pair)
                nxt.append(pair)
        frontier = nxt
    return False, False


def find_uncovered_word(nfa: Nfa, alphabet: Sequence[str], length_bound: Optional[int]) -> Optional[tuple]:
    """Shortest word over ``alphabet`` (within the bound) rejected by ``nfa``, or None."""
    start = nfa.initial()
    if not nfa.is_final(start):
        return ()
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        states, word = queue.popleft()
        if length_bound is not None and len(word) >= length_bound:
            continue
        for e in alphabet:
            ns = nfa.step(states, e)
            if not nfa.is_final(ns):
                return word + (e,)
            if ns not in seen:
                seen.add(ns)
                queue.append((ns, word + (e,)))
    return None
