"""Reference implementations used only by the tests.

Each one is written from the textbook definition, independently of the
package code it checks.
"""
import itertools
import re


def encode(alphabet):
    """Map events to single characters so Python's ``re`` can act as the regular-language oracle."""
    return {e: chr(ord("a") + k) for k, e in enumerate(alphabet)}


def _cls(chars, negated=False):
    return "[" + ("^" if negated else "") + "".join(chars) + "]" if chars else ("." if negated else "(?!)")


def regex_for(kind, index, alphabet, **kw):
    """Regex (over encoded characters) for one index of a built-in family."""
    c = encode(alphabet)
    if kind == "relaxed":
        return "|".join(f"(?:{regex_for(kw['base_kind'], i, alphabet, **kw)})" for i in index)
    if kind == "kuhn-higdon":
        return ".*" + ".*".join(c[e] for e in index) + ".*"
    if kind == "exact-once":
        other = _cls(sorted({c[e] for e in index}), negated=True) + "*"
        return other + "".join(c[e] + other for e in index)
    if kind == "consecutive-window":
        return ".*" + "".join(c[e] for e in index) + ".*"
    if kind == "classic-tway":
        at = dict(index)
        return "".join(c[at[p]] if p in at else "." for p in range(1, kw["n"] + 1))
    if kind == "message-order":
        s, r = index
        return f".*{c[s]}.*{c[r]}.*"
    if kind == "transaction-safety":
        d, a = index
        money = sorted({c[e] for e in kw["debits"]} | {c[e] for e in kw["credits"]})
        other = _cls(money, negated=True) + "*"
        return f"{other}{c[d]}{other}{c[a]}{other}"
    raise ValueError(kind)


def regex_match(pattern, word, alphabet):
    c = encode(alphabet)
    return re.fullmatch(pattern, "".join(c[e] for e in word), re.DOTALL) is not None


def words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def accepted_words(model, max_len):
    """P by brute force: every word up to ``max_len`` the model accepts."""
    return [w for w in words(model.alphabet.events, max_len) if model.accepts(w)]


def two_way_rank(suite):
    """Positional-pair ranking: distinct "(a,b)" strings over i < j in each test."""
    all_pairs = []
    for test in suite:
        for i in range(len(test) - 1):
            for j in range(i + 1, len(test)):
                all_pairs.append("(" + test[i] + "," + test[j] + ")")
    return len(set(all_pairs))


def pmx_textbook(p1, p2, lo, hi):
    """Goldberg-Lingle PMX for permutations; child keeps p1[lo:hi]."""
    n = len(p1)
    child = [None] * n
    child[lo:hi] = p1[lo:hi]
    for i in range(lo, hi):
        v = p2[i]
        if v in child[lo:hi]:
            continue
        pos = i
        while lo <= pos < hi:
            pos = p2.index(p1[pos])
        child[pos] = v
    for i in range(n):
        if child[i] is None:
            child[i] = p2[i]
    return child


def beta_variance(a, b):
    return a * b / ((a + b) ** 2 * (a + b + 1))


def brute_canonical_orbit(play, n=3):
    """The 8 symmetric images of a tic-tac-toe play, computed by coordinates."""
    def cell(r, c):
        return r * n + c + 1

    images = []
    for f in (lambda r, c: (r, c), lambda r, c: (c, n - 1 - r), lambda r, c: (n - 1 - r, n - 1 - c),
              lambda r, c: (n - 1 - c, r), lambda r, c: (r, n - 1 - c), lambda r, c: (n - 1 - r, c),
              lambda r, c: (c, r), lambda r, c: (n - 1 - c, n - 1 - r)):
        images.append(tuple(cell(*f((m - 1) // n, (m - 1) % n)) for m in play))
    return images
