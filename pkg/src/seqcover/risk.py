"""Beta-Bernoulli risk estimates per coverage index.

Each index ``i`` carries a Beta(alpha, beta) posterior over the probability
that a test hitting ``i`` passes. By default alpha counts passes and beta
counts failures; ``convention="bug"`` swaps the roles. Either way
:meth:`RiskState.no_bug_mean` is the posterior mean of "no bug".
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .criteria import index_from_json, index_to_json

Index = Hashable
CONVENTIONS = ("pass", "bug")
POLICIES = ("no-bug-first", "max-risk", "max-variance")


class RiskError(ValueError):
    pass


@dataclass(frozen=True)
class BetaPrior:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha >= 1 and self.beta >= 1):
            raise RiskError(f"Beta parameters must be >= 1, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        return beta_variance(self.alpha, self.beta)


def beta_variance(alpha, beta):
    """Variance of Beta(alpha, beta); works elementwise on arrays."""
    s = alpha + beta
    return alpha * beta / (s * s * (s + 1))


class RiskState:
    """Posterior counts for a fixed, ordered universe of indices."""

    def __init__(self, indices: Iterable[Index], convention: str = "pass"):
        if convention not in CONVENTIONS:
            raise RiskError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
        self.indices = tuple(dict.fromkeys(indices))
        self.convention = convention
        self.position = {i: k for k, i in enumerate(self.indices)}
        self.alpha = np.ones(len(self.indices), dtype=np.int64)
        self.beta = np.ones(len(self.indices), dtype=np.int64)

    def copy(self) -> "RiskState":
        other = RiskState.__new__(RiskState)
        other.indices, other.convention, other.position = self.indices, self.convention, self.position
        other.alpha, other.beta = self.alpha.copy(), self.beta.copy()
        return other

    def _positions(self, hit: Iterable[Index]) -> list[int]:
        try:
            return sorted({self.position[i] for i in hit})
        except KeyError as e:
            raise RiskError(f"unknown index {e.args[0]!r}") from None

    def observe(self, hit: Iterable[Index], passed: bool) -> "RiskState":
        """Update every index in ``hit`` with one test outcome (in place)."""
        pos = self._positions(hit)
        success_side = self.alpha if self.convention == "pass" else self.beta
        failure_side = self.beta if self.convention == "pass" else self.alpha
        (success_side if passed else failure_side)[pos] += 1
        return self

    def reset(self) -> "RiskState":
        """Back to Beta(1, 1) everywhere, e.g. after a bug fix."""
        self.alpha[:] = 1
        self.beta[:] = 1
        return self

    def prior(self, index: Index) -> BetaPrior:
        k = self.position[index]
        return BetaPrior(int(self.alpha[k]), int(self.beta[k]))

    def counts(self) -> np.ndarray:
        return self.alpha + self.beta - 2

    def no_bug_mean(self) -> np.ndarray:
        num = self.alpha if self.convention == "pass" else self.beta
        return num / (self.alpha + self.beta)

    def variance(self) -> np.ndarray:
        return beta_variance(self.alpha.astype(float), self.beta.astype(float))

    def to_json(self) -> str:
        return json.dumps({
            "convention": self.convention,
            "priors": [{"index": index_to_json(i), "alpha": int(a), "beta": int(b)}
                       for i, a, b in zip(self.indices, self.alpha, self.beta)],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RiskState":
        data = json.loads(text)
        rows = data["priors"]
        state = cls([index_from_json(r["index"]) for r in rows], data.get("convention", "pass"))
        state.alpha[:] = [r["alpha"] for r in rows]
        state.beta[:] = [r["beta"] for r in rows]
        if (state.alpha < 1).any() or (state.beta < 1).any():
            raise RiskError("Beta parameters must be >= 1")
        return state


@dataclass(frozen=True)
class UsageProfile:
    """Probability that a run hits each index; missing indices weigh 0."""

    weights: Mapping[Index, float]
    partition: bool = False

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()):
            raise RiskError("usage weights must be non-negative")

    @classmethod
    def uniform(cls, indices: Sequence[Index], partition: bool = True) -> "UsageProfile":
        indices = tuple(indices)
        if not indices:
            raise RiskError("uniform profile needs at least one index")
        return cls({i: 1.0 / len(indices) for i in indices}, partition)

    @property
    def total(self) -> float:
        return math.fsum(self.weights.values())

    @property
    def remainder(self) -> float:
        return max(0.0, 1.0 - self.total)

    @property
    def partition_valid(self) -> bool:
        return self.partition and math.isclose(self.total, 1.0, abs_tol=1e-9)


@dataclass(frozen=True)
class LossModel:
    losses: Mapping[Index, float] = field(default_factory=dict)
    default: float = 1.0

    def __post_init__(self):
        if self.default < 0 or any(v < 0 for v in self.losses.values()):
            raise RiskError("losses must be non-negative")

    def __getitem__(self, index: Index) -> float:
        return self.losses.get(index, self.default)


@dataclass(frozen=True)
class Likelihood:
    no_bug: float          # sum of E_i * weight_i
    bug_risk: float        # 1 - no_bug; only meaningful for a partition
    partition_valid: bool


def _weighted(state: RiskState, profile: UsageProfile, scale=None) -> float:
    means = state.no_bug_mean()
    terms = []
    for index, w in profile.weights.items():
        if index not in state.position:
            raise RiskError(f"profile index {index!r} is not tracked")
        term = means[state.position[index]] * w
        terms.append(term * scale[index] if scale is not None else term)
    return math.fsum(terms)


def bug_likelihood(state: RiskState, profile: Optional[UsageProfile] = None) -> Likelihood:
    """Usage-weighted no-bug belief and its complement."""
    profile = profile or UsageProfile.uniform(state.indices)
    total = _weighted(state, profile)
    return Likelihood(total, 1.0 - total, profile.partition_valid)


def expected_loss(state: RiskState, profile: Optional[UsageProfile], loss: LossModel) -> float:
    """Sum over indices of loss * E_i * usage weight."""
    profile = profile or UsageProfile.uniform(state.indices)
    return _weighted(state, profile, loss)


def select_target(state: RiskState, candidates: Iterable[Index], loss: Optional[LossModel] = None,
                  policy: str = "no-bug-first") -> Index:
    """Pick the next index to aim tests at.

    Never-visited candidates come first under every policy. Otherwise
    ``no-bug-first`` picks the highest no-bug mean, ``max-risk`` the
    lowest (scaled by ``loss`` when given, so high-loss indices win), and
    ``max-variance`` the largest posterior variance. Ties go to the earliest
    index in the state's order.
    """
    if policy not in POLICIES:
        raise RiskError(f"policy must be one of {POLICIES}, got {policy!r}")
    cands = sorted(set(candidates), key=lambda i: state.position[i] if i in state.position else -1)
    if not cands:
        raise RiskError("no candidates to choose from")
    for c in cands:
        if c not in state.position:
            raise RiskError(f"unknown index {c!r}")
    counts, means, var = state.counts(), state.no_bug_mean(), state.variance()

    def score(i):
        k = state.position[i]
        if policy == "no-bug-first":
            s = means[k]
        elif policy == "max-risk":
            s = (1.0 - means[k]) * (loss[i] if loss is not None else 1.0)
        else:
            s = var[k]
        return (counts[k] == 0, s)

    best = cands[0]
    for c in cands[1:]:
        if score(c) > score(best):
            best = c
    return best


def max_variance_series(history: Sequence[tuple[Iterable[Index], bool]], min_coverage: int,
                        indices: Optional[Sequence[Index]] = None, convention: str = "pass",
                        qualify: str = "final") -> np.ndarray:
    """Max posterior variance over well-covered indices after each test.

    ``qualify="final"`` keeps the indices hit at least ``min_coverage``
    times over the whole history. ``qualify="running"`` lets an index join
    at the step where its hit count reaches ``min_coverage``; steps before
    any index qualifies are NaN.
    """
    if min_coverage < 0:
        raise RiskError("min_coverage must be non-negative")
    if qualify not in ("final", "running"):
        raise RiskError(f"qualify must be 'final' or 'running', got {qualify!r}")
    history = [(tuple(h), bool(p)) for h, p in history]
    if indices is None:
        indices = list(dict.fromkeys(i for h, _ in history for i in h))
    state = RiskState(indices, convention)
    steps = [state._positions(h) for h, _ in history]
    if not history:
        return np.zeros(0)

    if qualify == "final":
        totals = np.zeros(len(state.indices), dtype=np.int64)
        for pos in steps:
            totals[pos] += 1
        keep = totals >= min_coverage
        if not keep.any():
            raise RiskError(f"no index meets min_coverage={min_coverage}")

    out = np.empty(len(history))
    for t, (pos, (_, passed)) in enumerate(zip(steps, history)):
        side = state.alpha if (passed == (convention == "pass")) else state.beta
        side[pos] += 1
        if qualify == "running":
            keep = state.counts() >= min_coverage
            if not keep.any():
                out[t] = np.nan
                continue
        out[t] = state.variance()[keep].max()
    if qualify == "running" and np.isnan(out).all():
        raise RiskError(f"no index meets min_coverage={min_coverage}")
    return out


def replay(history: Iterable[tuple[Iterable[Index], bool]], indices: Sequence[Index],
           convention: str = "pass") -> RiskState:
    state = RiskState(indices, convention)
    for hit, passed in history:
        state.observe(hit, passed)
    return state


def history_to_csv(history: Iterable[tuple[Iterable[Index], bool]]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["test_id", "indices", "passed"])
    for k, (hit, passed) in enumerate(history):
        w.writerow([k, json.dumps([index_to_json(i) for i in hit]), int(passed)])
    return out.getvalue()


def history_from_csv(text: str) -> list[tuple[tuple, bool]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    try:
        return [(tuple(index_from_json(i) for i in json.loads(r["indices"])), r["passed"] in ("1", "true", "True"))
                for r in rows]
    except (KeyError, json.JSONDecodeError) as e:
        raise RiskError(f"bad history file: {e}") from None


def series_to_csv(series: Sequence[float]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["step", "max_variance"])
    for k, v in enumerate(series, start=1):
        w.writerow([k, "" if math.isnan(v) else repr(float(v))])
    return out.getvalue()


__all__ = [
    "BetaPrior", "Likelihood", "LossModel", "RiskError", "RiskState", "UsageProfile",
    "beta_variance", "bug_likelihood", "expected_loss", "history_from_csv", "history_to_csv",
    "max_variance_series", "replay", "select_target", "series_to_csv",
]
