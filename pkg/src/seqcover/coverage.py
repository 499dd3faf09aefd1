"""Ranking functions, coverage ratio and the coverage predicate."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .criteria import CriterionError, CriterionFamily, check_feasible, covered_indices, index_key, uncovered_word
from .model import TestCase, TestModel


@dataclass(frozen=True)
class TestSuite:
    __test__ = False  # not a pytest class
    tests: tuple[TestCase, ...]

    def __post_init__(self):
        tests = tuple(tuple(t) for t in self.tests)
        if len(set(tests)) != len(tests):
            raise ValueError("a test suite cannot contain the same test twice")
        object.__setattr__(self, "tests", tests)

    @classmethod
    def of(cls, tests: Iterable[Sequence[str]]) -> "TestSuite":
        """Build a suite, silently dropping repeated tests."""
        return cls(tuple(dict.fromkeys(tuple(t) for t in tests)))

    def __len__(self) -> int:
        return len(self.tests)

    def __iter__(self):
        return iter(self.tests)

    @property
    def n(self) -> int:
        return len(self.tests)


def rank(family: CriterionFamily, suite: Iterable[Sequence[str]]) -> int:
    """Number of distinct indices covered by at least one test of ``suite``."""
    return len(covered_indices(family, suite))


@dataclass
class CoverageReport:
    covered: int
    feasible: int
    total: int
    capped: bool
    rows: list = field(default_factory=list)  # (index, feasible, covered)

    @property
    def ratio(self) -> Fraction:
        if self.feasible == 0:
            raise ZeroDivisionError("coverage ratio undefined: no index is feasible in the model")
        return Fraction(self.covered, self.feasible)

    @property
    def ratio_float(self) -> float:
        return float(self.ratio)

    def to_json(self) -> str:
        data = {
            "covered": self.covered,
            "feasible": self.feasible,
            "total": self.total,
            "ratio": str(self.ratio) if self.feasible else None,
            "ratio_float": self.ratio_float if self.feasible else None,
            "capped": self.capped,
            "indices": [{"index": index_key(i), "feasible": f, "covered": c} for i, f, c in self.rows],
        }
        return json.dumps(data, indent=1)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["index", "feasible", "covered"])
        for i, f, c in self.rows:
            w.writerow([index_key(i), int(f), int(c)])
        return out.getvalue()


def coverage_report(family: CriterionFamily, suite: Iterable[Sequence[str]], model: TestModel,
                    len_cap: Optional[int] = None) -> CoverageReport:
    hit = covered_indices(family, suite)
    rows = []
    capped = False
    for i in family.indices:
        feasible, c = check_feasible(family, i, model, len_cap)
        capped |= c
        # a suite drawn from the model witnesses feasibility directly
        rows.append((i, feasible or i in hit, i in hit))
    return CoverageReport(
        covered=sum(1 for _, f, c in rows if c and f),
        feasible=sum(1 for _, f, _ in rows if f),
        total=len(family),
        capped=capped,
        rows=rows,
    )


def coverage_ratio(family: CriterionFamily, suite: Iterable[Sequence[str]], model: TestModel,
                   len_cap: Optional[int] = None) -> CoverageReport:
    """Covered over feasible indices; raises ZeroDivisionError when nothing is feasible."""
    report = coverage_report(family, suite, model, len_cap)
    report.ratio  # noqa: B018 - surfaces the undefined case
    return report


def covers(family: CriterionFamily, suite: Iterable[Sequence[str]], model: TestModel,
           len_cap: Optional[int] = None) -> bool:
    """Every index feasible in the model is hit by the suite.

    Families flagged ``complete`` must also have languages whose union is
    every word up to the model's length bound.
    """
    report = coverage_report(family, suite, model, len_cap)
    if report.covered != report.feasible:
        return False
    if family.complete:
        return uncovered_word(family, model.length_bound) is None
    return True


class RankFitness:
    """Rank of suites drawn from a fixed pool, as bitset unions.

    Each pool test's covered indices are packed once; the rank of a suite
    given as pool positions is the popcount of the OR of its rows.
    """

    def __init__(self, family: CriterionFamily, cases: Sequence[Sequence[str]]):
        self.family = family
        rows = [np.packbits(family.cover_vector(c)) for c in cases]
        self.masks = np.stack(rows) if rows else np.zeros((0, 0), dtype=np.uint8)

    def __len__(self) -> int:
        return len(self.masks)

    def __call__(self, suite: Sequence[int]) -> int:
        union = np.bitwise_or.reduce(self.masks[np.asarray(suite, dtype=np.intp)], axis=0)
        return int(np.bitwise_count(union).sum())

    def batch(self, population: np.ndarray) -> np.ndarray:
        """Ranks of every row of a (suites x n) array of pool positions."""
        union = np.bitwise_or.reduce(self.masks[population], axis=1)
        return np.bitwise_count(union).sum(axis=1, dtype=np.int64)


__all__ = [
    "CoverageReport", "CriterionError", "RankFitness", "TestSuite",
    "coverage_ratio", "coverage_report", "covers", "rank",
]
