"""Search for high-rank test suites drawn from a pool.

Suites are individuals of ``n`` distinct pool positions. The genetic
algorithm uses tournament selection, partially matched crossover and
uniform test-replacement mutation, with generational replacement plus one
elite. ``random_suite`` and ``best_of_k`` are the baselines.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coverage import TestSuite

Fitness = Callable[[Sequence[int]], float]


@dataclass(frozen=True)
class GaParams:
    n: int
    population_size: int = 100
    mutation_prob: float = 0.05
    crossover_prob: float = 0.7
    tournament_k: int = 3
    max_generations: int = 300
    epsilon: float = 0.001
    convergence_window: int = 50
    elitism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("suite size n must be at least 1")
        for name in ("mutation_prob", "crossover_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 1 <= self.tournament_k <= self.population_size:
            raise ValueError("tournament_k must be between 1 and population_size")
        if not 0 <= self.elitism < self.population_size:
            raise ValueError("elitism must be smaller than population_size")
        if self.epsilon < 0 or self.convergence_window < 1 or self.max_generations < 1:
            raise ValueError("epsilon >= 0, convergence_window >= 1 and max_generations >= 1 required")


@dataclass
class EvolutionLog:
    best: list = field(default_factory=list)
    mean: list = field(default_factory=list)
    millis: list = field(default_factory=list)
    reason: str = ""

    @property
    def generations(self) -> int:
        return len(self.best)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["generation", "best", "mean", "millis"])
        for g, (b, m, t) in enumerate(zip(self.best, self.mean, self.millis)):
            w.writerow([g, b, f"{m:.4f}", f"{t:.2f}"])
        return out.getvalue()


def _check_size(pool_size: int, n: int):
    if n < 1:
        raise ValueError("suite size must be at least 1")
    if pool_size < n:
        raise ValueError(f"pool has {pool_size} tests, fewer than the suite size {n}")


def _evaluate(fitness, population: np.ndarray) -> np.ndarray:
    batch = getattr(fitness, "batch", None)
    if batch is not None:
        return np.asarray(batch(population), dtype=float)
    return np.array([fitness(row) for row in population], dtype=float)


def _unused(pool_size: int, present, draw: Callable[[], int], rng: np.random.Generator) -> Optional[int]:
    """Uniform pool position not in ``present``; None if every position is used."""
    if len(present) >= pool_size:
        return None
    if pool_size > 2 * len(present):
        while True:
            c = draw()
            if c not in present:
                return c
    free = np.setdiff1d(np.arange(pool_size), np.fromiter(present, dtype=np.int64))
    return int(free[rng.integers(len(free))])


class _Draws:
    """Buffered uniform pool positions; keeps the inner loops free of generator calls."""

    def __init__(self, rng: np.random.Generator, pool_size: int, chunk: int = 256):
        self.rng, self.pool_size, self.chunk = rng, pool_size, chunk
        self.buf: list = []

    def __call__(self) -> int:
        if not self.buf:
            self.buf = self.rng.integers(self.pool_size, size=self.chunk).tolist()
        return self.buf.pop()


def pmx_crossover(a: Sequence[int], b: Sequence[int], rng: np.random.Generator,
                  pool_size: Optional[int] = None, cuts: Optional[tuple[int, int]] = None):
    """Partially matched crossover of two suites of equal size.

    ``cuts=(lo, hi)`` selects the exchanged segment ``[lo, hi)``; it is drawn
    at random (non-empty) when omitted. Child one keeps ``a``'s segment and
    fills the rest from ``b`` through the segment mapping, child two the
    reverse. Any position still duplicated (only possible when a parent
    repeats a value) is replaced by an unused pool position.
    """
    a, b = list(a), list(b)
    n = len(a)
    if len(b) != n:
        raise ValueError("parents must have the same size")
    if cuts is None:
        lo = int(rng.integers(n)) if n else 0
        hi = lo + 1 + int(rng.integers(n - lo)) if n else 0
    else:
        lo, hi = cuts
    if pool_size is None:
        pool_size = max(a + b, default=-1) + 1
    draw = _Draws(rng, pool_size)
    return _pmx_child(a, b, lo, hi, draw, rng, pool_size), _pmx_child(b, a, lo, hi, draw, rng, pool_size)


def _pmx_child(keep: list, fill: list, lo: int, hi: int, draw, rng, pool_size: int) -> list:
    child = fill[:]
    child[lo:hi] = keep[lo:hi]
    segment = {v: k for k, v in enumerate(keep[lo:hi], start=lo)}
    n = len(child)
    for i in range(n):
        if lo <= i < hi:
            continue
        v = fill[i]
        hops = 0
        while v in segment and hops <= n:
            v = fill[segment[v]]
            hops += 1
        child[i] = v
    if len(set(child)) < n:
        seen = set()
        for i, v in enumerate(child):
            if v in seen:
                r = _unused(pool_size, set(child), draw, rng)
                if r is not None:
                    child[i] = v = r
            seen.add(v)
    return child


def mutate(individual: Sequence[int], pool_size: int, p: float, rng: np.random.Generator) -> list:
    """Replace each position, with probability ``p``, by an unused pool position."""
    out = list(individual)
    if p <= 0:
        return out
    _mutate_at(out, np.flatnonzero(rng.random(len(out)) < p).tolist(), pool_size, _Draws(rng, pool_size), rng)
    return out


def _mutate_at(out: list, positions, pool_size: int, draw, rng) -> None:
    if not positions:
        return
    present = set(out)
    for k in positions:
        r = _unused(pool_size, present, draw, rng)
        if r is None:
            continue
        present.discard(out[k])
        present.add(r)
        out[k] = r


def _tournament(fit: np.ndarray, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    contenders = rng.integers(len(fit), size=(count, k))
    winners = np.argmax(fit[contenders], axis=1)
    return contenders[np.arange(count), winners]


def evolve_indices(pool_size: int, params: GaParams, fitness: Fitness) -> tuple[list, EvolutionLog]:
    """Run the GA over pool positions; returns the best individual and the log."""
    _check_size(pool_size, params.n)
    rng = np.random.default_rng(params.seed)
    draw = _Draws(rng, pool_size)
    size, n = params.population_size, params.n
    population = np.stack([rng.choice(pool_size, size=n, replace=False) for _ in range(size)])
    log = EvolutionLog()
    start = time.perf_counter()
    best_ind, best_fit = None, -np.inf
    pairs = (size - params.elitism + 1) // 2

    for gen in range(params.max_generations):
        fit = _evaluate(fitness, population)
        top = int(np.argmax(fit))
        if fit[top] > best_fit:
            best_fit, best_ind = float(fit[top]), population[top].copy()
        log.best.append(float(fit[top]))
        log.mean.append(float(fit.mean()))
        log.millis.append((time.perf_counter() - start) * 1000)

        w = params.convergence_window
        if len(log.best) > w and abs(log.best[-1] - log.best[-1 - w]) <= params.epsilon:
            log.reason = "converged"
            break
        if gen == params.max_generations - 1:
            log.reason = "max-generations"
            break

        elite = np.argsort(-fit, kind="stable")[: params.elitism]
        offspring = [population[e].tolist() for e in elite]
        parents = _tournament(fit, params.tournament_k, 2 * pairs, rng).reshape(pairs, 2)
        cross = (rng.random(pairs) < params.crossover_prob).tolist()
        lo = rng.integers(n, size=pairs)
        hi = (lo + 1 + np.floor(rng.random(pairs) * (n - lo))).astype(np.int64)
        mutation = rng.random((2 * pairs, n)) < params.mutation_prob
        rows = population.tolist()
        for j in range(pairs):
            a, b = rows[parents[j, 0]], rows[parents[j, 1]]
            if cross[j]:
                l, h = int(lo[j]), int(hi[j])
                a, b = (_pmx_child(a, b, l, h, draw, rng, pool_size),
                        _pmx_child(b, a, l, h, draw, rng, pool_size))
            else:
                a, b = a[:], b[:]
            for c, child in enumerate((a, b)):
                if len(offspring) < size:
                    _mutate_at(child, np.flatnonzero(mutation[2 * j + c]).tolist(), pool_size, draw, rng)
                    offspring.append(child)
        population = np.array(offspring, dtype=np.int64)

    return best_ind.tolist(), log


def evolve_suite(pool, params: GaParams, fitness: Fitness) -> tuple[TestSuite, EvolutionLog]:
    """GA over ``pool``; ``fitness`` maps a list of pool positions to a number."""
    if len(pool) == 0:
        raise ValueError("pool is empty")
    best, log = evolve_indices(len(pool), params, fitness)
    return TestSuite(tuple(pool[i] for i in best)), log


def random_indices(pool_size: int, n: int, seed) -> list:
    _check_size(pool_size, n)
    rng = np.random.default_rng(seed)
    return rng.choice(pool_size, size=n, replace=False).tolist()


def random_suite(pool, n: int, seed) -> TestSuite:
    """Uniform n-subset of the pool."""
    return TestSuite(tuple(pool[i] for i in random_indices(len(pool), n, seed)))


def best_of_k_indices(pool_size: int, n: int, fitness: Fitness, k: int, seed) -> list:
    _check_size(pool_size, n)
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = np.random.default_rng(seed)
    samples = np.stack([rng.choice(pool_size, size=n, replace=False) for _ in range(k)])
    fit = _evaluate(fitness, samples)
    return samples[int(np.argmax(fit))].tolist()  # argmax keeps the first of ties


def best_of_k(pool, n: int, fitness: Fitness, k: int, seed) -> TestSuite:
    """Best of ``k`` uniform n-subsets; ``k=1`` equals :func:`random_suite`."""
    return TestSuite(tuple(pool[i] for i in best_of_k_indices(len(pool), n, fitness, k, seed)))
