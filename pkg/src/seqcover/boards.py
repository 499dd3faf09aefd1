"""Tic-tac-toe style games on an n x n board and their symmetry classes.

Cells are numbered row-major ``1..n*n``. A play is a sequence of cells, X
moving first; the game ends when the mover completes a full row, column or
diagonal, or when the board is full.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator, Sequence


class IllegalPlay(ValueError):
    pass


class EnumerationBudgetExceeded(RuntimeError):
    pass


@lru_cache(maxsize=None)
def symmetries(n: int) -> tuple[tuple[int, ...], ...]:
    """The 8 rotations/reflections as cell maps (index 0 unused)."""

    def cell(r, c):
        return r * n + c + 1

    maps = []
    for transform in (
        lambda r, c: (r, c),
        lambda r, c: (c, n - 1 - r),
        lambda r, c: (n - 1 - r, n - 1 - c),
        lambda r, c: (n - 1 - c, r),
        lambda r, c: (r, n - 1 - c),
        lambda r, c: (n - 1 - r, c),
        lambda r, c: (c, r),
        lambda r, c: (n - 1 - c, n - 1 - r),
    ):
        m = [0] * (n * n + 1)
        for r in range(n):
            for c in range(n):
                m[cell(r, c)] = cell(*transform(r, c))
        maps.append(tuple(m))
    return tuple(maps)


@lru_cache(maxsize=None)
def _lines_through(n: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    lines = [tuple(r * n + c + 1 for c in range(n)) for r in range(n)]
    lines += [tuple(r * n + c + 1 for r in range(n)) for c in range(n)]
    lines.append(tuple(i * n + i + 1 for i in range(n)))
    lines.append(tuple(i * n + (n - 1 - i) + 1 for i in range(n)))
    through = [()] + [tuple(line for line in lines if cell in line) for cell in range(1, n * n + 1)]
    return tuple(through)


def _wins(board: list, cell: int, n: int) -> bool:
    mark = board[cell]
    return any(all(board[c] == mark for c in line) for line in _lines_through(n)[cell])


def check_play(play: Sequence[int], n: int) -> bool:
    """Validate ``play``; return True when it is a complete game."""
    board = [0] * (n * n + 1)
    over = False
    for k, cell in enumerate(play):
        if over:
            raise IllegalPlay(f"move {k + 1} ({cell}) after the game is over")
        if not isinstance(cell, int) or not 1 <= cell <= n * n:
            raise IllegalPlay(f"cell {cell!r} is off the {n}x{n} board")
        if board[cell]:
            raise IllegalPlay(f"cell {cell} played twice")
        board[cell] = 1 if k % 2 == 0 else 2
        over = _wins(board, cell, n) or k + 1 == n * n
    return over


def canonical(play: Sequence, n: int = 3) -> tuple[int, ...]:
    """Canonical representative of ``play`` under board symmetries.

    Symmetries are applied move by move: each move is replaced by the least
    cell in its orbit under the symmetries that fix the board built so far,
    and the chosen symmetry is carried into the rest of the play. Plays
    related by any of the 8 symmetries get the same representative.
    """
    moves = tuple(int(c) for c in play)
    check_play(moves, n)
    return _canonical(moves, n)


def _stabilizer(board: tuple, n: int) -> list[tuple[int, ...]]:
    return [g for g in symmetries(n) if all(board[g[c]] == board[c] for c in range(1, n * n + 1))]


@lru_cache(maxsize=1 << 20)
def _canonical_state(moves: tuple[int, ...], n: int) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    # (canonical prefix, canonical board, cell map from the original play)
    if not moves:
        return (), (0,) * (n * n + 1), tuple(range(n * n + 1))
    prefix, board, g = _canonical_state(moves[:-1], n)
    cell = g[moves[-1]]
    best = None
    for h in _stabilizer(board, n):
        if best is None or h[cell] < best[cell]:
            best = h
    rep = best[cell]
    new_board = list(board)
    new_board[rep] = 1 if len(moves) % 2 else 2
    return prefix + (rep,), tuple(new_board), tuple(best[g[c]] for c in range(n * n + 1))


def _canonical(moves: tuple[int, ...], n: int) -> tuple[int, ...]:
    return _canonical_state(moves, n)[0]


def lexicographic_min(play: Sequence[int], n: int = 3) -> tuple[int, ...]:
    """Least image of the whole play under the 8 symmetries.

    Finer than :func:`canonical`, which also merges plays whose suffixes differ
    by a symmetry of the board reached so far.
    """
    moves = tuple(int(c) for c in play)
    return min(tuple(m[c] for c in moves) for m in symmetries(n))


def enumerate_games(n: int = 3, budget: int = 5_000_000) -> Iterator[tuple[int, ...]]:
    """Yield every complete game; raise once more than ``budget`` nodes are visited."""
    size = n * n
    board = [0] * (size + 1)
    play: list[int] = []
    visited = 0

    def rec() -> Iterator[tuple[int, ...]]:
        nonlocal visited
        mark = 1 if len(play) % 2 == 0 else 2
        for cell in range(1, size + 1):
            if board[cell]:
                continue
            visited += 1
            if visited > budget:
                raise EnumerationBudgetExceeded(
                    f"{n}x{n} game tree exceeds the enumeration budget of {budget} nodes")
            board[cell] = mark
            play.append(cell)
            if _wins(board, cell, n) or len(play) == size:
                yield tuple(play)
            else:
                yield from rec()
            play.pop()
            board[cell] = 0

    yield from rec()


def enumerate_classes(n: int = 3, budget: int = 5_000_000) -> Iterator[tuple[int, ...]]:
    """Yield the canonical representative of every symmetry class of complete games.

    Walks the game tree keeping only moves that are least in their orbit
    under the stabilizer of the current board.
    """
    size = n * n
    board = [0] * (size + 1)
    play: list[int] = []
    visited = 0

    def rec() -> Iterator[tuple[int, ...]]:
        nonlocal visited
        mark = 1 if len(play) % 2 == 0 else 2
        stab = _stabilizer(tuple(board), n)
        for cell in range(1, size + 1):
            if board[cell] or min(h[cell] for h in stab) != cell:
                continue
            visited += 1
            if visited > budget:
                raise EnumerationBudgetExceeded(
                    f"{n}x{n} game tree exceeds the enumeration budget of {budget} nodes")
            board[cell] = mark
            play.append(cell)
            if _wins(board, cell, n) or len(play) == size:
                yield tuple(play)
            else:
                yield from rec()
            play.pop()
            board[cell] = 0

    yield from rec()


def game_statistics(n: int = 3, budget: int = 5_000_000) -> dict[str, int]:
    games = sum(1 for _ in enumerate_games(n, budget))
    classes = sum(1 for _ in enumerate_classes(n, budget))
    return {
        "games": games,
        "classes": classes,
        "permutations": math.factorial(n * n),
        "first_move_classes": len({_canonical((c,), n) for c in range(1, n * n + 1)}),
    }


@lru_cache(maxsize=4)
def game_classes(n: int = 3, budget: int = 5_000_000) -> tuple[tuple[int, ...], ...]:
    """Sorted canonical representatives of all complete games."""
    return tuple(sorted(enumerate_classes(n, budget)))
