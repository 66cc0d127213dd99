"""
search.py – Anytime searches over the coalition structure graph.

Every search walks whole levels (or the bottom-two block) in the fixed
order of partition_enum, evaluates nodes chunk by chunk with numpy, and
keeps only the incumbent and a node counter. Checkpoints are emitted
where a bound can change:

  - after the bottom two levels      (bound a)
  - after each completed level       (bound per algorithm, see below)
  - when the budget or stop signal ends the run

Bounds by algorithm:
  - css1:       bottom two levels, then levels a, a-1, ..., 3;
                bound a, then bounds.css1_bound_at_level per level.
  - splitting:  levels 1, 2, ..., a; bound a after level 2, 1 at the end.
  - merging:    levels a, a-1, ..., 1; no bound until the graph is done.

Ties never replace the incumbent, so the first structure in visit order
wins. With threads > 1 a level range is split into contiguous pieces and
the per-piece winners are merged in piece order with the same rule, which
gives the same result as a single thread.
"""
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from bounds import css1_bound_at_level
from game_model import (
    AgentCountError,
    CoalitionError,
    CoalitionStructure,
    Game,
    SearchCapError,
)
from partition_enum import (
    DEFAULT_CHUNK,
    bell,
    chunk_bounds,
    iter_level_chunks,
    stirling,
)

EXHAUSTIVE_SOFT_CAP = 14
EXHAUSTIVE_HARD_CAP = 18

PRE_BOUND = "pre-bound"
BOTTOM_TWO_COMPLETE = "bottom-two-complete"
EXHAUSTED = "exhausted"


def top_level_phase(l: int) -> str:
    return f"top-level-{l}-complete"


def bottom_level_phase(l: int) -> str:
    return f"bottom-level-{l}-complete"


@dataclass(frozen=True)
class Budget:
    max_nodes: int | None = None   # None = unlimited

    def __post_init__(self):
        if self.max_nodes is not None and self.max_nodes < 1:
            raise CoalitionError(f"node budget must be >= 1, got {self.max_nodes}")

    def remaining(self, n: int) -> int | None:
        return None if self.max_nodes is None else max(self.max_nodes - n, 0)


@dataclass(frozen=True)
class Checkpoint:
    n: int
    best_value: float
    best_cs: CoalitionStructure
    bound: int | None
    phase: str


@dataclass
class AnytimeResult:
    algorithm: str
    a: int
    checkpoints: list[Checkpoint] = field(default_factory=list)

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    @property
    def best_cs(self) -> CoalitionStructure:
        return self.final.best_cs

    @property
    def best_value(self) -> float:
        return self.final.best_value

    @property
    def bound(self) -> int | None:
        return self.final.bound

    @property
    def n(self) -> int:
        return self.final.n

    @property
    def phase(self) -> str:
        return self.final.phase

    def bounded_checkpoints(self) -> list[Checkpoint]:
        return [c for c in self.checkpoints if c.bound is not None]


def realized_ratio(optimum: float, best_value: float) -> float:
    """V(CS*) / V(CS*_N); inf when nothing of value has been seen yet."""
    if best_value <= 0:
        return 1.0 if optimum <= 0 else float("inf")
    return optimum / best_value


# ── Evaluation engine ─────────────────────────────────────────────
def _best_in_range(table: np.ndarray, a: int, l: int, start: int, stop: int,
                   chunk: int) -> tuple[float, np.ndarray | None, int]:
    best_value, best_row, count = -np.inf, None, 0
    for rows in iter_level_chunks(a, l, chunk, start, stop):
        vals = table[rows].sum(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best_value:
            best_value, best_row = float(vals[i]), rows[i].copy()
        count += len(rows)
    return best_value, best_row, count


class _Tracker:
    """Incumbent, node counter and checkpoint list shared by all searches."""

    def __init__(self, game: Game, algorithm: str, budget: Budget | None,
                 stop: Callable[[], bool] | None, threads: int, chunk: int,
                 verbose: bool):
        if threads < 1:
            raise CoalitionError(f"threads must be >= 1, got {threads}")
        self.game = game
        self.a = game.a
        self.budget = budget or Budget()
        self.stop = stop
        self.threads = threads
        self.chunk = chunk
        self.verbose = verbose
        self.n = 0
        self.best_value = -np.inf
        self.best_cs: CoalitionStructure | None = None
        self.bound: int | None = None
        self.phase = PRE_BOUND
        self.halted = False
        self.result = AnytimeResult(algorithm, game.a)

    def _offer(self, value: float, row) -> None:
        if row is not None and value > self.best_value:
            self.best_value = value
            self.best_cs = CoalitionStructure(self.a, tuple(int(m) for m in row))

    def _stopped(self) -> bool:
        if self.budget.remaining(self.n) == 0:
            return True
        return self.stop is not None and bool(self.stop())

    def visit_level(self, l: int, start: int = 0, stop: int | None = None) -> bool:
        """Visit positions [start, stop) of level l; True when the range was finished."""
        size = stirling(self.a, l)
        stop = size if stop is None else min(stop, size)
        remaining = self.budget.remaining(self.n)
        end = stop if remaining is None else min(stop, start + remaining)
        table = self.game.table

        # stop is polled only once an incumbent exists
        if self.threads > 1 and end - start > self.chunk:
            if self.n > 0 and self._stopped():
                self.halted = True
                return False
            pieces = [(start + s, start + e) for s, e in chunk_bounds(end - start, self.threads)]
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(
                    lambda p: _best_in_range(table, self.a, l, p[0], p[1], self.chunk), pieces))
            for value, row, count in parts:
                self._offer(value, row)
                self.n += count
        else:
            for rows in iter_level_chunks(self.a, l, self.chunk, start, end):
                if self.n > 0 and self.stop is not None and self.stop():
                    self.halted = True
                    return False
                vals = table[rows].sum(axis=1)
                i = int(np.argmax(vals))
                self._offer(float(vals[i]), rows[i])
                self.n += len(rows)

        if end < stop:
            self.halted = True
            return False
        return True

    def checkpoint(self, bound: int | None = None, phase: str | None = None) -> None:
        if bound is not None:
            self.bound = bound if self.bound is None else min(self.bound, bound)
        if phase is not None:
            self.phase = phase
        last = self.result.checkpoints[-1] if self.result.checkpoints else None
        cp = Checkpoint(self.n, self.best_value, self.best_cs, self.bound, self.phase)
        if last is not None and last == cp:
            return
        self.result.checkpoints.append(cp)
        if self.verbose:
            bound = "-" if self.bound is None else self.bound
            print(f"[search] {self.result.algorithm} a={self.a}: {self.phase} "
                  f"n={self.n} best={self.best_value:.6g} k={bound}")

    def finish(self) -> AnytimeResult:
        """Close the trace with a budget/stop checkpoint if one is missing."""
        if not self.result.checkpoints or self.result.checkpoints[-1].n != self.n:
            self.checkpoint()
        return self.result


def _check_search_game(game: Game) -> None:
    if game.a < 2:
        raise AgentCountError(f"searches need at least two agents, got {game.a}")


def _visit_bottom_two(t: _Tracker, mark_exhausted: bool = True) -> bool:
    if not t.visit_level(1) or not t.visit_level(2):
        return False
    t.checkpoint(t.a, BOTTOM_TWO_COMPLETE)
    # a = 2: the bottom two levels are the whole graph
    if mark_exhausted and t.n >= bell(t.a):
        t.checkpoint(1, EXHAUSTED)
    return True


# ── Algorithms ────────────────────────────────────────────────────
def exhaustive_search(game: Game, verbose: bool = False) -> tuple[CoalitionStructure, float]:
    """CS* = argmax over the whole graph; ties go to the first structure in level order."""
    if game.a > EXHAUSTIVE_HARD_CAP:
        raise SearchCapError(
            f"exhaustive search is refused above a={EXHAUSTIVE_HARD_CAP} "
            f"(bell({game.a}) = {bell(game.a)} structures)")
    if game.a > EXHAUSTIVE_SOFT_CAP:
        warnings.warn(f"exhaustive search at a={game.a} visits {bell(game.a)} structures",
                      RuntimeWarning, stacklevel=2)
    t = _Tracker(game, "exhaustive", None, None, 1, DEFAULT_CHUNK, verbose)
    for l in range(1, game.a + 1):
        t.visit_level(l)
    if verbose:
        print(f"[search] exhaustive a={game.a}: optimum {t.best_value:.6g} over {t.n} structures")
    return t.best_cs, t.best_value


def search_bottom_two(game: Game, budget: Budget | None = None,
                      stop: Callable[[], bool] | None = None, threads: int = 1,
                      chunk: int = DEFAULT_CHUNK, verbose: bool = False) -> AnytimeResult:
    """Grand coalition plus level 2: the minimal search that establishes a bound (k = a)."""
    _check_search_game(game)
    t = _Tracker(game, "bottom-two", budget, stop, threads, chunk, verbose)
    _visit_bottom_two(t, mark_exhausted=False)
    return t.finish()


def css1(game: Game, budget: Budget | None = None, stop: Callable[[], bool] | None = None,
         threads: int = 1, chunk: int = DEFAULT_CHUNK, verbose: bool = False) -> AnytimeResult:
    """
    Bottom two levels first, then breadth-first from the top node down to
    level 3. Returns the best structure seen when the budget runs out.
    """
    _check_search_game(game)
    t = _Tracker(game, "css1", budget, stop, threads, chunk, verbose)
    if _visit_bottom_two(t):
        for l in range(t.a, 2, -1):
            if not t.visit_level(l):
                break
            if l == 3 or t.n >= bell(t.a):
                t.checkpoint(1, EXHAUSTED)
                break
            t.checkpoint(css1_bound_at_level(t.a, l), top_level_phase(l))
    return t.finish()


def splitting_search(game: Game, budget: Budget | None = None,
                     stop: Callable[[], bool] | None = None, threads: int = 1,
                     chunk: int = DEFAULT_CHUNK, verbose: bool = False) -> AnytimeResult:
    """Breadth-first from the bottom node; bound stays a until the graph is exhausted."""
    _check_search_game(game)
    t = _Tracker(game, "splitting", budget, stop, threads, chunk, verbose)
    if t.visit_level(1):
        t.checkpoint(phase=PRE_BOUND)
        if t.visit_level(2):
            t.checkpoint(t.a, BOTTOM_TWO_COMPLETE)
            for l in range(3, t.a + 1):
                if not t.visit_level(l):
                    break
                t.checkpoint(phase=bottom_level_phase(l))
            if not t.halted:
                t.checkpoint(1, EXHAUSTED)
    return t.finish()


def merging_search(game: Game, budget: Budget | None = None,
                   stop: Callable[[], bool] | None = None, threads: int = 1,
                   chunk: int = DEFAULT_CHUNK, verbose: bool = False) -> AnytimeResult:
    """Breadth-first from the top node; the grand coalition is only seen last, so no bound until then."""
    _check_search_game(game)
    t = _Tracker(game, "merging", budget, stop, threads, chunk, verbose)
    for l in range(t.a, 0, -1):
        if not t.visit_level(l):
            break
        if l == 1:
            t.checkpoint(1, EXHAUSTED)
        else:
            t.checkpoint(phase=top_level_phase(l))
    return t.finish()


def _exhaustive_as_trace(game: Game, budget: Budget | None = None,
                         stop: Callable[[], bool] | None = None, threads: int = 1,
                         chunk: int = DEFAULT_CHUNK, verbose: bool = False) -> AnytimeResult:
    cs, value = exhaustive_search(game, verbose=verbose)
    result = AnytimeResult("exhaustive", game.a)
    result.checkpoints.append(Checkpoint(bell(game.a), value, cs, 1, EXHAUSTED))
    return result


# ── Registry ──────────────────────────────────────────────────────
ALGORITHMS = {
    "exhaustive": {
        "func": _exhaustive_as_trace,
        "description": "Whole graph, refused above a=18; ignores the budget",
    },
    "bottom-two": {
        "func": search_bottom_two,
        "description": "Grand coalition and level 2 only (2^(a-1) nodes, bound a)",
    },
    "css1": {
        "func": css1,
        "description": "Bottom two levels, then breadth-first from the top",
    },
    "splitting": {
        "func": splitting_search,
        "description": "Breadth-first from the bottom (baseline)",
    },
    "merging": {
        "func": merging_search,
        "description": "Breadth-first from the top (baseline)",
    },
}


def run_algorithm(name: str, game: Game, budget: Budget | None = None, **kwargs) -> AnytimeResult:
    if name not in ALGORITHMS:
        raise CoalitionError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    return ALGORITHMS[name]["func"](game, budget, **kwargs)
