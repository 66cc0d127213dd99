"""
partition_enum.py – The coalition structure graph, level by level.

Level l holds the partitions of A into exactly l coalitions: level 1 is the
grand coalition at the bottom, level a is all singletons at the top. Arcs
merge two coalitions going down and split one coalition going up.

Enumeration uses restricted growth strings (agent 1 always opens block 0),
so each partition is produced once and no dedup pass is needed. Level 2 is
special-cased: mask m in 1 .. 2^(a-1)-1 is the coalition without agent a,
its complement the other one. That ordering is shared with `bottom_two`.

Search code consumes levels as numpy chunks (rows of l masks) so a value
table can be summed across a whole chunk at once; small graphs
(a <= LEVEL_CACHE_MAX_AGENTS) are materialized once and cached.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, islice
from typing import Iterator

import numpy as np

from game_model import (
    CoalitionError,
    CoalitionStructure,
    check_agent_count,
    check_coalition,
    coalition_size,
    full_mask,
)

LEVEL_CACHE_MAX_AGENTS = 10
DEFAULT_CHUNK = 4096


class LevelRangeError(CoalitionError):
    pass


def check_level(a: int, l: int) -> int:
    a = check_agent_count(a)
    if not 1 <= l <= a:
        raise LevelRangeError(f"level must be in [1, {a}], got {l}")
    return int(l)


# ── Counting ──────────────────────────────────────────────────────
@dataclass(frozen=True)
class CountTable:
    """Exact Stirling numbers of the second kind S(n, i) and Bell numbers."""
    stirling: tuple[tuple[int, ...], ...]   # stirling[n][i], 0 <= i <= n
    bell: tuple[int, ...]                   # bell[n]


@lru_cache(maxsize=None)
def count_table(n_max: int) -> CountTable:
    """S(n, i) = i S(n-1, i) + S(n-1, i-1), S(n, n) = S(n, 1) = 1."""
    rows = [[1]]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        row = [0] * (n + 1)
        for i in range(1, n + 1):
            below = prev[i] if i < len(prev) else 0
            row[i] = i * below + prev[i - 1]
        rows.append(row)
    return CountTable(
        stirling=tuple(tuple(r) for r in rows),
        bell=tuple(sum(r) for r in rows),
    )


def stirling(a: int, l: int) -> int:
    """Size of level l: S(a, l)."""
    check_level(a, l)
    return count_table(a).stirling[a][l]


def bell(a: int) -> int:
    """Number of nodes m in the coalition structure graph."""
    a = check_agent_count(a)
    return count_table(a).bell[a]


def coalition_count(a: int) -> int:
    return (1 << check_agent_count(a)) - 1


def bottom_two_count(a: int) -> int:
    """n_min = 1 + (2^a - 2) / 2 = 2^(a-1)."""
    return 1 << (check_agent_count(a) - 1)


def search_fraction(a: int) -> Fraction:
    """Share of the graph the minimal search visits: 2^(a-1) / bell(a)."""
    return Fraction(bottom_two_count(a), bell(a))


# ── Enumeration ───────────────────────────────────────────────────
def _rgs_level(a: int, l: int) -> Iterator[tuple[int, ...]]:
    """Partitions of {0..a-1} into exactly l blocks, as sorted mask tuples."""
    blocks = [0] * l

    def rec(i: int, used: int):
        if i == a:
            yield tuple(sorted(blocks))
            return
        bit = 1 << i
        # enough agents must remain to open the blocks still missing
        if a - i > l - used:
            for b in range(used):
                blocks[b] |= bit
                yield from rec(i + 1, used)
                blocks[b] ^= bit
        if used < l:
            blocks[used] = bit
            yield from rec(i + 1, used + 1)
            blocks[used] = 0

    yield from rec(0, 0)


def _level2_tuples(a: int, start: int = 1, stop: int | None = None) -> Iterator[tuple[int, int]]:
    full = full_mask(a)
    half = 1 << (a - 1)
    stop = half if stop is None else min(stop, half)
    for m in range(max(start, 1), stop):
        yield (m, full ^ m)


def _level_tuples(a: int, l: int) -> Iterator[tuple[int, ...]]:
    if l == 1:
        yield (full_mask(a),)
    elif l == 2:
        yield from _level2_tuples(a)
    elif l == a:
        yield tuple(1 << i for i in range(a))
    else:
        yield from _rgs_level(a, l)


def enumerate_level(a: int, l: int) -> Iterator[CoalitionStructure]:
    """Every structure with exactly l coalitions, once, in a fixed order."""
    l = check_level(a, l)
    for t in _level_tuples(a, l):
        yield CoalitionStructure(a, t)


def enumerate_all(a: int) -> Iterator[CoalitionStructure]:
    """The whole graph, level 1 first; bell(a) structures."""
    a = check_agent_count(a)
    for l in range(1, a + 1):
        yield from enumerate_level(a, l)


def bottom_two(a: int) -> Iterator[CoalitionStructure]:
    """
    The grand coalition, then every level-2 structure: 2^(a-1) nodes that
    between them contain every nonempty coalition.
    """
    a = check_agent_count(a)
    yield CoalitionStructure(a, (full_mask(a),))
    for t in _level2_tuples(a):
        yield CoalitionStructure(a, t)


def bottom_two_index(cs: CoalitionStructure) -> int | None:
    """Position of `cs` in `bottom_two(cs.a)` order, None when not there."""
    if cs.level == 1:
        return 0
    if cs.level == 2:
        return cs.coalitions[0]
    return None


def splits(s: int) -> Iterator[tuple[int, int]]:
    """
    Unordered splits of coalition s into two nonempty parts; the first part
    always holds the lowest agent of s. 2^(|s|-1) - 1 of them.
    """
    if s <= 0:
        raise CoalitionError(f"not a coalition mask: {s}")
    if coalition_size(s) < 2:
        raise CoalitionError("a singleton coalition cannot be split")
    low = s & -s
    rest = s ^ low
    sub = 0
    while sub != rest:
        yield (low | sub, rest ^ sub)
        sub = (sub - rest) & rest


def mergers(cs: CoalitionStructure) -> Iterator[CoalitionStructure]:
    """Each structure one level down, obtained by merging one pair."""
    if cs.level < 2:
        raise LevelRangeError("the grand coalition has nothing to merge")
    members = cs.coalitions
    for i, j in combinations(range(len(members)), 2):
        merged = members[i] | members[j]
        rest = [m for k, m in enumerate(members) if k != i and k != j]
        rest.append(merged)
        yield CoalitionStructure(cs.a, tuple(sorted(rest)))


def structures_containing(a: int, s: int) -> Iterator[CoalitionStructure]:
    """All structures of the graph that have s as a member."""
    s = check_coalition(a, s)
    for cs in enumerate_all(a):
        if s in cs.coalitions:
            yield cs


# ── Index ranges and numpy chunks ────────────────────────────────
def chunk_bounds(count: int, n_chunks: int) -> list[tuple[int, int]]:
    """
    Split range(count) into n_chunks contiguous [start, stop) pieces whose
    sizes differ by at most one; earlier pieces get the extra element.
    """
    if n_chunks < 1:
        raise CoalitionError(f"need at least one chunk, got {n_chunks}")
    base, extra = divmod(count, n_chunks)
    bounds = []
    start = 0
    for i in range(n_chunks):
        size = base + (1 if i < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


@lru_cache(maxsize=64)
def level_array(a: int, l: int) -> np.ndarray:
    """Whole level as an (S(a, l), l) int64 array; small graphs only."""
    l = check_level(a, l)
    if a > LEVEL_CACHE_MAX_AGENTS:
        raise CoalitionError(
            f"level_array is limited to a <= {LEVEL_CACHE_MAX_AGENTS}; use iter_level_chunks")
    arr = np.array(list(_level_tuples(a, l)), dtype=np.int64).reshape(-1, l)
    arr.flags.writeable = False
    return arr


def level2_array(a: int, start: int, stop: int) -> np.ndarray:
    """Level-2 rows for lower masks start .. stop-1, built without Python loops."""
    lo = np.arange(start, stop, dtype=np.int64)
    return np.stack([lo, full_mask(a) ^ lo], axis=1)


def iter_level_chunks(a: int, l: int, chunk: int = DEFAULT_CHUNK,
                      start: int = 0, stop: int | None = None) -> Iterator[np.ndarray]:
    """
    Level l (index range [start, stop)) as consecutive (k, l) mask arrays,
    in `enumerate_level` order.
    """
    l = check_level(a, l)
    size = stirling(a, l)
    stop = size if stop is None else min(stop, size)
    if start >= stop:
        return
    if l == 2:
        # index i <-> lower mask i + 1
        for s in range(start, stop, chunk):
            yield level2_array(a, s + 1, min(s + chunk, stop) + 1)
        return
    if a <= LEVEL_CACHE_MAX_AGENTS:
        arr = level_array(a, l)
        for s in range(start, stop, chunk):
            yield arr[s:min(s + chunk, stop)]
        return
    it = islice(_level_tuples(a, l), start, stop)
    while True:
        batch = list(islice(it, chunk))
        if not batch:
            return
        yield np.array(batch, dtype=np.int64).reshape(-1, l)


def nodes_in_range(a: int, l: int, start: int, stop: int) -> Iterator[CoalitionStructure]:
    """Structures at positions [start, stop) of level l."""
    for rows in iter_level_chunks(a, l, start=start, stop=stop):
        for row in rows:
            yield CoalitionStructure(a, tuple(int(m) for m in row))


def level_index(cs: CoalitionStructure) -> int:
    """Position of `cs` within `enumerate_level(cs.a, cs.level)`."""
    if cs.level == 1:
        return 0
    if cs.level == 2:
        return cs.coalitions[0] - 1
    for i, t in enumerate(_level_tuples(cs.a, cs.level)):
        if t == cs.coalitions:
            return i
    raise CoalitionError(f"{cs} is not a structure of level {cs.level}")
