"""
bounds.py – Worst-case ratio bounds for searches of the coalition structure graph.

Closed forms:
  - Bottom two levels searched (n = 2^(a-1)):  k = a.
  - CSS-1 after completing top-down level l, with h = floor((a-l)/2) + 2:
        k = ceil(a/h)   if a = h-1 (mod h) and a = l (mod 2)
        k = floor(a/h)  otherwise
  - Whole graph searched: k = 1.

The oracle side (`worst_case_ratio`) does not use any of the above: it
enumerates every 0/1 game whose valued coalitions form a disjoint family T
and takes the largest V(CS*)/V(CS*_N) = |T| / max_{CS' in N} |T & CS'|.
Every tightness witness used for the closed forms lives in that family, so
agreement between the two sides certifies the closed forms are tight.

Node sets N are described symbolically (which levels, minus which
structures) and only expanded when the oracle needs them.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator

import numpy as np

from game_model import (
    CoalitionError,
    CoalitionStructure,
    SearchCapError,
    check_agent_count,
    coalition_size,
    full_mask,
)
from partition_enum import (
    LevelRangeError,
    bell,
    bottom_two_count,
    check_level,
    enumerate_all,
    enumerate_level,
    stirling,
)

ORACLE_MAX_AGENTS = 7
MINIMALITY_EXHAUSTIVE_AGENTS = 4
BOUND_VARIANTS = ("statement", "proof")


# ── Closed forms ──────────────────────────────────────────────────
def h_value(a: int, l: int) -> int:
    """h = floor((a - l) / 2) + 2."""
    check_level(a, l)
    return (a - l) // 2 + 2


def _check_sweep_level(a: int, l: int) -> None:
    check_level(a, l)
    if l < 3:
        raise LevelRangeError(f"CSS-1's top-down sweep covers levels {a}..3, got {l}")


def bound_after_level(a: int, l: int, variant: str = "statement") -> int:
    """
    Bound k once CSS-1 has completed top-down level l (3 <= l <= a).

    variant="statement" tests a = h-1 (mod h); variant="proof" tests the
    a = h-1 (mod h-1) condition that appears in the argument for the ceiling
    case. Only "statement" is used by the search; "proof" exists so the
    oracle suite can say which reading a mismatch agrees with.
    """
    _check_sweep_level(a, l)
    h = h_value(a, l)
    if variant == "statement":
        mod_ok = a % h == h - 1
    elif variant == "proof":
        mod_ok = a % (h - 1) == 0
    else:
        raise CoalitionError(f"unknown bound variant {variant!r}; use one of {BOUND_VARIANTS}")
    if mod_ok and (a - l) % 2 == 0:
        return -(-a // h)
    return a // h


def css1_level_n(a: int, l: int) -> int:
    """Nodes CSS-1 has visited once top-down level l is complete."""
    check_level(a, l)
    return bottom_two_count(a) + sum(stirling(a, j) for j in range(l, a + 1))


def css1_bound_at_level(a: int, l: int) -> int:
    """Bound CSS-1 reports at its level-l checkpoint (1 once the graph is exhausted)."""
    _check_sweep_level(a, l)
    if l == 3 or css1_level_n(a, l) >= bell(a):
        return 1
    return bound_after_level(a, l)


def css1_bound_staircase(a: int) -> list[tuple[int, int | None]]:
    """
    The step function k(n) of CSS-1 as (n, k) change points. The leading
    (1, None) row stands for "no bound below n = 2^(a-1)". When two points
    share an n (a = 2: bottom two levels are the whole graph) the later one
    wins.
    """
    a = check_agent_count(a)
    if a < 2:
        raise CoalitionError("the staircase needs at least two agents")
    n_min = bottom_two_count(a)
    points: list[tuple[int, int | None]] = []
    if n_min > 1:
        points.append((1, None))
    points.append((n_min, a))
    if n_min >= bell(a):
        points.append((n_min, 1))
    else:
        for l in range(a, 2, -1):
            points.append((css1_level_n(a, l), css1_bound_at_level(a, l)))
    out: list[tuple[int, int | None]] = []
    for n, k in points:
        if out and out[-1][0] == n:
            out[-1] = (n, k)
        elif out and out[-1][1] == k:
            continue
        else:
            out.append((n, k))
    return out


def staircase_bound_at(staircase: list[tuple[int, int | None]], n: int) -> int | None:
    """k(n) read off a staircase; None before the first bounded step."""
    k = None
    for step_n, step_k in staircase:
        if step_n > n:
            break
        k = step_k
    return k


def splitting_level_n(a: int, l: int) -> int:
    """Nodes the splitting search has visited once bottom-up level l is complete."""
    check_level(a, l)
    return sum(stirling(a, j) for j in range(1, l + 1))


def splitting_bad_case_curve(a: int) -> list[tuple[int, Fraction]]:
    """
    Realized V(CS*)/V(CS*_N) of the splitting search on the singleton game:
    a/(l-1) after bottom-up level l, and 1 once the top level is done.
    This is a bad case, not a proven bound.
    """
    a = check_agent_count(a)
    curve = []
    for l in range(2, a + 1):
        ratio = Fraction(1) if l == a else Fraction(a, l - 1)
        curve.append((splitting_level_n(a, l), ratio))
    return curve


# ── Node-set descriptors ─────────────────────────────────────────
@dataclass(frozen=True)
class NodeSet:
    """Whole levels of the graph, minus explicitly excluded structures."""
    a: int
    levels: frozenset[int]
    excluded: frozenset[CoalitionStructure] = field(default_factory=frozenset)
    label: str = ""

    def __post_init__(self):
        for l in self.levels:
            check_level(self.a, l)

    def __contains__(self, cs: CoalitionStructure) -> bool:
        return cs.level in self.levels and cs not in self.excluded

    def __iter__(self) -> Iterator[CoalitionStructure]:
        for l in sorted(self.levels):
            for cs in enumerate_level(self.a, l):
                if cs not in self.excluded:
                    yield cs

    def size(self) -> int:
        total = sum(stirling(self.a, l) for l in self.levels)
        return total - sum(1 for cs in self.excluded if cs.level in self.levels)

    def without(self, *structures: CoalitionStructure) -> "NodeSet":
        return NodeSet(self.a, self.levels, self.excluded | frozenset(structures),
                       f"{self.label} minus {len(structures)}".strip())


def bottom_two_nodes(a: int) -> NodeSet:
    a = check_agent_count(a)
    return NodeSet(a, frozenset({1, 2} & set(range(1, a + 1))), label="bottom-two")


def all_nodes(a: int) -> NodeSet:
    a = check_agent_count(a)
    return NodeSet(a, frozenset(range(1, a + 1)), label="all")


def css1_nodes(a: int, l: int) -> NodeSet:
    """Bottom two levels plus top-down levels a .. l."""
    check_level(a, l)
    levels = {1, 2} | set(range(l, a + 1))
    return NodeSet(a, frozenset(x for x in levels if x <= a), label=f"css1 through level {l}")


def splitting_nodes(a: int, l: int) -> NodeSet:
    check_level(a, l)
    return NodeSet(a, frozenset(range(1, l + 1)), label=f"splitting through level {l}")


def merging_nodes(a: int, l: int) -> NodeSet:
    check_level(a, l)
    return NodeSet(a, frozenset(range(l, a + 1)), label=f"merging through level {l}")


def css1_checkpoint_node_sets(a: int) -> list[tuple[int, NodeSet]]:
    """(n, N) for every CSS-1 checkpoint: bottom two, then each top-down level."""
    a = check_agent_count(a)
    out = [(bottom_two_count(a), bottom_two_nodes(a))]
    for l in range(a, 2, -1):
        out.append((css1_level_n(a, l), css1_nodes(a, l)))
    return out


# ── Worst-case oracle ─────────────────────────────────────────────
def _popcounts(n_bits: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(1 << n_bits)], dtype=np.int64)


def worst_case_ratio(a: int, nodes: NodeSet, verbose: bool = False) -> Fraction | None:
    """
    Largest |T| / max_{CS' in N} |T & CS'| over every structure CS and
    nonempty sub-family T of its coalitions, i.e. the worst V(CS*)/V(CS*_N)
    over 0/1 games valued 1 exactly on T. Returns None (unbounded) when some
    T has no coalition in any visited structure.
    """
    a = check_agent_count(a)
    if a > ORACLE_MAX_AGENTS:
        raise SearchCapError(f"worst_case_ratio is limited to a <= {ORACLE_MAX_AGENTS}, got {a}")
    if nodes.a != a:
        raise CoalitionError(f"node set is over {nodes.a} agents, expected {a}")
    visited = list(nodes)
    if not visited:
        return None
    # row r, column m: does visited structure r contain coalition m
    contains = np.zeros((len(visited), 1 << a), dtype=bool)
    for r, cs in enumerate(visited):
        contains[r, list(cs.coalitions)] = True
    pop = _popcounts(a)

    best = Fraction(0)
    for cs in enumerate_all(a):
        l = cs.level
        weights = np.int64(1) << np.arange(l, dtype=np.int64)
        seen = np.unique(contains[:, list(cs.coalitions)].astype(np.int64) @ weights)
        families = np.arange(1, 1 << l, dtype=np.int64)
        overlap = pop[families[:, None] & seen[None, :]].max(axis=1)
        if np.any(overlap == 0):
            if verbose:
                print(f"[oracle] a={a} {nodes.label}: unbounded (family of {cs} never seen)")
            return None
        sizes = pop[families]
        for d in np.unique(overlap):
            ratio = Fraction(int(sizes[overlap == d].max()), int(d))
            if ratio > best:
                best = ratio
    if verbose:
        print(f"[oracle] a={a} {nodes.label}: worst ratio {best}")
    return best


# ── Minimality of the bottom-two search ──────────────────────────
@dataclass
class MinimalityVerdict:
    a: int
    mode: str
    ok: bool
    subsets_checked: int = 0
    covering_sets: list[frozenset] = field(default_factory=list)
    min_replacements: dict = field(default_factory=dict)


def covers_all_coalitions(a: int, structures) -> bool:
    """Does every nonempty coalition appear in at least one of `structures`?"""
    seen = set()
    for cs in structures:
        seen.update(cs.coalitions)
    return len(seen) == full_mask(a)


def minimality_check(a: int, mode: str = "exhaustive") -> MinimalityVerdict:
    """
    exhaustive (a = 4 only): scan every node subset of size <= 2^(a-1) and
    confirm the bottom two levels are the only one seeing every coalition.

    spot (any a <= ORACLE_MAX_AGENTS): P | Q = A for a level-2 node {P, Q},
    so no other node holds both halves and a replacement needs at least two
    nodes. The check comes down to whether both halves appear elsewhere:
    2 when they do, None when one of them appears in no other node.
    """
    a = check_agent_count(a)
    if mode == "exhaustive":
        if a != MINIMALITY_EXHAUSTIVE_AGENTS:
            raise SearchCapError(
                f"exhaustive minimality scan runs at a={MINIMALITY_EXHAUSTIVE_AGENTS} only, got {a}")
        nodes = list(enumerate_all(a))
        cover = [sum(1 << (m - 1) for m in cs.coalitions) for cs in nodes]
        full_cover = (1 << full_mask(a)) - 1
        n_min = bottom_two_count(a)
        covering = []
        checked = 0
        for k in range(1, n_min + 1):
            for idx in combinations(range(len(nodes)), k):
                checked += 1
                acc = 0
                for i in idx:
                    acc |= cover[i]
                if acc == full_cover:
                    covering.append(frozenset(nodes[i] for i in idx))
        bottom = frozenset(bottom_two_nodes(a))
        ok = len(covering) == 1 and covering[0] == bottom and covers_all_coalitions(a, bottom)
        return MinimalityVerdict(a, mode, ok, subsets_checked=checked, covering_sets=covering)

    if mode == "spot":
        if a > ORACLE_MAX_AGENTS or a < 3:
            raise SearchCapError(f"spot minimality check runs for 3 <= a <= {ORACLE_MAX_AGENTS}")
        others_by_coalition: dict[int, list[CoalitionStructure]] = {}
        for cs in enumerate_all(a):
            for m in cs.coalitions:
                others_by_coalition.setdefault(m, []).append(cs)
        need = {}
        for node in enumerate_level(a, 2):
            p, q = node.coalitions
            with_p = [cs for cs in others_by_coalition[p] if cs != node]
            with_q = [cs for cs in others_by_coalition[q] if cs != node]
            need[node] = 2 if with_p and with_q else None
        ok = all(v is None or v >= 2 for v in need.values())
        return MinimalityVerdict(a, mode, ok, subsets_checked=len(need), min_replacements=need)

    raise CoalitionError(f"unknown minimality mode {mode!r}; use 'exhaustive' or 'spot'")


# ── Pairing structure behind the closed form ─────────────────────
@dataclass
class PairingReport:
    a: int
    l: int
    h: int
    partner_limit: int                       # h-2 when a = l (mod 2), else h-1
    h_pairs_seen: list[tuple[int, int]]       # size-h coalitions seen together
    missing_partners: list[tuple[int, int]]   # (size-h coalition, partner never seen with it)

    @property
    def holds(self) -> bool:
        """
        Size-h coalitions never meet except as the two halves of a level-2
        node (possible only when a = 2h), and each meets every small enough
        disjoint coalition.
        """
        full = full_mask(self.a)
        return (not self.missing_partners
                and all(p | q == full for p, q in self.h_pairs_seen))


def pairing_check(a: int, l: int) -> PairingReport:
    """Enumerate what CSS-1 has seen after top-down level l and test the pairing claim."""
    _check_sweep_level(a, l)
    if a > ORACLE_MAX_AGENTS + 1:
        raise SearchCapError(f"pairing_check is limited to a <= {ORACLE_MAX_AGENTS + 1}")
    h = h_value(a, l)
    limit = h - 2 if (a - l) % 2 == 0 else h - 1
    together: dict[int, set[int]] = {}
    h_pairs = set()
    for cs in css1_nodes(a, l):
        big = [m for m in cs.coalitions if coalition_size(m) == h]
        for x, y in combinations(big, 2):
            h_pairs.add((min(x, y), max(x, y)))
        for m in big:
            together.setdefault(m, set()).update(o for o in cs.coalitions if o != m)
    full = full_mask(a)
    missing = []
    for m in range(1, full + 1):
        if coalition_size(m) != h:
            continue
        rest = full & ~m
        s = rest
        while s:
            if coalition_size(s) <= limit and s not in together.get(m, ()):
                missing.append((m, s))
            s = (s - 1) & rest
    return PairingReport(a, l, h, limit, sorted(h_pairs), missing)
