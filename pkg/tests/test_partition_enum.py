"""Tests for partition_enum.py: counts, level enumeration and chunking."""
import sys
import os

# Ensure project root is on path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from fractions import Fraction

import numpy as np
import pytest

from game_model import CoalitionError, CoalitionStructure, full_mask, validate_structure
from partition_enum import (
    LevelRangeError,
    bell,
    bottom_two,
    bottom_two_count,
    bottom_two_index,
    chunk_bounds,
    coalition_count,
    enumerate_all,
    enumerate_level,
    iter_level_chunks,
    level_index,
    mergers,
    nodes_in_range,
    search_fraction,
    splits,
    stirling,
    structures_containing,
)


# ── Helpers ───────────────────────────────────────────────────────
def _naive_partitions(items):
    """Set partitions by inserting the first item into each block of the rest."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _naive_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


# ── Counting ──────────────────────────────────────────────────────
class TestCounting:

    def test_bell_values(self):
        """1, 2, 5, 15, 52, ..., bell(10) = 115975."""
        assert [bell(a) for a in range(1, 7)] == [1, 2, 5, 15, 52, 203]
        assert bell(10) == 115975

    def test_stirling_rows(self):
        """S(4, l) = 1, 7, 6, 1."""
        assert [stirling(4, l) for l in range(1, 5)] == [1, 7, 6, 1]

    def test_level_sizes_sum_to_bell(self):
        """Sum over levels is bell(a) for a <= 20."""
        for a in range(1, 21):
            assert sum(stirling(a, l) for l in range(1, a + 1)) == bell(a)

    def test_bottom_two_count(self):
        """2^(a-1) = S(a,1) + S(a,2)."""
        for a in range(2, 21):
            assert bottom_two_count(a) == 2 ** (a - 1) == 1 + stirling(a, 2)

    def test_bell_growth(self):
        """bell(a) >= (a/2)^(a/2)."""
        for a in range(2, 21):
            assert Fraction(bell(a)) ** 2 >= Fraction(a, 2) ** a

    def test_coalition_count_and_fraction(self):
        """a=3: 7 coalitions, 4 of 5 structures searched."""
        assert coalition_count(3) == 7
        assert search_fraction(3) == Fraction(4, 5)
        assert search_fraction(10) == Fraction(512, 115975)

    def test_level_out_of_range(self):
        """Level 0 and level a+1 do not exist."""
        with pytest.raises(LevelRangeError):
            stirling(4, 0)
        with pytest.raises(LevelRangeError):
            stirling(4, 5)

    def test_bell_25_exact(self):
        """Exact big-int count at the agent cap."""
        assert bell(25) == 4638590332229999353


# ── Enumeration ───────────────────────────────────────────────────
class TestEnumeration:

    def test_level_sizes_match_counts(self):
        """Enumerated level sizes equal S(a, l) for a <= 8."""
        for a in range(1, 9):
            for l in range(1, a + 1):
                assert sum(1 for _ in enumerate_level(a, l)) == stirling(a, l)

    def test_matches_naive_enumerator(self):
        """Same partitions as an independent recursive enumerator, a=6."""
        a = 6
        ours = set(enumerate_all(a))
        naive = set()
        for part in _naive_partitions(list(range(1, a + 1))):
            masks = [sum(1 << (i - 1) for i in block) for block in part]
            naive.add(validate_structure(a, masks))
        assert ours == naive
        assert len(ours) == bell(a)

    def test_every_structure_valid_and_on_its_level(self):
        """Each enumerated structure partitions A and has l coalitions."""
        for l in range(1, 6):
            for cs in enumerate_level(5, l):
                assert validate_structure(5, cs.coalitions) == cs
                assert cs.level == l

    def test_enumerate_all_order(self):
        """Level 1 first, level a last."""
        nodes = list(enumerate_all(4))
        assert nodes[0].level == 1
        assert nodes[-1].level == 4
        assert [cs.level for cs in nodes] == sorted(cs.level for cs in nodes)

    def test_bottom_two_covers_every_coalition(self):
        """Every nonempty coalition appears in some bottom-two node."""
        for a in range(2, 9):
            seen = set()
            nodes = list(bottom_two(a))
            for cs in nodes:
                seen.update(cs.coalitions)
            assert len(nodes) == bottom_two_count(a)
            assert seen == set(range(1, full_mask(a) + 1))

    def test_bottom_two_index(self):
        """Position in bottom_two order, None beyond level 2."""
        nodes = list(bottom_two(5))
        for i, cs in enumerate(nodes):
            assert bottom_two_index(cs) == i
        assert bottom_two_index(next(enumerate_level(5, 3))) is None

    def test_level_index(self):
        """level_index inverts enumerate_level order."""
        for l in (1, 2, 3, 4):
            for i, cs in enumerate(enumerate_level(5, l)):
                assert level_index(cs) == i


# ── Graph arcs ────────────────────────────────────────────────────
class TestArcs:

    def test_splits_count(self):
        """A coalition of size s splits 2^(s-1) - 1 ways; lowest agent stays in part one."""
        s = 0b10110
        parts = list(splits(s))
        assert len(parts) == 3
        for p, q in parts:
            assert p | q == s and p & q == 0
            assert p & 0b10

    def test_singleton_cannot_split(self):
        """Splitting needs at least two members."""
        with pytest.raises(CoalitionError):
            list(splits(0b100))

    def test_mergers_go_down_one_level(self):
        """All singletons of 4 agents merge into C(4,2) = 6 level-3 nodes."""
        top = CoalitionStructure(4, (1, 2, 4, 8))
        below = list(mergers(top))
        assert len(below) == 6
        assert all(cs.level == 3 for cs in below)

    @pytest.mark.parametrize("a", [3, 4, 5])
    def test_split_then_merge_restores_coalition(self, a):
        """Splitting S inside a structure and merging the halves gives back a structure holding S."""
        for cs in enumerate_all(a):
            for s in cs.coalitions:
                if s & (s - 1) == 0:
                    continue
                rest = [m for m in cs.coalitions if m != s]
                for p, q in splits(s):
                    finer = validate_structure(a, rest + [p, q])
                    assert finer.level == cs.level + 1
                    merged = list(mergers(finer))
                    assert cs in merged
                    assert any(s in m.coalitions for m in merged)

    def test_mergers_refuse_grand_coalition(self):
        """A level-1 structure has no pair to merge."""
        with pytest.raises(LevelRangeError):
            list(mergers(CoalitionStructure(4, (0b1111,))))

    def test_structures_containing(self):
        """{1,2} with a=4 appears in S(2,1) + S(2,2) = 2 structures."""
        found = list(structures_containing(4, 0b0011))
        assert len(found) == 2
        assert all(0b0011 in cs for cs in found)


# ── Chunks ────────────────────────────────────────────────────────
class TestChunks:

    def test_chunk_bounds_balanced(self):
        """10 into 4 -> sizes 3, 3, 2, 2, contiguous."""
        b = chunk_bounds(10, 4)
        assert [e - s for s, e in b] == [3, 3, 2, 2]
        assert b[0][0] == 0 and b[-1][1] == 10

    def test_chunk_bounds_needs_one(self):
        """Zero pieces is an error."""
        with pytest.raises(CoalitionError):
            chunk_bounds(5, 0)

    def test_chunks_match_enumeration(self):
        """Concatenated chunks equal enumerate_level, for several chunk sizes."""
        for l in (2, 3, 4):
            expected = [cs.coalitions for cs in enumerate_level(6, l)]
            for chunk in (1, 7, 4096):
                rows = np.concatenate(list(iter_level_chunks(6, l, chunk)))
                assert [tuple(int(m) for m in r) for r in rows] == expected

    def test_nodes_in_range(self):
        """Positions 3..6 of level 3, a=5."""
        expected = list(enumerate_level(5, 3))[3:7]
        assert list(nodes_in_range(5, 3, 3, 7)) == expected
