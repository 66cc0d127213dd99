"""
adversarial.py – Witness games that make the search bounds hold with equality.

Every generator returns a Game with nonnegative values. Witness games are
0/1 valued: a designated family of disjoint coalitions is worth 1 each,
every other coalition 0, so V(CS*) is the size of the family and the best
structure a search has seen is worth however many family members it
contained at once.

Generator catalog:
  singleton         – v_S = 1 for |S| = 1; optimum a, bottom two levels see 1
  level-tight:<l>   – designated size-h family for the CSS-1 checkpoint at level l
  uniform-random:<seed> – i.i.d. values uniform on [0, 1) (soundness tests)

Witness partitions pack agents in ascending order: the first coalition
takes the lowest-numbered agents, the next one the following agents, etc.
"""
from dataclasses import dataclass

import numpy as np

from bounds import bound_after_level, css1_bound_at_level, h_value
from game_model import (
    CoalitionError,
    CoalitionStructure,
    Game,
    check_agent_count,
    full_mask,
    validate_structure,
)
from partition_enum import LevelRangeError, check_level

WITNESS_KINDS = ("singleton", "level-tight")


@dataclass(frozen=True)
class WitnessSpec:
    kind: str
    a: int
    l: int | None = None   # level-tight only

    def __post_init__(self):
        check_agent_count(self.a)
        if self.kind not in WITNESS_KINDS:
            raise CoalitionError(f"unknown witness kind {self.kind!r}; use one of {WITNESS_KINDS}")
        if self.kind == "level-tight":
            if self.l is None:
                raise LevelRangeError("level-tight witnesses need a level")
            check_level(self.a, self.l)
            if self.l < 3:
                raise LevelRangeError(f"level-tight witnesses need 3 <= l <= a, got l={self.l}")


def _packed(sizes: list[int]) -> list[int]:
    """Consecutive blocks of agents with the given sizes, lowest agents first."""
    masks, offset = [], 0
    for size in sizes:
        masks.append(((1 << size) - 1) << offset)
        offset += size
    return masks


# ─────────────────────────────────────────────────────────────────────
# Singleton game (bottom-two tightness, splitting bad case)
# ─────────────────────────────────────────────────────────────────────
def singleton_game(a: int) -> Game:
    """v_S = 1 iff |S| = 1, else 0."""
    a = check_agent_count(a)
    if a < 2:
        raise CoalitionError("singleton_game needs at least two agents")
    return Game.from_dict(a, {1 << i: 1.0 for i in range(a)})


def splitting_adversary(a: int) -> Game:
    """
    The singleton game under the name used for the splitting baseline:
    after completing bottom-up level l the splitting search has seen at
    most l-1 singletons together, so its realized ratio is a/(l-1).
    """
    return singleton_game(a)


# ─────────────────────────────────────────────────────────────────────
# Level-tight witnesses for CSS-1 checkpoints
# ─────────────────────────────────────────────────────────────────────
def witness_family(a: int, l: int) -> tuple[list[int], list[int]]:
    """
    (valued, unvalued) coalitions of the level-l witness partition.

    Ceiling case (a = h-1 mod h and a = l mod 2): floor(a/h) coalitions of
    size h and one of size h-1, all valued.
    Floor case: floor(a/h) valued coalitions of size h, remainder unvalued.
    When a = 2h the two size-h halves form a level-2 node, so the witness
    uses sizes h and h-1 instead and leaves one agent unvalued.
    """
    spec = WitnessSpec("level-tight", a, l)
    h = h_value(spec.a, spec.l)
    q, r = divmod(a, h)
    if bound_after_level(a, l) > q:
        return _packed([h] * q + [h - 1]), []
    if q == 2 and r == 0:
        blocks = _packed([h, h - 1, 1])
        return blocks[:2], blocks[2:]
    blocks = _packed([h] * q + ([r] if r else []))
    return blocks[:q], blocks[q:]


def level_tight_game(a: int, l: int) -> tuple[Game, int]:
    """
    Witness game for the CSS-1 checkpoint after top-down level l, and the
    ratio V(CS*) / V(CS*_N) it realizes there. At l = 3 the graph is
    exhausted and the ratio is 1.
    """
    valued, _ = witness_family(a, l)
    game = Game.from_dict(a, {m: 1.0 for m in valued})
    return game, css1_bound_at_level(a, l)


def witness_structure(a: int, l: int) -> CoalitionStructure:
    """Partition formed by the witness family and its unvalued remainder."""
    valued, unvalued = witness_family(a, l)
    return validate_structure(a, valued + unvalued)


# ─────────────────────────────────────────────────────────────────────
# Random games
# ─────────────────────────────────────────────────────────────────────
def uniform_random_game(a: int, seed: int) -> Game:
    """Values i.i.d. uniform on [0, 1) from np.random.default_rng(seed)."""
    a = check_agent_count(a)
    rng = np.random.default_rng(seed)
    return Game.from_values(a, rng.random(full_mask(a)))


def random_games(a: int, count: int, seed: int):
    """`count` independent uniform games, one child seed each."""
    for child in np.random.SeedSequence(seed).spawn(count):
        yield Game.from_values(a, np.random.default_rng(child).random(full_mask(a)))


# ─────────────────────────────────────────────────────────────────────
# Registry: all generators in one place
# ─────────────────────────────────────────────────────────────────────
GENERATORS = {
    "singleton": {
        "func": lambda a, arg: (singleton_game(a), a if a >= 3 else 1),
        "arg": None,
        "description": "v_S = 1 for singletons; ratio a after the bottom two levels",
    },
    "level-tight": {
        "func": lambda a, arg: level_tight_game(a, arg),
        "arg": "level",
        "description": "0/1 witness for the CSS-1 checkpoint at the given level",
    },
    "uniform-random": {
        "func": lambda a, arg: (uniform_random_game(a, arg), None),
        "arg": "seed",
        "description": "i.i.d. uniform [0, 1) values",
    },
}


def parse_generator(text: str) -> tuple[str, int | None]:
    """'level-tight:5' -> ('level-tight', 5); 'singleton' -> ('singleton', None)."""
    name, _, arg = text.partition(":")
    if name not in GENERATORS:
        raise CoalitionError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    needs = GENERATORS[name]["arg"]
    if needs is None:
        if arg:
            raise CoalitionError(f"generator {name!r} takes no argument")
        return name, None
    if not arg:
        raise CoalitionError(f"generator {name!r} needs an integer {needs}, e.g. {name}:3")
    try:
        return name, int(arg)
    except ValueError:
        raise CoalitionError(f"generator {name!r}: {needs} must be an integer, got {arg!r}") from None


def make_game(text: str, a: int) -> tuple[Game, int | None]:
    """Build the named game; the second item is the expected ratio when one is known."""
    name, arg = parse_generator(text)
    return GENERATORS[name]["func"](a, arg)
