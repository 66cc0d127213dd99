"""
game_model.py – Characteristic function games, coalitions and coalition structures.

Representation:
  - A coalition is an int bitmask: bit i-1 set <=> agent i is a member.
  - A Game holds a dense table of v_S for every nonempty mask 1 .. 2^a-1.
  - A CoalitionStructure is a tuple of disjoint, exhaustive masks kept in
    ascending order, so equal partitions compare and hash equal.

Game file format (text, one record per line):
    # comment
    agents 3
    1,1.0
    6,0.5
Masks may appear in any order, duplicates are an error and absent masks
default to 0.0.
"""
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

MAX_AGENTS = 25


# ── Errors ────────────────────────────────────────────────────────
class CoalitionError(ValueError):
    """Base class for every domain error raised by this project."""


class AgentCountError(CoalitionError):
    pass


class CoalitionRangeError(CoalitionError):
    pass


class EmptyCoalitionError(CoalitionError):
    pass


class OverlapError(CoalitionError):
    pass


class NonExhaustiveError(CoalitionError):
    pass


class NonFiniteValueError(CoalitionError):
    pass


class NegativeValueError(CoalitionError):
    pass


class SearchCapError(CoalitionError):
    """Refusal: the requested enumeration is too large for this agent count."""


class GameFileError(CoalitionError):
    """Malformed game file. Message is prefixed with `path:lineno:`."""

    def __init__(self, path: str, lineno: int, msg: str):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


class ShiftWarning(UserWarning):
    """A constant was added to every coalition value; the argmax may move."""


# ── Mask helpers ──────────────────────────────────────────────────
def check_agent_count(a: int) -> int:
    if not isinstance(a, (int, np.integer)) or isinstance(a, bool):
        raise AgentCountError(f"agent count must be an integer, got {a!r}")
    if a < 1 or a > MAX_AGENTS:
        raise AgentCountError(f"agent count must be in [1, {MAX_AGENTS}], got {a}")
    return int(a)


def full_mask(a: int) -> int:
    """Mask of the grand coalition A."""
    return (1 << a) - 1


def coalition_size(mask: int) -> int:
    return int(mask).bit_count()


def members(mask: int) -> list[int]:
    """Agents (1-based, ascending) in a coalition mask."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(agents: Iterable[int]) -> int:
    """Inverse of `members`: {1, 3} -> 0b101."""
    mask = 0
    for i in agents:
        if i < 1:
            raise CoalitionRangeError(f"agent ids are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def check_coalition(a: int, mask: int) -> int:
    if mask == 0:
        raise EmptyCoalitionError("coalition mask is empty")
    if mask < 0 or mask > full_mask(a):
        raise CoalitionRangeError(f"mask {mask} out of range for a={a}")
    return int(mask)


# ── Game ──────────────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class Game:
    """
    Characteristic function game over `a` agents.

    `table` has length 2^a with table[0] = 0.0 so it can be indexed by mask
    directly (search loops rely on this); `values` is the public 1..2^a-1 view.
    Both arrays are read-only.
    """
    a: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_agent_count(self.a)
        table = np.asarray(self.table, dtype=np.float64)
        if table.shape != (1 << self.a,):
            raise CoalitionError(
                f"value table must have {1 << self.a} entries (mask 0 included), "
                f"got shape {table.shape}")
        if not np.all(np.isfinite(table)):
            raise NonFiniteValueError("coalition values must be finite")
        if np.any(table < 0):
            raise NegativeValueError(
                "coalition values must be >= 0 (see shift_values)")
        if table[0] != 0.0:
            raise CoalitionError("table[0] (empty coalition) must be 0")
        table = table.copy()
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @classmethod
    def from_values(cls, a: int, values) -> "Game":
        """Build from the 2^a-1 values indexed by mask 1 .. 2^a-1."""
        a = check_agent_count(a)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != ((1 << a) - 1,):
            raise CoalitionError(
                f"expected {(1 << a) - 1} values for a={a}, got shape {values.shape}")
        return cls(a, np.concatenate(([0.0], values)))

    @classmethod
    def from_dict(cls, a: int, values: dict[int, float]) -> "Game":
        """Build from {mask: value}; absent masks are 0.0."""
        a = check_agent_count(a)
        table = np.zeros(1 << a)
        for mask, v in values.items():
            table[check_coalition(a, mask)] = v
        return cls(a, table)

    @property
    def values(self) -> np.ndarray:
        return self.table[1:]

    @property
    def grand(self) -> int:
        return full_mask(self.a)

    @property
    def max_value(self) -> float:
        return float(self.table.max())


# ── Coalition structures ──────────────────────────────────────────
@dataclass(frozen=True, order=True)
class CoalitionStructure:
    """
    Partition of A into coalitions, canonical order = ascending mask.

    The constructor trusts its input (enumerators build these by the
    million); go through `validate_structure` for anything user supplied.
    """
    a: int
    coalitions: tuple[int, ...]

    @property
    def level(self) -> int:
        return len(self.coalitions)

    def __iter__(self) -> Iterator[int]:
        return iter(self.coalitions)

    def __len__(self) -> int:
        return len(self.coalitions)

    def __contains__(self, mask) -> bool:
        return mask in self.coalitions

    def as_members(self) -> list[list[int]]:
        return [members(m) for m in self.coalitions]


def validate_structure(a: int, coalitions: Iterable[int]) -> CoalitionStructure:
    """
    Check that `coalitions` partition the agent set and return the
    canonical structure. Each failure mode has its own error class.
    """
    a = check_agent_count(a)
    masks = [int(m) for m in coalitions]
    seen = 0
    for m in masks:
        check_coalition(a, m)
        if seen & m:
            shared = members(seen & m)
            raise OverlapError(f"agents {shared} appear in more than one coalition")
        seen |= m
    if seen != full_mask(a):
        missing = members(full_mask(a) & ~seen)
        raise NonExhaustiveError(f"agents {missing} are in no coalition")
    return CoalitionStructure(a, tuple(sorted(masks)))


def grand_coalition_structure(a: int) -> CoalitionStructure:
    return CoalitionStructure(a, (full_mask(a),))


def singleton_structure(a: int) -> CoalitionStructure:
    return CoalitionStructure(a, tuple(1 << i for i in range(a)))


# ── Values ────────────────────────────────────────────────────────
def coalition_value(game: Game, s: int) -> float:
    """v_S, a pure lookup."""
    return float(game.table[check_coalition(game.a, s)])


def structure_value(game: Game, cs: CoalitionStructure | Iterable[int]) -> float:
    """V(CS) = sum of v_S over the coalitions of CS."""
    masks = cs.coalitions if isinstance(cs, CoalitionStructure) else tuple(cs)
    if isinstance(cs, CoalitionStructure) and cs.a != game.a:
        raise AgentCountError(f"structure is over {cs.a} agents, game over {game.a}")
    validate_structure(game.a, masks)
    return float(sum(game.table[m] for m in sorted(masks)))


def shift_values(values, a: int | None = None) -> tuple[Game, bool]:
    """
    Normalize a value table so every v_S >= 0.

    `values` is either a Game-like 1..2^a-1 array (then `a` is required) or a
    Game. When the minimum is negative it is subtracted from every entry and
    a ShiftWarning is emitted; the second return item says whether that
    happened. A shift adds -min * level(CS) to V(CS), so the welfare argmax
    can change.
    """
    if isinstance(values, Game):
        return values, False
    if a is None:
        raise AgentCountError("shift_values needs the agent count for a raw table")
    raw = np.asarray(values, dtype=np.float64)
    if raw.shape != ((1 << check_agent_count(a)) - 1,):
        raise CoalitionError(f"expected {(1 << a) - 1} values for a={a}, got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise NonFiniteValueError("coalition values must be finite")
    lo = float(raw.min())
    if lo >= 0:
        return Game.from_values(a, raw), False
    warnings.warn(
        f"coalition values shifted by {-lo:g}; V(CS) changes by {-lo:g} per "
        f"coalition and the welfare-maximizing structure may differ",
        ShiftWarning, stacklevel=2)
    return Game.from_values(a, raw - lo), True


def is_superadditive(game: Game) -> bool:
    """v(S u T) >= v(S) + v(T) for all disjoint nonempty S, T."""
    t = game.table
    full = full_mask(game.a)
    for s in range(1, full + 1):
        rest = full & ~s
        # only T > S so each unordered pair is checked once
        t_mask = rest
        while t_mask:
            if t_mask > s and t[s | t_mask] < t[s] + t[t_mask]:
                return False
            t_mask = (t_mask - 1) & rest
    return True


# ── Game files ────────────────────────────────────────────────────
def parse_game_lines(lines: Iterable[str], path: str = "<input>") -> tuple[int, np.ndarray]:
    """
    Parse the game file format into (a, raw values indexed by mask-1).
    Negative values are allowed here; `load_game` decides what to do.
    """
    a = None
    raw = None
    seen: set[int] = set()
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if a is None:
            parts = text.split()
            if len(parts) != 2 or parts[0] != "agents":
                raise GameFileError(path, lineno, "first record must be 'agents <a>'")
            try:
                a = check_agent_count(int(parts[1]))
            except ValueError as e:
                raise GameFileError(path, lineno, f"bad agent count: {e}") from None
            raw = np.zeros((1 << a) - 1)
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise GameFileError(path, lineno, f"expected '<mask>,<value>', got {text!r}")
        try:
            mask = int(parts[0])
        except ValueError:
            raise GameFileError(path, lineno, f"mask is not an integer: {parts[0]!r}") from None
        try:
            value = float(parts[1])
        except ValueError:
            raise GameFileError(path, lineno, f"value is not a number: {parts[1]!r}") from None
        if mask < 1 or mask > full_mask(a):
            raise GameFileError(path, lineno, f"mask {mask} out of range 1..{full_mask(a)}")
        if not math.isfinite(value):
            raise GameFileError(path, lineno, f"value must be finite, got {parts[1].strip()}")
        if mask in seen:
            raise GameFileError(path, lineno, f"duplicate mask {mask}")
        seen.add(mask)
        raw[mask - 1] = value
    if a is None:
        raise GameFileError(path, 0, "file has no 'agents <a>' record")
    return a, raw


def load_game(path: str, shift: bool = False, verbose: bool = False) -> Game:
    """
    Read a game file. Negative values are rejected unless `shift` is set,
    in which case `shift_values` normalizes them (and warns).
    """
    with open(path) as f:
        a, raw = parse_game_lines(f, path)
    if raw.min() < 0 and not shift:
        bad = int(np.argmin(raw)) + 1
        raise NegativeValueError(
            f"{path}: mask {bad} has negative value {raw[bad - 1]:g}; "
            f"rerun with shifting enabled to normalize")
    game, shifted = shift_values(raw, a)
    if verbose:
        note = " (shifted to nonnegative)" if shifted else ""
        print(f"[game] Loaded a={a} game from {path}{note}")
    return game


def save_game(game: Game, path: str, header: str | None = None) -> None:
    """Write `game` in the game file format; zero entries are omitted."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as f:
        f.write(format_game(game, header))


def format_game(game: Game, header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append(f"agents {game.a}")
    for mask in np.flatnonzero(game.table):
        lines.append(f"{int(mask)},{float(game.table[mask])!r}")
    return "\n".join(lines) + "\n"
