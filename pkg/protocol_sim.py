"""
protocol_sim.py – Distributed search among self-interested agents, with audits.

One round of the protocol:
  1. The node set to search is fixed: one CSS-1 phase ("bottom-two" or
     "level-<l>"), addressed by position.
  2. The positions are cut into equal (+-1) contiguous shares, randomly
     dealt to the agents.
  3. Each agent searches its share (or not) and reports a structure.
  4. One auditor i and one target j != i are drawn; i re-searches j's share.
     j is caught when i finds something strictly better or when j's claim
     is not in j's share at all. A caught j pays P to i.
  5. The best reported structure is adopted.
  6. Its value is divided among the agents (payoff_division).

Declared inspection payoffs (per audited pair):
    target j:  search -> -c_search        shirk -> 0, or -P when audited
    auditor i: audit  -> -c_audit, +P if j shirked    skip -> 0
Indifference gives q_search = 1 - c_audit/P and p_audit = c_search/P,
both clamped to [0, 1]. p_audit is the chance that a given target is
audited in a round: a drawn auditor re-searches with probability
min(1, k * p_audit), and the target is drawn with probability 1/k, so the
per-target rate is min(p_audit, 1/k).

Randomness: np.random.SeedSequence(seed).spawn(rounds) gives every round
its own default_rng stream, so round t does not depend on how many draws
round t-1 made.
"""
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from game_model import (
    CoalitionError,
    CoalitionStructure,
    Game,
    coalition_size,
    full_mask,
    grand_coalition_structure,
    members,
    singleton_structure,
    validate_structure,
)
from partition_enum import (
    bottom_two_count,
    bottom_two_index,
    chunk_bounds,
    iter_level_chunks,
    level_index,
    stirling,
)

PAYOFF_SCHEMES = ("equal-within-coalition", "coalition-value-to-singletons")
STRATEGY_KINDS = ("truthful", "shirk", "fabricate")
BOTTOM_TWO_PHASE = "bottom-two"


class ProtocolError(CoalitionError):
    pass


class UnknownSchemeError(ProtocolError):
    pass


# ── Configuration ─────────────────────────────────────────────────
@dataclass(frozen=True)
class InspectionParams:
    penalty: float = 10.0     # P, paid by a caught target to its auditor
    c_search: float = 1.0     # cost of searching one's whole share
    c_audit: float = 1.0      # cost of re-searching one share

    def __post_init__(self):
        for name in ("penalty", "c_search", "c_audit"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ProtocolError(f"{name} must be a positive number, got {v}")


@dataclass(frozen=True)
class AgentStrategy:
    """
    kind: truthful, shirk (search only the first `fraction` of the share)
    or fabricate (claim a structure outside the share).
    search_prob: chance per round of searching truthfully anyway.
    audit_prob: chance per round that a given target is audited when this
    agent is the auditor (capped at 1/k by the single audit per round).
    """
    kind: str = "truthful"
    fraction: float = 0.0
    search_prob: float = 0.0
    audit_prob: float = 1.0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ProtocolError(f"unknown strategy {self.kind!r}; use one of {STRATEGY_KINDS}")
        for name in ("fraction", "search_prob", "audit_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ProtocolError(f"{name} must lie in [0, 1], got {v}")

    @property
    def deviation_prob(self) -> float:
        return 0.0 if self.kind == "truthful" else 1.0 - self.search_prob

    def search_cost(self, deviating: bool, params: InspectionParams) -> float:
        if not deviating:
            return params.c_search
        return params.c_search * self.fraction if self.kind == "shirk" else 0.0


def truthful() -> AgentStrategy:
    return AgentStrategy("truthful")


def shirk(fraction: float = 0.0, search_prob: float = 0.0) -> AgentStrategy:
    return AgentStrategy("shirk", fraction=fraction, search_prob=search_prob)


def fabricate(search_prob: float = 0.0) -> AgentStrategy:
    return AgentStrategy("fabricate", search_prob=search_prob)


# ── Shares of a phase ─────────────────────────────────────────────
@dataclass(frozen=True)
class Share:
    phase: str
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start

    def describe(self) -> str:
        return f"{self.phase} indices {self.start}..{self.stop - 1}"


@dataclass(frozen=True)
class Assignment:
    """shares[i] is searched by agent i + 1."""
    phase: str
    node_count: int
    shares: tuple[Share, ...]

    def __post_init__(self):
        covered = sorted((s.start, s.stop) for s in self.shares)
        pos = 0
        for start, stop in covered:
            if start != pos or stop <= start:
                raise ProtocolError("shares must be nonempty, disjoint and cover the phase")
            pos = stop
        if pos != self.node_count:
            raise ProtocolError("shares must be nonempty, disjoint and cover the phase")

    @property
    def num_agents(self) -> int:
        return len(self.shares)


def phase_level(phase: str) -> int | None:
    """None for the bottom-two block, l for "level-<l>"."""
    if phase == BOTTOM_TWO_PHASE:
        return None
    prefix, _, l = phase.partition("-")
    if prefix != "level" or not l.isdigit():
        raise ProtocolError(f"unknown phase {phase!r}; use 'bottom-two' or 'level-<l>'")
    return int(l)


def phase_size(a: int, phase: str) -> int:
    l = phase_level(phase)
    return bottom_two_count(a) if l is None else stirling(a, l)


def phase_values(game: Game, phase: str) -> np.ndarray:
    """V of every node of the phase, by position."""
    l = phase_level(phase)
    table = game.table
    if l is None:
        lower = np.arange(1, bottom_two_count(game.a), dtype=np.int64)
        level2 = table[lower] + table[full_mask(game.a) ^ lower]
        return np.concatenate(([table[full_mask(game.a)]], level2))
    return np.concatenate([table[rows].sum(axis=1) for rows in iter_level_chunks(game.a, l)])


def phase_node(a: int, phase: str, index: int) -> CoalitionStructure:
    l = phase_level(phase)
    if l is None:
        if index == 0:
            return grand_coalition_structure(a)
        return CoalitionStructure(a, (index, full_mask(a) ^ index))
    rows = next(iter_level_chunks(a, l, chunk=1, start=index, stop=index + 1))
    return CoalitionStructure(a, tuple(int(m) for m in rows[0]))


def phase_position(phase: str, cs: CoalitionStructure) -> int | None:
    """Position of `cs` within the phase, None when it is not there."""
    l = phase_level(phase)
    if l is None:
        return bottom_two_index(cs)
    if cs.level != l:
        return None
    return level_index(cs)


def share_contains(share: Share, cs: CoalitionStructure) -> bool:
    pos = phase_position(share.phase, cs)
    return pos is not None and share.start <= pos < share.stop


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def partition_space(node_count: int, num_agents: int, seed,
                    phase: str = BOTTOM_TWO_PHASE) -> Assignment:
    """Equal (+-1) contiguous ranges, dealt to agents by a seeded permutation."""
    if num_agents < 1:
        raise ProtocolError(f"need at least one agent, got {num_agents}")
    if node_count < num_agents:
        raise ProtocolError(f"{node_count} nodes cannot give {num_agents} agents a share each")
    ranges = chunk_bounds(node_count, num_agents)
    order = _as_rng(seed).permutation(num_agents)
    shares = tuple(Share(phase, *ranges[int(k)]) for k in order)
    return Assignment(phase, node_count, shares)


# ── Search, report, audit ─────────────────────────────────────────
@dataclass(frozen=True)
class Report:
    agent: int                 # 1-based
    cs: CoalitionStructure
    value: float
    searched: int              # nodes actually examined


@dataclass(frozen=True)
class AuditOutcome:
    auditor: int               # 1-based
    target: int
    audited: bool
    caught: bool
    transfer: float


def _fabricated_claim(a: int, share: Share) -> CoalitionStructure:
    for cs in (singleton_structure(a), grand_coalition_structure(a)):
        if not share_contains(share, cs):
            return cs
    raise ProtocolError("no structure outside this share to fabricate")


def agent_search(game: Game, share: Share, strategy: AgentStrategy, agent: int = 1,
                 deviating: bool | None = None, values: np.ndarray | None = None) -> Report:
    """
    Report for one share. `deviating` defaults to "always" for non-truthful
    kinds; `values` may carry phase_values(game, share.phase) to skip
    re-evaluation.
    """
    if share.size < 1:
        raise ProtocolError("cannot search an empty share")
    if deviating is None:
        deviating = strategy.kind != "truthful"
    if deviating and strategy.kind == "fabricate":
        cs = _fabricated_claim(game.a, share)
        return Report(agent, cs, float(sum(game.table[m] for m in cs.coalitions)), 0)

    if values is None:
        values = phase_values(game, share.phase)
    seg = values[share.start:share.stop]
    searched = share.size
    if deviating and strategy.kind == "shirk":
        searched = max(1, int(np.floor(strategy.fraction * share.size)))
    i = int(np.argmax(seg[:searched]))
    return Report(agent, phase_node(game.a, share.phase, share.start + i), float(seg[i]), searched)


def is_caught(share: Share, report: Report, share_max: float) -> bool:
    if not share_contains(share, report.cs):
        return True
    return share_max > report.value


def drawn_audit_prob(audit_prob: float, num_agents: int) -> float:
    """Chance that a drawn auditor re-searches, given the per-target audit probability."""
    return min(1.0, num_agents * audit_prob)


def audit(game: Game, assignment: Assignment, reports: list[Report], seed,
          penalty: float, audit_prob: float | list[float] = 1.0,
          values: np.ndarray | None = None) -> AuditOutcome:
    """
    Draw (i, j), i != j, uniformly; i re-searches j's share with probability
    min(1, k * audit_prob), so j is audited with probability audit_prob
    (at most 1/k).
    """
    k = assignment.num_agents
    if k < 2:
        raise ProtocolError("auditing needs at least two agents")
    rng = _as_rng(seed)
    i = int(rng.integers(k))
    j = int(rng.integers(k - 1))
    j += j >= i
    p = audit_prob[i] if isinstance(audit_prob, (list, tuple)) else audit_prob
    if rng.random() >= drawn_audit_prob(p, k):
        return AuditOutcome(i + 1, j + 1, False, False, 0.0)
    share = assignment.shares[j]
    if values is None:
        values = phase_values(game, share.phase)
    share_max = float(values[share.start:share.stop].max())
    caught = is_caught(share, reports[j], share_max)
    return AuditOutcome(i + 1, j + 1, True, caught, penalty if caught else 0.0)


def inspection_equilibrium(params: InspectionParams) -> tuple[float, float]:
    """(p_audit, q_search) of the mixed equilibrium of the declared 2x2 game."""
    p_audit = min(max(params.c_search / params.penalty, 0.0), 1.0)
    q_search = min(max(1.0 - params.c_audit / params.penalty, 0.0), 1.0)
    return p_audit, q_search


# ── Payoff division ───────────────────────────────────────────────
def payoff_division(game: Game, cs: CoalitionStructure,
                    scheme: str = "equal-within-coalition") -> np.ndarray:
    """
    Payoff per agent (index i-1 for agent i); sums to V(cs).

    equal-within-coalition: members of S get v_S / |S| each.
    coalition-value-to-singletons: members of S split v_S in proportion to
    their stand-alone values v_{i}, equally when those are all zero.
    A singleton always receives exactly its own value.
    """
    if scheme not in PAYOFF_SCHEMES:
        raise UnknownSchemeError(f"unknown payoff scheme {scheme!r}; use one of {PAYOFF_SCHEMES}")
    cs = validate_structure(game.a, cs.coalitions)
    out = np.zeros(game.a)
    for s in cs.coalitions:
        who = [i - 1 for i in members(s)]
        v = game.table[s]
        if scheme == "equal-within-coalition" or coalition_size(s) == 1:
            out[who] = v / len(who)
            continue
        alone = game.table[[1 << i for i in who]]
        total = alone.sum()
        out[who] = v * alone / total if total > 0 else v / len(who)
    return out


# ── Repeated rounds ───────────────────────────────────────────────
@dataclass
class SimulationStats:
    rounds: pd.DataFrame = field(repr=False)
    payoffs: np.ndarray                   # net per agent, summed over rounds
    costs: np.ndarray                     # search + audit costs per agent
    transfers: np.ndarray                 # net penalty transfers per agent
    catch_rate: float
    audit_rate: float                     # audits per (round, target) pair
    deviation_rate: float
    mean_welfare: float
    p_audit: float
    q_search: float

    def summary(self) -> dict:
        return {
            "rounds": len(self.rounds),
            "p_audit": self.p_audit,
            "q_search": self.q_search,
            "audit_rate": self.audit_rate,
            "catch_rate": self.catch_rate,
            "deviation_rate": self.deviation_rate,
            "mean_welfare": self.mean_welfare,
            "payoffs": [float(x) for x in self.payoffs],
        }


def _check_agents(game: Game, num_agents: int, strategies: list[AgentStrategy]) -> None:
    if num_agents != game.a:
        raise ProtocolError(f"the protocol is run by the game's agents: expected {game.a}, got {num_agents}")
    if len(strategies) != num_agents:
        raise ProtocolError(f"need one strategy per agent, got {len(strategies)} for {num_agents}")
    if num_agents < 2:
        raise ProtocolError("the protocol needs at least two agents")


def simulate_rounds(game: Game, num_agents: int, strategies: list[AgentStrategy],
                    params: InspectionParams, rounds: int, seed: int,
                    phase: str = BOTTOM_TWO_PHASE, scheme: str = "equal-within-coalition",
                    verbose: bool = False) -> SimulationStats:
    """
    Partition, search, report, audit and divide, `rounds` times.
    Per-round rows: round, adopted_value, caught, auditor, target, transfer.
    """
    if rounds < 1:
        raise ProtocolError(f"rounds must be >= 1, got {rounds}")
    _check_agents(game, num_agents, strategies)
    values = phase_values(game, phase)
    node_count = len(values)
    audit_probs = [s.audit_prob for s in strategies]
    p_audit, q_search = inspection_equilibrium(params)

    payoffs = np.zeros(num_agents)
    costs = np.zeros(num_agents)
    transfers = np.zeros(num_agents)
    rows = []
    audits = catches = deviations = 0
    for t, child in enumerate(np.random.SeedSequence(seed).spawn(rounds)):
        rng = np.random.default_rng(child)
        assignment = partition_space(node_count, num_agents, rng, phase)
        reports = []
        for agent, (share, strat) in enumerate(zip(assignment.shares, strategies)):
            deviating = strat.kind != "truthful" and rng.random() < strat.deviation_prob
            deviations += deviating
            costs[agent] += strat.search_cost(deviating, params)
            reports.append(agent_search(game, share, strat, agent + 1, deviating, values))
        outcome = audit(game, assignment, reports, rng, params.penalty, audit_probs, values)
        if outcome.audited:
            audits += 1
            costs[outcome.auditor - 1] += params.c_audit
        if outcome.caught:
            catches += 1
            transfers[outcome.auditor - 1] += outcome.transfer
            transfers[outcome.target - 1] -= outcome.transfer

        adopted = max(reports, key=lambda r: r.value)   # first of equal claims
        adopted_value = float(sum(game.table[m] for m in adopted.cs.coalitions))
        payoffs += payoff_division(game, adopted.cs, scheme)
        rows.append((t, adopted_value, outcome.caught, outcome.auditor,
                     outcome.target, outcome.transfer))

    frame = pd.DataFrame(rows, columns=["round", "adopted_value", "caught",
                                        "auditor", "target", "transfer"])
    payoffs = payoffs + transfers - costs
    stats = SimulationStats(
        rounds=frame,
        payoffs=payoffs,
        costs=costs,
        transfers=transfers,
        catch_rate=catches / rounds,
        audit_rate=audits / (rounds * num_agents),
        deviation_rate=deviations / (rounds * num_agents),
        mean_welfare=float(frame["adopted_value"].mean()),
        p_audit=p_audit,
        q_search=q_search,
    )
    if verbose:
        print(f"[protocol] {rounds} rounds, {num_agents} agents: audit rate "
              f"{stats.audit_rate:.4f} (p*={p_audit:.4f}), catch rate {stats.catch_rate:.4f}")
    return stats


# ── Exact expectations ────────────────────────────────────────────
def _deviation_caught_fraction(game: Game, strategy: AgentStrategy, phase: str,
                               num_agents: int, values: np.ndarray) -> float:
    """Share of the equally likely shares on which a deviation by `strategy` is caught."""
    caught = 0
    ranges = chunk_bounds(len(values), num_agents)
    for start, stop in ranges:
        share = Share(phase, start, stop)
        report = agent_search(game, share, strategy, deviating=True, values=values)
        caught += is_caught(share, report, float(values[start:stop].max()))
    return caught / len(ranges)


def exact_catch_rate(game: Game, num_agents: int, strategies: list[AgentStrategy],
                     phase: str = BOTTOM_TWO_PHASE) -> float:
    """
    Expected per-round catch frequency of simulate_rounds. Every permutation
    of shares is equally likely, so a given target holds each share with
    probability 1/k; averaging over shares and over the k(k-1) ordered
    audit pairs gives the exact value.
    """
    _check_agents(game, num_agents, strategies)
    values = phase_values(game, phase)
    k = num_agents
    total = 0.0
    for j, strat in enumerate(strategies):
        if strat.deviation_prob == 0:
            continue
        hit = _deviation_caught_fraction(game, strat, phase, k, values)
        audit_mass = sum(drawn_audit_prob(strategies[i].audit_prob, k) for i in range(k) if i != j)
        total += strat.deviation_prob * hit * audit_mass
    return total / (k * (k - 1))


def expected_target_payoff(game: Game, num_agents: int, strategy: AgentStrategy,
                           params: InspectionParams, audit_prob: float = 1.0,
                           phase: str = BOTTOM_TWO_PHASE) -> float:
    """
    Expected per-round search cost plus penalty for one agent playing
    `strategy` (deviating every round), against auditors whose per-target
    audit probability is `audit_prob`. The expected penalty is
    P * min(audit_prob, 1/k) * (share of shares on which the deviation is
    caught). Payoff-division effects are left out.
    """
    if num_agents < 2:
        raise ProtocolError("the protocol needs at least two agents")
    values = phase_values(game, phase)
    if strategy.kind == "truthful":
        return -params.c_search
    hit = _deviation_caught_fraction(game, strategy, phase, num_agents, values)
    audited = drawn_audit_prob(audit_prob, num_agents) / num_agents
    return -strategy.search_cost(True, params) - params.penalty * audited * hit
