"""Tests for protocol_sim.py: shares, agent search, audits, equilibrium and payoffs."""
import sys
import os

# Ensure project root is on path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import numpy as np
import pandas as pd
import pytest

from adversarial import singleton_game, uniform_random_game
from game_model import (
    Game,
    grand_coalition_structure,
    singleton_structure,
    structure_value,
    validate_structure,
)
from partition_enum import bottom_two, enumerate_level, stirling
from protocol_sim import (
    AgentStrategy,
    Assignment,
    InspectionParams,
    ProtocolError,
    Report,
    Share,
    UnknownSchemeError,
    agent_search,
    audit,
    drawn_audit_prob,
    exact_catch_rate,
    expected_target_payoff,
    fabricate,
    inspection_equilibrium,
    is_caught,
    partition_space,
    payoff_division,
    phase_node,
    phase_values,
    share_contains,
    shirk,
    simulate_rounds,
    truthful,
)


# ── Helpers ───────────────────────────────────────────────────────
def _make_game_3():
    """a=3: v{1}=1, v{2}=2, v{1,2}=4, v{1,3}=1.5, v{A}=5."""
    return Game.from_dict(3, {0b001: 1.0, 0b010: 2.0, 0b011: 4.0, 0b101: 1.5, 0b111: 5.0})


def _make_all_caught_game():
    """a=4 with v = 1 on {1}, {1,2}, {1,3}, {1,2,3}.

    Bottom-two values by position are 0,1,0,1,0,1,0,1, so every share of two
    starts with a worse node than it ends with: any shirk(f < 1) is caught.
    """
    return Game.from_dict(4, {0b0001: 1.0, 0b0011: 1.0, 0b0101: 1.0, 0b0111: 1.0})


def _whole(phase="bottom-two", size=8):
    return Share(phase, 0, size)


# Singleton game, a=4, bottom-two positions:
#   0 grand (0), 1 {1}|{234} (1), 2 {2}|{134} (1), 3 {12}|{34} (0),
#   4 {3}|{124} (1), 5 {13}|{24} (0), 6 {23}|{14} (0), 7 {123}|{4} (1)
# With 4 shares of 2, shirking on the first node is caught on [0,2) and [6,8).


# ── Phases and shares ─────────────────────────────────────────────
class TestShares:

    def test_phase_values_bottom_two(self):
        """Positions follow bottom-two order."""
        vals = phase_values(singleton_game(4), "bottom-two")
        assert list(vals) == [0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]
        for i, cs in enumerate(bottom_two(4)):
            assert phase_node(4, "bottom-two", i) == cs

    def test_phase_values_level(self):
        """level-<l> addresses enumerate_level order."""
        game = uniform_random_game(5, seed=2)
        vals = phase_values(game, "level-3")
        assert len(vals) == stirling(5, 3)
        for i, cs in enumerate(enumerate_level(5, 3)):
            assert vals[i] == pytest.approx(structure_value(game, cs))
            assert phase_node(5, "level-3", i) == cs

    def test_unknown_phase(self):
        with pytest.raises(ProtocolError):
            phase_values(singleton_game(4), "middle")

    def test_even_split(self):
        """8 nodes, 4 agents: two each."""
        asg = partition_space(8, 4, seed=1)
        assert sorted(s.size for s in asg.shares) == [2, 2, 2, 2]

    def test_uneven_split(self):
        """10 nodes, 4 agents: sizes 3, 3, 2, 2 in some order."""
        asg = partition_space(10, 4, seed=1)
        assert sorted(s.size for s in asg.shares) == [2, 2, 3, 3]

    def test_deterministic_under_seed(self):
        """Same seed, same dealing."""
        assert partition_space(10, 4, seed=9) == partition_space(10, 4, seed=9)

    def test_too_many_agents(self):
        with pytest.raises(ProtocolError):
            partition_space(3, 4, seed=0)

    def test_assignment_must_cover(self):
        """Overlapping or gapped shares are refused."""
        with pytest.raises(ProtocolError):
            Assignment("bottom-two", 8, (Share("bottom-two", 0, 4), Share("bottom-two", 3, 8)))
        with pytest.raises(ProtocolError):
            Assignment("bottom-two", 8, (Share("bottom-two", 0, 4), Share("bottom-two", 5, 8)))

    def test_share_contains(self):
        """Grand coalition is position 0 of bottom-two."""
        share = Share("bottom-two", 0, 2)
        assert share_contains(share, grand_coalition_structure(4))
        assert not share_contains(share, singleton_structure(4))


# ── Agent search ──────────────────────────────────────────────────
class TestAgentSearch:

    def test_truthful_finds_share_max(self):
        """First maximum of the share."""
        report = agent_search(singleton_game(4), _whole(), truthful(), agent=2)
        assert report.agent == 2
        assert report.value == 1.0
        assert report.cs == validate_structure(4, [0b0001, 0b1110])
        assert report.searched == 8

    def test_shirk_searches_prefix(self):
        """fraction 0 still looks at one node."""
        report = agent_search(singleton_game(4), _whole(), shirk(0.0))
        assert report.searched == 1
        assert report.cs == grand_coalition_structure(4)

    def test_shirk_fraction(self):
        """floor(0.5 * 8) = 4 nodes."""
        report = agent_search(singleton_game(4), _whole(), shirk(0.5))
        assert report.searched == 4
        assert report.value == 1.0

    def test_deviation_flag_off(self):
        """A shirker that searches this round behaves truthfully."""
        report = agent_search(singleton_game(4), _whole(), shirk(0.0), deviating=False)
        assert report.searched == 8

    def test_fabricate_claims_outside(self):
        """Claim is outside the share and is caught on audit."""
        share = _whole()
        report = agent_search(singleton_game(4), share, fabricate())
        assert report.cs == singleton_structure(4)
        assert report.searched == 0
        assert is_caught(share, report, 1.0)


# ── Audits ────────────────────────────────────────────────────────
class TestAudit:

    def _setup(self, strategy):
        game = singleton_game(4)
        asg = partition_space(8, 4, seed=3)
        reports = [agent_search(game, s, strategy, i + 1) for i, s in enumerate(asg.shares)]
        return game, asg, reports

    def test_truthful_never_caught(self):
        """Re-search finds nothing better."""
        game, asg, reports = self._setup(truthful())
        for seed in range(20):
            out = audit(game, asg, reports, seed, penalty=10.0)
            assert out.audited
            assert out.auditor != out.target
            assert not out.caught and out.transfer == 0.0

    def test_no_audit_when_prob_zero(self):
        game, asg, reports = self._setup(shirk(0.0))
        out = audit(game, asg, reports, 0, penalty=10.0, audit_prob=0.0)
        assert not out.audited and not out.caught

    def test_shirker_caught_on_bad_share(self):
        """Caught exactly when the skipped part held something better."""
        game, asg, reports = self._setup(shirk(0.0))
        for seed in range(40):
            out = audit(game, asg, reports, seed, penalty=10.0)
            share = asg.shares[out.target - 1]
            assert out.caught == (share.start in (0, 6))
            assert out.transfer == (10.0 if out.caught else 0.0)

    def test_foreign_claim_caught(self):
        """A structure outside the target's share is a catch even if it is worse."""
        share = Share("bottom-two", 2, 4)
        report = Report(1, grand_coalition_structure(4), 0.0, 0)
        assert is_caught(share, report, 0.0)

    def test_needs_two_agents(self):
        game = singleton_game(4)
        asg = Assignment("bottom-two", 8, (Share("bottom-two", 0, 8),))
        with pytest.raises(ProtocolError):
            audit(game, asg, [agent_search(game, asg.shares[0], truthful())], 0, 10.0)


# ── Inspection equilibrium ────────────────────────────────────────
class TestEquilibrium:

    def test_default_params(self):
        """P=10, costs 1: audit 0.1, search 0.9."""
        p, q = inspection_equilibrium(InspectionParams())
        assert p == pytest.approx(0.1)
        assert q == pytest.approx(0.9)

    def test_weak_penalty(self):
        """P <= c_audit: nobody searches, audits are certain."""
        p, q = inspection_equilibrium(InspectionParams(penalty=0.5))
        assert q == 0.0
        assert p == 1.0

    def test_large_penalty(self):
        """P=1000: search 0.999."""
        _, q = inspection_equilibrium(InspectionParams(penalty=1000.0))
        assert q == pytest.approx(0.999)

    def test_monotone_in_penalty(self):
        """q_search rises and p_audit falls as P grows."""
        pts = [inspection_equilibrium(InspectionParams(penalty=P)) for P in (2, 5, 10, 100, 1000)]
        ps, qs = zip(*pts)
        assert list(qs) == sorted(qs)
        assert list(ps) == sorted(ps, reverse=True)

    def test_bad_params(self):
        with pytest.raises(ProtocolError):
            InspectionParams(penalty=0.0)
        with pytest.raises(ProtocolError):
            AgentStrategy("shirk", fraction=1.5)
        with pytest.raises(ProtocolError):
            AgentStrategy("lazy")

    def test_target_payoff_large_penalty(self):
        """At P=1000 searching beats shirking."""
        game = singleton_game(4)
        params = InspectionParams(penalty=1000.0)
        honest = expected_target_payoff(game, 4, truthful(), params)
        lazy = expected_target_payoff(game, 4, shirk(0.0), params)
        assert honest == -1.0
        assert lazy == pytest.approx(-125.0)
        assert honest > lazy

    def test_target_payoff_no_audits(self):
        """Without audits shirking is free."""
        game = singleton_game(4)
        assert expected_target_payoff(game, 4, shirk(0.0), InspectionParams(), audit_prob=0.0) == 0.0

    def test_deterred_at_equilibrium_audit_rate(self):
        """p_audit = c_search/P with certain catches: no shirk(f) pays more than searching."""
        game = _make_all_caught_game()
        assert list(phase_values(game, "bottom-two")) == [0, 1, 0, 1, 0, 1, 0, 1]
        params = InspectionParams(penalty=1000.0)
        p, _ = inspection_equilibrium(params)
        assert p == pytest.approx(0.001)
        honest = expected_target_payoff(game, 4, truthful(), params, audit_prob=p)
        lazy = expected_target_payoff(game, 4, shirk(0.0), params, audit_prob=p)
        assert honest == -1.0
        assert lazy == pytest.approx(-1.0)
        for f in (0.0, 0.25, 0.5, 0.75):
            lazy = expected_target_payoff(game, 4, shirk(f), params, audit_prob=p)
            assert honest >= lazy - 1e-12, f

    def test_strictly_deterred_above_equilibrium(self):
        """Any audit rate above c_search/P makes shirking strictly worse."""
        game = _make_all_caught_game()
        params = InspectionParams(penalty=1000.0)
        honest = expected_target_payoff(game, 4, truthful(), params, audit_prob=0.002)
        lazy = expected_target_payoff(game, 4, shirk(0.0), params, audit_prob=0.002)
        assert lazy == pytest.approx(-2.0)
        assert honest > lazy

    def test_drawn_auditor_probability(self):
        """k * p, capped at 1."""
        assert drawn_audit_prob(0.1, 4) == pytest.approx(0.4)
        assert drawn_audit_prob(0.5, 4) == 1.0
        assert drawn_audit_prob(0.0, 4) == 0.0

    def test_exact_catch_rate_uses_per_target_probability(self):
        """All shirk(0) on the all-caught game: catch rate equals the audit rate."""
        game = _make_all_caught_game()
        strategies = [AgentStrategy("shirk", fraction=0.0, audit_prob=0.05)] * 4
        assert exact_catch_rate(game, 4, strategies) == pytest.approx(0.2)
        stats = simulate_rounds(game, 4, strategies, InspectionParams(), 20000, seed=3)
        assert abs(stats.audit_rate - 0.05) < 0.01
        assert abs(stats.catch_rate - 0.2) < 0.02


# ── Payoff division ───────────────────────────────────────────────
class TestPayoffDivision:

    def test_equal_within_coalition(self):
        """{1,2} worth 4 split 2/2; {3} worth 0."""
        cs = validate_structure(3, [0b011, 0b100])
        assert list(payoff_division(_make_game_3(), cs)) == [2.0, 2.0, 0.0]

    def test_proportional_to_singletons(self):
        """v1=1, v2=2: {1,2} worth 4 splits 4/3, 8/3."""
        cs = validate_structure(3, [0b011, 0b100])
        out = payoff_division(_make_game_3(), cs, "coalition-value-to-singletons")
        assert out == pytest.approx([4 / 3, 8 / 3, 0.0])

    def test_proportional_zero_singletons(self):
        """All stand-alone values zero: equal split."""
        cs = validate_structure(3, [0b101, 0b010])
        game = Game.from_dict(3, {0b101: 3.0})
        assert list(payoff_division(game, cs, "coalition-value-to-singletons")) == [1.5, 0.0, 1.5]

    @pytest.mark.parametrize("scheme", ["equal-within-coalition", "coalition-value-to-singletons"])
    def test_sums_to_structure_value(self, scheme):
        game = uniform_random_game(5, seed=4)
        for cs in enumerate_level(5, 3):
            assert payoff_division(game, cs, scheme).sum() == pytest.approx(structure_value(game, cs))

    def test_unknown_scheme(self):
        with pytest.raises(UnknownSchemeError):
            payoff_division(_make_game_3(), grand_coalition_structure(3), "shapley")


# ── Repeated rounds ───────────────────────────────────────────────
class TestSimulation:

    def test_all_truthful(self):
        """No deviation, no catches, one audit per round spread over four targets."""
        game = singleton_game(4)
        stats = simulate_rounds(game, 4, [truthful()] * 4, InspectionParams(), 200, seed=1)
        assert stats.catch_rate == 0.0
        assert stats.deviation_rate == 0.0
        assert stats.audit_rate == 0.25
        assert stats.mean_welfare == 1.0
        assert len(stats.rounds) == 200

    def test_budget_balance(self):
        """Penalties move between agents; their sum is zero."""
        game = singleton_game(4)
        stats = simulate_rounds(game, 4, [shirk(0.0)] * 4, InspectionParams(), 500, seed=5)
        assert stats.transfers.sum() == pytest.approx(0.0)
        assert stats.catch_rate > 0

    def test_catch_rate_matches_exact(self):
        """Always-shirk, always-audit: half the shares expose the shirker."""
        game = singleton_game(4)
        strategies = [shirk(0.0)] * 4
        assert exact_catch_rate(game, 4, strategies) == pytest.approx(0.5)
        stats = simulate_rounds(game, 4, strategies, InspectionParams(), 4000, seed=6)
        assert abs(stats.catch_rate - 0.5) < 0.03

    def test_equilibrium_rates(self):
        """Mixed play at (p*, q*) audits at rate p* and catches at the exact rate."""
        params = InspectionParams()
        p, q = inspection_equilibrium(params)
        game = singleton_game(4)
        strategies = [AgentStrategy("shirk", fraction=0.0, search_prob=q, audit_prob=p)] * 4
        stats = simulate_rounds(game, 4, strategies, params, 20000, seed=7)
        assert abs(stats.audit_rate - p) < 0.01
        assert abs(stats.catch_rate - exact_catch_rate(game, 4, strategies)) < 0.01
        assert abs(stats.deviation_rate - (1 - q)) < 0.01

    def test_reproducible(self):
        """Same seed, same per-round rows."""
        game = uniform_random_game(4, seed=2)
        strategies = [shirk(0.3, 0.5)] * 4
        one = simulate_rounds(game, 4, strategies, InspectionParams(), 100, seed=11)
        two = simulate_rounds(game, 4, strategies, InspectionParams(), 100, seed=11)
        pd.testing.assert_frame_equal(one.rounds, two.rounds)
        assert np.array_equal(one.payoffs, two.payoffs)

    def test_agent_count_must_match_game(self):
        with pytest.raises(ProtocolError):
            simulate_rounds(singleton_game(4), 3, [truthful()] * 3, InspectionParams(), 10, seed=0)

    def test_level_phase(self):
        """Running on level 3 instead of the bottom two."""
        game = singleton_game(4)
        stats = simulate_rounds(game, 4, [truthful()] * 4, InspectionParams(), 50, seed=3,
                                phase="level-3")
        assert stats.mean_welfare == 2.0
