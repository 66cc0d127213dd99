"""Tests for verify.py: individual checks and the quick suite."""
import sys
import os

# Ensure project root is on path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import json

import pytest

from bounds import bound_after_level
from verify import (
    check_counting,
    check_deterrence,
    check_minimality,
    check_oracle,
    check_pairing,
    check_soundness,
    check_staircase_10,
    check_witnesses,
    run_suite,
)


# ── Individual checks ─────────────────────────────────────────────
class TestChecks:

    def test_counting(self):
        assert check_counting(6, 12) == []

    def test_staircase(self):
        assert check_staircase_10() == []

    @pytest.mark.parametrize("a", [4, 5])
    def test_oracle_agrees(self, a):
        notes = []
        assert check_oracle(a, notes=notes) == []
        assert notes == []

    def test_corrupted_bound_names_level(self):
        """A bound that never halves is caught at the first top-down level."""
        failures = check_oracle(4, bound_fn=lambda a, l: a)
        assert failures
        assert failures[0]["l"] == 4
        assert failures[0]["expected"] == 4
        assert failures[0]["actual"] == "2"

    def test_proof_variant_matches_small_a(self):
        """Both readings agree with the oracle below the first divergence."""
        for a in (4, 5, 6):
            assert check_oracle(a, bound_fn=lambda a, l: bound_after_level(a, l, "proof")) == []

    def test_pairing(self):
        assert check_pairing(6) == []

    def test_witnesses(self):
        assert check_witnesses((4, 5, 6)) == []

    def test_soundness(self):
        assert check_soundness(5, 30, seed=1) == []

    def test_minimality(self):
        assert check_minimality() == []

    def test_deterrence(self):
        """P=1000: searching is never worse than shirking, strictly so against full audits."""
        assert check_deterrence() == []

    def test_deterrence_fails_with_small_penalty(self):
        """P=2: one audit per round cannot reach p_audit = 0.5, so shirking pays."""
        failures = check_deterrence(penalty=2.0)
        assert failures
        assert failures[0]["game"] == "all-caught"
        assert failures[0]["shirk"] == pytest.approx(-0.5)


# ── Suites ────────────────────────────────────────────────────────
class TestSuites:

    def test_quick_passes(self):
        report = run_suite("quick")
        assert report.ok
        assert "oracle-a5" in report.checks
        assert json.loads(report.to_json())["ok"] is True

    def test_quick_fails_with_bad_bound(self):
        report = run_suite("quick", bound_fn=lambda a, l: a)
        assert not report.ok
        assert any(f["check"] == "oracle" for f in report.failures)

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("slow")
