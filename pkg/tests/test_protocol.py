import dataclasses
from fractions import Fraction

import pytest

from flipsim import (BudgetExceededError, InvalidPrefixError, JumpClass,
                     NoNextRoundError, classify_round, expected_outcome,
                     is_robust, round_view, transcript_distribution)
from flipsim.protocol import RoundView, validate_prefix, walk_reachable
from flipsim.zoo import (biased_and, constant_protocol, majority_many_turn,
                         majority_single_turn, punishing_majority,
                         two_round_or)

from conftest import brute_force_expectation, enumerate_transcripts, make_params

ZOO = [
    majority_single_turn(1), majority_single_turn(3), majority_single_turn(5),
    majority_many_turn(1, 3), majority_many_turn(3, 3),
    biased_and(2), biased_and(3),
    punishing_majority(1, 2, 2), punishing_majority(3, 3, 2),
    constant_protocol(1), two_round_or(),
]


class TestExpectedOutcome:
    def test_majority3_empty(self):
        assert expected_outcome(majority_single_turn(3), ()) == Fraction(1, 2)

    def test_majority3_decided(self):
        assert expected_outcome(majority_single_turn(3), (1, 1)) == 1

    def test_and2_empty(self):
        p = biased_and(2)
        assert expected_outcome(p, ()) == Fraction(1, 4)
        assert expected_outcome(p, ()) == brute_force_expectation(p)

    def test_invalid_prefixes(self):
        p = majority_single_turn(3)
        with pytest.raises(InvalidPrefixError):
            expected_outcome(p, (2,))
        with pytest.raises(InvalidPrefixError):
            expected_outcome(p, (1, 1, 1, 1))
        with pytest.raises(InvalidPrefixError):
            expected_outcome(p, [1, 1])

    def test_zero_probability_message_unreachable(self):
        from flipsim.dist import FiniteDistribution
        from flipsim.protocol import Protocol
        d = FiniteDistribution((0, 1, 2), (Fraction(1, 2), Fraction(1, 2),
                                           Fraction(0)))
        p = Protocol(n_parties=1, n_rounds=1, next_party=lambda t: 1,
                     message_dist=lambda t: d,
                     output=lambda t: 1 if t[0] else 0)
        with pytest.raises(InvalidPrefixError):
            validate_prefix(p, (2,))

    @pytest.mark.parametrize("p", ZOO, ids=lambda p: p.name)
    def test_matches_brute_force_everywhere(self, p):
        for prefix, _ in walk_reachable(p):
            assert expected_outcome(p, prefix) == brute_force_expectation(p, prefix)


class TestRoundView:
    def test_majority3_root(self):
        v = round_view(majority_single_turn(3), ())
        assert v.jumps == {1: Fraction(1, 4), 0: Fraction(-1, 4)}
        assert v.variance == Fraction(1, 16)
        assert v.party == 1

    def test_majority3_tiebreak_round(self):
        v = round_view(majority_single_turn(3), (1, 0))
        assert v.jumps == {1: Fraction(1, 2), 0: Fraction(-1, 2)}
        assert v.variance == Fraction(1, 4)

    def test_constant_protocol_zero_jumps(self):
        p = constant_protocol(1)
        for prefix in ((), (0,), (1,)):
            v = round_view(p, prefix)
            assert all(j == 0 for j in v.jumps.values())
            assert v.variance == 0

    def test_full_transcript_rejected(self):
        with pytest.raises(NoNextRoundError):
            round_view(majority_single_turn(3), (1, 0, 1))

    @pytest.mark.parametrize("p", ZOO, ids=lambda p: p.name)
    def test_brute_force_jumps(self, p):
        for prefix, _ in walk_reachable(p):
            if len(prefix) == p.n_rounds:
                continue
            v = round_view(p, prefix)
            base = brute_force_expectation(p, prefix)
            for m in v.dist.support():
                assert v.jumps[m] == brute_force_expectation(p, prefix + (m,)) - base


class TestClassifyRound:
    def view(self, variance, min_jump):
        from flipsim.dist import FiniteDistribution
        jumps = {0: min_jump, 1: -min_jump}
        return RoundView(0, 1, FiniteDistribution.uniform((0, 1)), jumps,
                         variance)

    def test_nonrobust_wins(self):
        params = make_params(neg_jump_threshold=0.1, large_var_threshold=0.01)
        assert classify_round(self.view(1 / 16, -0.25), params) \
            is JumpClass.NON_ROBUST

    def test_large(self):
        params = make_params(neg_jump_threshold=0.1, large_var_threshold=0.01)
        assert classify_round(self.view(1 / 16, -0.05), params) is JumpClass.LARGE

    def test_small(self):
        params = make_params(neg_jump_threshold=0.1, large_var_threshold=0.01)
        assert classify_round(self.view(0.005, -0.05), params) is JumpClass.SMALL


class TestIsRobust:
    def test_majority3_not_robust_at_tight_threshold(self):
        params = make_params(neg_jump_threshold=0.01)
        robust, prob = is_robust(majority_single_turn(3), params)
        assert not robust and prob == 1

    def test_majority3_robust_at_loose_threshold(self):
        params = make_params(neg_jump_threshold=0.6)
        robust, prob = is_robust(majority_single_turn(3), params)
        assert robust and prob == 0

    def test_constant_protocol_robust(self):
        robust, prob = is_robust(constant_protocol(1), make_params())
        assert robust and prob == 0

    def test_partial_qualifying_probability(self):
        # threshold between 1/4 and 1/2: only the tie-break round qualifies
        params = make_params(neg_jump_threshold=0.3)
        robust, prob = is_robust(majority_single_turn(3), params)
        assert prob == Fraction(1, 2)
        assert not robust

    def test_budget_error(self):
        p = dataclasses.replace(punishing_majority(3, 3, 2), node_budget=20)
        with pytest.raises(BudgetExceededError):
            is_robust(p, make_params())


class TestInvariants:
    @pytest.mark.parametrize("p", ZOO, ids=lambda p: p.name)
    def test_tower_and_centering(self, p):
        for prefix, _ in walk_reachable(p):
            if len(prefix) == p.n_rounds:
                continue
            v = round_view(p, prefix)
            base = expected_outcome(p, prefix)
            tower = sum(pr * expected_outcome(p, prefix + (m,))
                        for m, pr in v.dist.items())
            assert abs(tower - base) <= Fraction(1, 10 ** 9)
            assert abs(sum(pr * v.jumps[m] for m, pr in v.dist.items())) \
                <= Fraction(1, 10 ** 9)

    @pytest.mark.parametrize("p", ZOO, ids=lambda p: p.name)
    def test_doob_and_orthogonality(self, p):
        # along every transcript the conditional expectations telescope, and
        # summed conditional variances match the output variance exactly
        e0 = expected_outcome(p, ())
        total = 0
        for t, mass in enumerate_transcripts(p):
            s = e0
            for i in range(1, p.n_rounds + 1):
                s += (expected_outcome(p, t[:i]) - expected_outcome(p, t[:i - 1]))
            assert s == p.output(t)
        for prefix, mass in walk_reachable(p):
            if len(prefix) < p.n_rounds:
                total += mass * round_view(p, prefix).variance
        assert abs(total - e0 * (1 - e0)) <= Fraction(1, 10 ** 9)

    def test_transcript_distribution_sums_to_one(self):
        d = transcript_distribution(majority_many_turn(3, 3))
        assert sum(d.values()) == 1
        assert len(d) == 512

    def test_expected_outcome_budget_error(self):
        p = dataclasses.replace(punishing_majority(3, 3, 2), node_budget=10)
        with pytest.raises(BudgetExceededError):
            expected_outcome(p, ())

    def test_state_key_collapse_agrees_with_plain_enumeration(self):
        with_key = majority_single_turn(5)
        plain = dataclasses.replace(with_key, state_key=None, closed_form=None)
        for prefix, _ in walk_reachable(plain):
            assert expected_outcome(with_key, prefix) == \
                expected_outcome(plain, prefix)
