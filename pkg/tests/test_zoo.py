import itertools
import math
from fractions import Fraction

import pytest

from flipsim import expected_outcome, transcript_distribution
from flipsim.zoo import (biased_and, constant_protocol, majority_many_turn,
                         majority_single_turn, punishing_majority)

from conftest import brute_force_expectation


class TestMajoritySingleTurn:
    def test_single_party(self):
        p = majority_single_turn(1)
        assert expected_outcome(p, ()) == Fraction(1, 2)
        assert p.output((1,)) == 1 and p.output((0,)) == 0

    def test_three_party_symmetry_and_jumps(self):
        p = majority_single_turn(3)
        assert expected_outcome(p, ()) == Fraction(1, 2)
        assert expected_outcome(p, (1,)) - expected_outcome(p, ()) == Fraction(1, 4)

    def test_five_party_expectation(self):
        assert expected_outcome(majority_single_turn(5), ()) == Fraction(1, 2)

    def test_even_rejected(self):
        with pytest.raises(ValueError):
            majority_single_turn(4)

    def test_closed_form_matches_enumeration(self):
        p = majority_single_turn(5)
        for prefix in ((), (1,), (1, 0), (1, 1, 0, 0)):
            assert expected_outcome(p, prefix) == brute_force_expectation(p, prefix)

    def test_float_variant_tables(self):
        p = majority_single_turn(5, exact=False)
        q = majority_single_turn(5)
        for prefix in ((), (1,), (0, 0), (1, 1, 0)):
            assert expected_outcome(p, prefix) == pytest.approx(
                float(expected_outcome(q, prefix)), abs=1e-12)

    def test_party_permutation_invariance(self):
        # exchangeable messages: permuting speaking order leaves the
        # transcript-multiset law and the expectation unchanged
        p = majority_single_turn(3)
        dist = transcript_distribution(p)
        for perm in itertools.permutations(range(3)):
            permuted = {}
            for t, mass in dist.items():
                key = tuple(t[perm[i]] for i in range(3))
                permuted[key] = permuted.get(key, 0) + mass
            assert permuted == dist


class TestMajorityManyTurn:
    def test_single_party_three_bits(self):
        p = majority_many_turn(1, 3)
        assert expected_outcome(p, ()) == Fraction(1, 2)

    def test_three_by_three(self):
        p = majority_many_turn(3, 3)
        assert expected_outcome(p, ()) == Fraction(1, 2)
        assert expected_outcome(p, ()) == brute_force_expectation(p)

    def test_round_robin_schedule(self):
        p = majority_many_turn(3, 3)
        # 1-based round 4 belongs to party 1
        assert p.next_party((1, 0, 1)) == 1
        assert [p.next_party(tuple([0] * i)) for i in range(6)] == \
            [1, 2, 3, 1, 2, 3]

    def test_even_total_rejected(self):
        with pytest.raises(ValueError):
            majority_many_turn(3, 2)


class TestBiasedAnd:
    def test_degenerate_single_party(self):
        p = biased_and(1)
        assert expected_outcome(p, ()) == 0

    def test_two_party(self):
        assert expected_outcome(biased_and(2), ()) == Fraction(1, 4)

    def test_formula(self):
        for n in (2, 3, 5):
            assert expected_outcome(biased_and(n), ()) == \
                Fraction(n - 1, n) ** n

    def test_large_n_approaches_inverse_e(self):
        p = biased_and(100, exact=False)
        assert abs(expected_outcome(p, ()) - 1 / math.e) < 0.01


class TestPunishingMajority:
    def test_unreachable_punishment_equals_plain_majority(self):
        pun = punishing_majority(3, 3, run_len=4)
        plain = majority_many_turn(3, 3)
        assert transcript_distribution(pun) == transcript_distribution(plain)
        for t in transcript_distribution(pun):
            assert pun.output(t) == plain.output(t)

    def test_punished_party_loses_votes_and_tie_resolves_to_zero(self):
        p = punishing_majority(1, 2, 2)
        assert p.output((1, 1)) == 0
        # unpunished but tied vote also resolves to zero
        assert p.output((1, 0)) == 0

    def test_regression_expectation(self):
        p = punishing_majority(3, 3, 2)
        value = expected_outcome(p, ())
        assert value == brute_force_expectation(p)
        # frozen from the enumeration above
        assert value == Fraction(23, 256)

    def test_punishment_rule_is_per_party(self):
        p = punishing_majority(2, 3, 3)
        # party 1 sends rounds 0, 2, 4; party 2 sends rounds 1, 3, 5
        assert p.output((1, 1, 0, 1, 1, 0)) == 1
        # a punished majority-holder flips the outcome to zero
        assert p.output((1, 0, 1, 0, 1, 1)) == 0


class TestConstantProtocol:
    def test_output_ignores_messages(self):
        p = constant_protocol(1)
        for t in ((0, 0), (0, 1), (1, 0), (1, 1)):
            assert p.output(t) == 1
        assert expected_outcome(p, ()) == 1

    def test_bad_bit_rejected(self):
        with pytest.raises(ValueError):
            constant_protocol(2)
