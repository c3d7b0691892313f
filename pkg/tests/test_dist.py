import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flipsim.dist import (FiniteDistribution, biased, biased_mean_shift,
                          coupling_conditional, coupling_joint, kl_divergence,
                          mixture_identity_check, monotone_coupling,
                          pinsker_check, random_rational_instance,
                          same_distribution, statistical_distance)
from flipsim.errors import InvalidBiasError, InvalidUtilityError

from conftest import uniform_pm1

IDENTITY = {-1: Fraction(-1), 1: Fraction(1)}


class TestFiniteDistribution:
    def test_validation(self):
        with pytest.raises(ValueError):
            FiniteDistribution((0, 0), (Fraction(1, 2), Fraction(1, 2)))
        with pytest.raises(ValueError):
            FiniteDistribution((0, 1), (Fraction(3, 4), Fraction(3, 4)))
        with pytest.raises(ValueError):
            FiniteDistribution((0, 1), (Fraction(-1, 4), Fraction(5, 4)))

    def test_zero_prob_entries_excluded_from_support(self):
        d = FiniteDistribution((0, 1, 2), (Fraction(1, 2), Fraction(0),
                                           Fraction(1, 2)))
        assert d.support() == (0, 2)
        rng = random.Random(3)
        assert all(d.sample(rng) != 1 for _ in range(200))

    def test_sampling_matches_probs(self):
        d = FiniteDistribution(("a", "b"), (0.25, 0.75))
        rng = random.Random(7)
        hits = sum(d.sample(rng) == "b" for _ in range(20000))
        assert abs(hits / 20000 - 0.75) < 3 * math.sqrt(0.25 * 0.75 / 20000)


class TestBiased:
    def test_uniform_pm1_half(self):
        out = biased(uniform_pm1(), IDENTITY, Fraction(1, 2))
        assert out.prob(1) == Fraction(3, 4)
        assert out.prob(-1) == Fraction(1, 4)

    def test_alpha_zero_is_identity(self):
        x = uniform_pm1()
        assert biased(x, IDENTITY, 0) is x

    def test_zero_utility_is_identity(self):
        x = uniform_pm1()
        out = biased(x, {v: Fraction(0) for v in x.values}, Fraction(2))
        assert same_distribution(out, x)

    def test_lower_bound_violation(self):
        with pytest.raises(InvalidBiasError):
            biased(uniform_pm1(), IDENTITY, Fraction(2))

    def test_uncentered_utility(self):
        with pytest.raises(InvalidUtilityError):
            biased(uniform_pm1(), {-1: Fraction(0), 1: Fraction(1)},
                   Fraction(1, 2))

    def test_mean_shift_examples(self):
        x = uniform_pm1()
        assert biased_mean_shift(x, IDENTITY, Fraction(1, 2)) == Fraction(1, 2)
        assert biased_mean_shift(x, IDENTITY, 0) == 0
        point = FiniteDistribution((5,), (Fraction(1),))
        assert biased_mean_shift(point, {5: Fraction(0)}, Fraction(3)) == 0

    def test_mean_shift_equals_scaled_variance_randomized(self, rng):
        for _ in range(100):
            x, util, alpha = random_rational_instance(rng)
            var = x.variance(lambda v: util[v])
            assert biased_mean_shift(x, util, alpha) == alpha * var

    def test_kl_upper_bound_randomized(self, rng):
        for _ in range(100):
            x, util, alpha = random_rational_instance(rng, for_kl_bound=True)
            var = x.variance(lambda v: util[v])
            kl = kl_divergence(biased(x, util, alpha), x)
            assert kl <= float(2 * alpha ** 2 * var)


class TestDivergences:
    def test_kl_examples(self):
        u = FiniteDistribution((0, 1), (Fraction(1, 2), Fraction(1, 2)))
        point = FiniteDistribution((1,), (Fraction(1),))
        assert kl_divergence(u, u) == 0
        assert kl_divergence(point, u) == pytest.approx(1.0)
        assert math.isinf(kl_divergence(u, point))

    def test_statistical_distance_examples(self):
        u = FiniteDistribution((0, 1), (Fraction(1, 2), Fraction(1, 2)))
        q = FiniteDistribution((0, 1), (Fraction(1, 4), Fraction(3, 4)))
        p1 = FiniteDistribution((1,), (Fraction(1),))
        p0 = FiniteDistribution((0,), (Fraction(1),))
        assert statistical_distance(u, u) == 0
        assert statistical_distance(p1, p0) == 1
        assert statistical_distance(u, q) == Fraction(1, 4)

    def test_pinsker_examples_and_battery(self, rng):
        u = FiniteDistribution((0, 1), (Fraction(1, 2), Fraction(1, 2)))
        q = FiniteDistribution((0, 1), (Fraction(1, 4), Fraction(3, 4)))
        assert pinsker_check(u, u)
        assert pinsker_check(q, u)
        for _ in range(100):
            size = rng.randint(2, 6)

            def draw():
                w = [rng.random() + 1e-6 for _ in range(size)]
                s = sum(w)
                return FiniteDistribution(tuple(range(size)),
                                          tuple(x / s for x in w))
            assert pinsker_check(draw(), draw())

    def test_data_processing_for_statistical_distance(self, rng):
        # merging values can only shrink total variation
        for _ in range(50):
            size = rng.randint(3, 6)

            def draw():
                w = [rng.randint(1, 9) for _ in range(size)]
                return FiniteDistribution.from_pairs(
                    [(i, Fraction(x, sum(w))) for i, x in enumerate(w)])
            p, q = draw(), draw()

            def merge(d):
                lo = sum(pr for v, pr in d.items() if v < size // 2)
                return FiniteDistribution(("lo", "hi"), (lo, 1 - lo))
            assert statistical_distance(merge(p), merge(q)) <= \
                statistical_distance(p, q)

    def test_kl_convexity(self, rng):
        for _ in range(50):
            x, util, alpha = random_rational_instance(rng)
            p = biased(x, util, alpha)
            for w in (Fraction(1, 4), Fraction(1, 2), Fraction(7, 8)):
                mix = FiniteDistribution(
                    x.values,
                    tuple(w * p.prob(v) + (1 - w) * x.prob(v) for v in x.values))
                assert kl_divergence(mix, x) <= float(w) * kl_divergence(p, x) + 1e-12

    def test_kl_chain_rule_on_product_pairs(self, rng):
        # two-stage joints: summed conditional divergences equal the joint one
        for _ in range(20):
            x1, u1, a1 = random_rational_instance(rng, max_support=4)
            x2, u2, a2 = random_rational_instance(rng, max_support=4)
            q1, q2 = biased(x1, u1, a1), biased(x2, u2, a2)
            joint_p = FiniteDistribution.from_pairs(
                [((v, w), pv * pw) for v, pv in q1.items()
                 for w, pw in q2.items()])
            joint_q = FiniteDistribution.from_pairs(
                [((v, w), pv * pw) for v, pv in x1.items()
                 for w, pw in x2.items()])
            chain = kl_divergence(q1, x1) + kl_divergence(q2, x2)
            assert abs(kl_divergence(joint_p, joint_q) - chain) < 1e-9


class TestMixtureIdentity:
    def test_endpoints(self):
        x = uniform_pm1()
        assert mixture_identity_check(x, IDENTITY, Fraction(1, 2), 1)
        assert mixture_identity_check(x, IDENTITY, Fraction(1, 2), 0)

    def test_half_weight_example(self):
        x = uniform_pm1()
        assert mixture_identity_check(x, IDENTITY, Fraction(1, 2), Fraction(1, 2))
        weak = biased(x, IDENTITY, Fraction(1, 4))
        assert weak.prob(1) == Fraction(5, 8)

    def test_randomized(self, rng):
        for _ in range(100):
            x, util, alpha = random_rational_instance(rng)
            p = Fraction(rng.randint(0, 8), 8)
            assert mixture_identity_check(x, util, alpha, p)


class TestCoupling:
    def test_exact_joint_uniform_pm1(self):
        joint = coupling_joint(uniform_pm1(), IDENTITY, Fraction(1, 2))
        assert joint == {(-1, -1): Fraction(1, 4), (-1, 1): Fraction(1, 4),
                         (1, 1): Fraction(1, 2)}

    def test_nonnegative_utility_keeps_message(self, rng):
        x, util, alpha = random_rational_instance(rng)
        for _ in range(200):
            a, b = monotone_coupling(x, util, alpha, rng)
            if util[a] >= 0:
                assert b == a
            assert util[b] >= util[a]

    def test_zero_utility_is_diagonal(self, rng):
        x = uniform_pm1()
        zero = {v: Fraction(0) for v in x.values}
        for _ in range(50):
            a, b = monotone_coupling(x, zero, Fraction(2), rng)
            assert a == b

    def test_sampled_joint_matches_exact(self):
        x = uniform_pm1()
        alpha = Fraction(1, 2)
        rng = random.Random(99)
        counts = {}
        trials = 100_000
        for _ in range(trials):
            pair = monotone_coupling(x, IDENTITY, alpha, rng)
            counts[pair] = counts.get(pair, 0) + 1
        exact = coupling_joint(x, IDENTITY, alpha)
        for pair, pr in exact.items():
            f = counts.get(pair, 0) / trials
            se = math.sqrt(float(pr) * (1 - float(pr)) / trials)
            assert abs(f - float(pr)) <= 3 * se

    def test_marginals_and_dominance_randomized(self, rng):
        for _ in range(50):
            x, util, alpha = random_rational_instance(rng)
            joint = coupling_joint(x, util, alpha)
            tilted = biased(x, util, alpha)
            assert all(util[b] >= util[a] for a, b in joint)
            for v, pr in x.items():
                assert sum(m for (a, _), m in joint.items() if a == v) == pr
            for v, pr in tilted.items():
                assert sum(m for (_, b), m in joint.items() if b == v) == pr

    def test_conditional_honest_coordinate(self, rng):
        # law of a given b, recomputed from the joint
        for _ in range(30):
            x, util, alpha = random_rational_instance(rng)
            joint = coupling_joint(x, util, alpha)
            tilted = biased(x, util, alpha)
            for b, pb in tilted.items():
                cond = coupling_conditional(x, util, alpha, b)
                for a, _ in x.items():
                    expect = joint.get((a, b), Fraction(0)) / pb
                    assert cond.prob(a) == expect


@st.composite
def rational_instances(draw):
    weights = draw(st.lists(st.integers(1, 9), min_size=2, max_size=8))
    total = sum(weights)
    x = FiniteDistribution.from_pairs(
        [(i, Fraction(w, total)) for i, w in enumerate(weights)])
    raw = draw(st.lists(st.integers(-9, 9), min_size=len(weights),
                        max_size=len(weights)))
    mean = sum(p * r for (_, p), r in zip(x.items(), raw))
    util = {v: Fraction(r) - mean for (v, _), r in zip(x.items(), raw)}
    worst = min(util.values())
    num = draw(st.integers(1, 8))
    alpha = (Fraction(num, 8) if worst == 0
             else Fraction(num, 8) * (-1 / (2 * worst)))
    return x, util, alpha


@given(rational_instances())
@settings(max_examples=60, deadline=None)
def test_biased_properties_hypothesis(instance):
    x, util, alpha = instance
    tilted = biased(x, util, alpha)
    assert sum(tilted.probs) == 1
    assert all(p >= 0 for p in tilted.probs)
    var = x.variance(lambda v: util[v])
    assert biased_mean_shift(x, util, alpha) == alpha * var
    assert kl_divergence(tilted, x) <= float(2 * alpha ** 2 * var)
    joint = coupling_joint(x, util, alpha)
    assert all(util[b] >= util[a] for a, b in joint)
