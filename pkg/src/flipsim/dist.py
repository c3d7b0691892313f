"""Exact finite-distribution toolkit.

Distributions carry either ``fractions.Fraction`` probabilities (exact mode,
used by the oracle tests) or floats (used by the Monte Carlo harness).  All
operations preserve the arithmetic of their inputs; divergences are returned
in bits (logarithms are base 2 throughout).
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import InvalidBiasError, InvalidUtilityError

Value = object
Numeric = Fraction | float | int

#: absolute tolerance for float-mode sanity checks (mass sums, centering)
FLOAT_TOL = 1e-9


def _is_exact(xs: Iterable[Numeric]) -> bool:
    return all(isinstance(x, (Fraction, int)) for x in xs)


@dataclass(frozen=True)
class FiniteDistribution:
    """A probability distribution over a finite, ordered alphabet.

    ``values`` may include zero-probability entries (a declared alphabet);
    the effective support is the positive-probability subset.  Entries must
    be distinct and hashable, and the declared order is the canonical order
    used for deterministic tie-breaking elsewhere in the package.
    """

    values: tuple
    probs: tuple
    _cumulative: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.values) != len(set(self.values)):
            raise ValueError("distribution values must be distinct")
        if len(self.values) != len(self.probs):
            raise ValueError("values and probs must have equal length")
        if not self.values:
            raise ValueError("distribution must have at least one value")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be nonnegative")
        total = sum(self.probs)
        if self.is_exact:
            if total != 1:
                raise ValueError(f"probabilities sum to {total}, expected 1")
        elif abs(total - 1) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")

    @property
    def is_exact(self) -> bool:
        return _is_exact(self.probs)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Value, Numeric]]) -> "FiniteDistribution":
        vs, ps = zip(*pairs)
        return cls(tuple(vs), tuple(ps))

    @classmethod
    def uniform(cls, values: Sequence[Value], exact: bool = True) -> "FiniteDistribution":
        n = len(values)
        p = Fraction(1, n) if exact else 1.0 / n
        return cls(tuple(values), tuple(p for _ in values))

    @classmethod
    def point(cls, value: Value) -> "FiniteDistribution":
        return cls((value,), (Fraction(1),))

    def prob(self, value: Value) -> Numeric:
        for v, p in zip(self.values, self.probs):
            if v == value:
                return p
        return Fraction(0) if self.is_exact else 0.0

    def support(self) -> tuple:
        """Positive-probability values, in declared order."""
        return tuple(v for v, p in zip(self.values, self.probs) if p > 0)

    def items(self) -> list[tuple[Value, Numeric]]:
        """(value, probability) pairs restricted to the effective support."""
        return [(v, p) for v, p in zip(self.values, self.probs) if p > 0]

    def expectation(self, f: Callable[[Value], Numeric]) -> Numeric:
        return sum(p * f(v) for v, p in self.items())

    def variance(self, f: Callable[[Value], Numeric]) -> Numeric:
        mu = self.expectation(f)
        return sum(p * (f(v) - mu) ** 2 for v, p in self.items())

    def as_float(self) -> "FiniteDistribution":
        return FiniteDistribution(self.values, tuple(float(p) for p in self.probs))

    def _cum(self) -> list:
        # sampling table is built lazily; frozen dataclass, so go through
        # __dict__ rather than attribute assignment
        cum = self.__dict__.get("_cumulative")
        if cum is None:
            acc, cum = 0.0, []
            for p in self.probs:
                acc += float(p)
                cum.append(acc)
            cum[-1] = max(cum[-1], 1.0)
            self.__dict__["_cumulative"] = cum
        return cum

    def sample(self, rng) -> Value:
        """Draw one value using ``rng.random()``.

        Zero-probability entries are never returned, even when the uniform
        draw lands exactly on a repeated cumulative value.
        """
        u = rng.random()
        idx = bisect_left(self._cum(), u)
        while self.probs[idx] == 0:
            idx += 1
        return self.values[idx]


def same_distribution(p: FiniteDistribution, q: FiniteDistribution,
                      tol: Numeric = 0) -> bool:
    """Pointwise equality over the union of declared alphabets."""
    domain = list(p.values) + [v for v in q.values if v not in set(p.values)]
    for v in domain:
        if abs(p.prob(v) - q.prob(v)) > tol:
            return False
    return True


def as_utility(f: Callable[[Value], Numeric] | Mapping[Value, Numeric],
               dist: FiniteDistribution) -> dict:
    """Materialize a utility function as a dict over the declared alphabet."""
    if isinstance(f, Mapping):
        return {v: f[v] for v in dist.values}
    return {v: f(v) for v in dist.values}


def _check_biased_inputs(x: FiniteDistribution, util: dict, alpha: Numeric) -> None:
    if alpha < 0:
        raise InvalidBiasError(f"tilt strength must be nonnegative, got {alpha}")
    mean = sum(p * util[v] for v, p in x.items())
    if x.is_exact and _is_exact(util.values()) and not isinstance(alpha, float):
        centered = mean == 0
    else:
        centered = abs(mean) <= FLOAT_TOL
    if not centered:
        raise InvalidUtilityError(f"utility is not centered: E[f] = {mean}")
    if alpha > 0:
        bound = Fraction(-1, 1) / alpha if not isinstance(alpha, float) else -1.0 / alpha
        for v, _ in x.items():
            if util[v] < bound:
                raise InvalidBiasError(
                    f"utility value {util[v]} at {v!r} below -1/alpha = {bound}")


def biased(x: FiniteDistribution,
           f: Callable[[Value], Numeric] | Mapping[Value, Numeric],
           alpha: Numeric) -> FiniteDistribution:
    """Reweight ``x`` toward larger values of a centered utility ``f``.

    The result places mass ``P(v) * (1 + alpha*f(v))`` on each value ``v``;
    centering of ``f`` makes the masses sum to one.  Requires ``f >= -1/alpha``
    on the effective support (vacuous at ``alpha == 0``).
    """
    util = as_utility(f, x)
    _check_biased_inputs(x, util, alpha)
    if alpha == 0:
        return x
    probs = tuple(p * (1 + alpha * util[v]) for v, p in zip(x.values, x.probs))
    # guard against float rounding dipping epsilon below zero at the boundary
    if not _is_exact(probs):
        probs = tuple(max(0.0, float(p)) for p in probs)
        total = sum(probs)
        probs = tuple(p / total for p in probs)
    return FiniteDistribution(x.values, probs)


def biased_mean_shift(x: FiniteDistribution,
                      f: Callable[[Value], Numeric] | Mapping[Value, Numeric],
                      alpha: Numeric) -> Numeric:
    """Mean of ``f`` under the tilted distribution.

    Computed directly from the tilted masses; equals ``alpha * Var[f(X)]``
    identically, which the test suite checks against an independent variance
    computation.
    """
    util = as_utility(f, x)
    tilted = biased(x, util, alpha)
    return sum(p * util[v] for v, p in tilted.items())


def kl_divergence(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Relative entropy ``KL(P || Q)`` in bits; ``inf`` on support violation."""
    qprob = {v: pr for v, pr in zip(q.values, q.probs)}
    out = 0.0
    for v, pv in p.items():
        qv = qprob.get(v, 0)
        if qv == 0:
            return math.inf
        out += float(pv) * math.log2(float(pv) / float(qv))
    return out


def statistical_distance(p: FiniteDistribution, q: FiniteDistribution) -> Numeric:
    """Total variation distance; exact when both inputs are exact."""
    domain = list(p.values) + [v for v in q.values if v not in set(p.values)]
    total = sum(abs(p.prob(v) - q.prob(v)) for v in domain)
    return total / 2 if isinstance(total, float) else Fraction(total, 2)


def pinsker_check(p: FiniteDistribution, q: FiniteDistribution) -> bool:
    """Diagnostic: statistical distance is at most ``sqrt(KL/2)``."""
    kl = kl_divergence(p, q)
    if math.isinf(kl):
        return True
    return float(statistical_distance(p, q)) <= math.sqrt(kl / 2) + 1e-12


def mixture_identity_check(x: FiniteDistribution,
                           f: Callable[[Value], Numeric] | Mapping[Value, Numeric],
                           alpha: Numeric, p: Numeric) -> bool:
    """Check ``p*biased(X,f,a) + (1-p)*X == biased(X,f,p*a)`` pointwise."""
    if not 0 <= p <= 1:
        raise ValueError(f"mixture weight must lie in [0,1], got {p}")
    util = as_utility(f, x)
    strong = biased(x, util, alpha)
    weak = biased(x, util, p * alpha)
    tol = 0 if (x.is_exact and strong.is_exact and weak.is_exact) else FLOAT_TOL
    for v in x.values:
        lhs = p * strong.prob(v) + (1 - p) * x.prob(v)
        if abs(lhs - weak.prob(v)) > tol:
            return False
    return True


def _positive_part(x: FiniteDistribution, util: dict) -> FiniteDistribution:
    """Auxiliary distribution with mass proportional to ``P(v)*f(v)`` on f > 0."""
    pairs = [(v, p * util[v]) for v, p in x.items() if util[v] > 0]
    total = sum(w for _, w in pairs)
    return FiniteDistribution.from_pairs([(v, w / total) for v, w in pairs])


def monotone_coupling(x: FiniteDistribution,
                      f: Callable[[Value], Numeric] | Mapping[Value, Numeric],
                      alpha: Numeric, rng) -> tuple[Value, Value]:
    """Sample a coupled pair ``(a, b)`` with ``f(b) >= f(a)`` surely.

    Marginally ``a ~ X`` and ``b ~ biased(X, f, alpha)``.  Rejection form:
    keep ``b = a`` when ``f(a) >= 0``, keep with probability ``1 + alpha*f(a)``
    otherwise, and on rejection resample ``b`` from the positive part of
    ``f`` weighted by ``P*f``.
    """
    util = as_utility(f, x)
    _check_biased_inputs(x, util, alpha)
    a = x.sample(rng)
    if alpha == 0 or util[a] >= 0:
        return a, a
    if rng.random() < float(1 + alpha * util[a]):
        return a, a
    return a, _positive_part(x, util).sample(rng)


def coupling_joint(x: FiniteDistribution,
                   f: Callable[[Value], Numeric] | Mapping[Value, Numeric],
                   alpha: Numeric) -> dict[tuple[Value, Value], Numeric]:
    """Exact joint law of the coupled pair ``(a, b)``; keys restricted to
    positive-probability pairs."""
    util = as_utility(f, x)
    _check_biased_inputs(x, util, alpha)
    joint: dict[tuple[Value, Value], Numeric] = {}

    def add(a, b, mass):
        if mass > 0:
            joint[(a, b)] = joint.get((a, b), 0) + mass

    if alpha == 0:
        for a, p in x.items():
            add(a, a, p)
        return joint
    has_negative = any(util[v] < 0 for v, _ in x.items())
    plus = _positive_part(x, util) if has_negative else None
    for a, p in x.items():
        if util[a] >= 0:
            add(a, a, p)
        else:
            keep = 1 + alpha * util[a]
            add(a, a, p * keep)
            reject = p * (-alpha * util[a])
            for b, pb in plus.items():
                add(a, b, reject * pb)
    return joint


def coupling_conditional(x: FiniteDistribution,
                         f: Callable[[Value], Numeric] | Mapping[Value, Numeric],
                         alpha: Numeric, observed: Value) -> FiniteDistribution:
    """Conditional law of the honest coordinate ``a`` given ``b == observed``.

    Used to sample the honest-coupled increment after a tilted message has
    been realized.  For ``f(observed) < 0`` the pair is diagonal, so the
    conditional is a point mass.
    """
    util = as_utility(f, x)
    _check_biased_inputs(x, util, alpha)
    if alpha == 0 or util[observed] < 0:
        return FiniteDistribution.point(observed)
    p_obs = x.prob(observed)
    denom = p_obs * (1 + alpha * util[observed])
    if denom == 0:
        raise ValueError(f"{observed!r} is outside the tilted support")
    pairs = [(observed, p_obs / denom)]
    # mass routed through rejected negative-utility draws
    plus_mass = sum(p * util[v] for v, p in x.items() if util[v] > 0)
    for a, p in x.items():
        if util[a] < 0:
            w = p * (-alpha * util[a]) * (p_obs * util[observed] / plus_mass) / denom
            pairs.append((a, w))
    return FiniteDistribution.from_pairs(pairs)


def random_rational_instance(rng, max_support: int = 8, max_denom: int = 12,
                             for_kl_bound: bool = False):
    """Draw a random exact (X, f, alpha) triple for property tests.

    Probabilities and utilities are rationals with bounded denominators, so
    every downstream operation stays closed under exact arithmetic.  When
    ``for_kl_bound`` is set, alpha is drawn so that ``f >= -1/(2*alpha)``.
    """
    size = rng.randint(2, max_support)
    weights = [rng.randint(1, max_denom) for _ in range(size)]
    total = sum(weights)
    x = FiniteDistribution.from_pairs(
        [(i, Fraction(w, total)) for i, w in enumerate(weights)])
    raw = [Fraction(rng.randint(-max_denom, max_denom), rng.randint(1, max_denom))
           for _ in range(size)]
    mean = sum(p * r for (_, p), r in zip(x.items(), raw))
    util = {v: r - mean for (v, _), r in zip(x.items(), raw)}
    worst = min(util.values())
    if worst == 0:
        alpha = Fraction(rng.randint(1, 4), rng.randint(1, 4))
    else:
        cap = -1 / ((2 if for_kl_bound else 1) * worst)
        alpha = cap * Fraction(rng.randint(1, 8), 8)
    return x, util, alpha
