"""Canonical protocol generators used by tests, acceptance runs and the CLI.

Generators default to exact (rational) arithmetic; pass ``exact=False`` for
the float variants used in large Monte Carlo sweeps.  Majority generators
carry a state abstraction (rounds elapsed, ones seen), which collapses the
memoized tree and, for the single-turn family, a vectorized simulation lane.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .dist import FiniteDistribution
from .fastlane import MajorityLane
from .protocol import Protocol


def _bit_dist(p_zero, exact: bool) -> FiniteDistribution:
    if exact:
        return FiniteDistribution((0, 1), (p_zero, 1 - p_zero))
    return FiniteDistribution((0, 1), (float(p_zero), 1.0 - float(p_zero)))


@lru_cache(maxsize=None)
def _binom_tail(m: int, need: int) -> Fraction:
    """Exact Pr[Binomial(m, 1/2) >= need]."""
    if need <= 0:
        return Fraction(1)
    if need > m:
        return Fraction(0)
    return Fraction(sum(math.comb(m, k) for k in range(need, m + 1)), 2 ** m)


def _majority_closed_form(total: int, exact: bool, lane: MajorityLane | None):
    need_total = total // 2 + 1

    def closed(prefix):
        if exact:
            return _binom_tail(total - len(prefix), need_total - sum(prefix))
        return lane.expected(prefix)

    return closed


def majority_single_turn(n: int, exact: bool = True,
                         node_budget: int | None = None) -> Protocol:
    """n parties, one unbiased bit each in fixed order; output the majority."""
    if n % 2 == 0:
        raise ValueError(f"party count must be odd, got {n}")
    uniform = _bit_dist(Fraction(1, 2), exact)
    lane = MajorityLane(n)
    kwargs = {"node_budget": node_budget} if node_budget is not None else {}
    return Protocol(
        n_parties=n, n_rounds=n,
        next_party=lambda t: len(t) + 1,
        message_dist=lambda t: uniform,
        output=lambda t: 1 if sum(t) > n / 2 else 0,
        name=f"majority{n}" + ("" if exact else "f"),
        closed_form=_majority_closed_form(n, exact, lane),
        state_key=lambda t: (len(t), sum(t)),
        fast_lane=lane,
        **kwargs)


def majority_many_turn(n: int, k: int, exact: bool = True) -> Protocol:
    """n parties send k bits each, round-robin (party i speaks at rounds
    i, i+n, ...); output the majority of all n*k bits."""
    total = n * k
    if total % 2 == 0:
        raise ValueError(f"total bit count must be odd, got {n}*{k}")
    uniform = _bit_dist(Fraction(1, 2), exact)
    return Protocol(
        n_parties=n, n_rounds=total,
        next_party=lambda t: len(t) % n + 1,
        message_dist=lambda t: uniform,
        output=lambda t: 1 if sum(t) > total / 2 else 0,
        name=f"majority{n}x{k}",
        closed_form=_majority_closed_form(total, exact, None) if exact else None,
        state_key=lambda t: (len(t), sum(t)))


def biased_and(n: int, exact: bool = True) -> Protocol:
    """Each party sends a bit that is 0 with probability 1/n; output the AND.

    The honest expectation is (1 - 1/n)^n, and no adversary can push the
    output toward one by much, making the one-sidedness of biasing concrete.
    """
    if n < 1:
        raise ValueError(f"need at least one party, got {n}")
    d = _bit_dist(Fraction(1, n), exact)

    def closed(prefix):
        if 0 in prefix:
            return Fraction(0) if exact else 0.0
        rest = n - len(prefix)
        return Fraction(n - 1, n) ** rest if exact else (1 - 1 / n) ** rest

    return Protocol(
        n_parties=n, n_rounds=n,
        next_party=lambda t: len(t) + 1,
        message_dist=lambda t: d,
        output=lambda t: 1 if all(t) else 0,
        name=f"and{n}",
        closed_form=closed,
        state_key=lambda t: (len(t), 1 if all(t) else 0))


def punishing_majority(n: int, k: int, run_len: int,
                       exact: bool = True) -> Protocol:
    """Round-robin k-bit majority where a party whose bits ever contain a
    1-run of length ``run_len`` has all its bits excluded from the vote.

    Ties in the reduced vote (including an empty vote) resolve to 0.
    """
    total = n * k
    uniform = _bit_dist(Fraction(1, 2), exact)

    def party_bits(t, party):
        return t[party - 1::n]

    def punished(bits) -> bool:
        run = 0
        for b in bits:
            run = run + 1 if b == 1 else 0
            if run >= run_len:
                return True
        return False

    def output(t) -> int:
        votes = []
        for party in range(1, n + 1):
            bits = party_bits(t, party)
            if not punished(bits):
                votes.extend(bits)
        return 1 if 2 * sum(votes) > len(votes) else 0

    return Protocol(
        n_parties=n, n_rounds=total,
        next_party=lambda t: len(t) % n + 1,
        message_dist=lambda t: uniform,
        output=output,
        name=f"punishing{n}x{k}r{run_len}")


def constant_protocol(bit: int = 1, n_rounds: int = 2,
                      exact: bool = True) -> Protocol:
    """One party broadcasting unbiased bits that are ignored by the output."""
    if bit not in (0, 1):
        raise ValueError(f"output bit must be 0 or 1, got {bit}")
    uniform = _bit_dist(Fraction(1, 2), exact)
    return Protocol(
        n_parties=1, n_rounds=n_rounds,
        next_party=lambda t: 1,
        message_dist=lambda t: uniform,
        output=lambda t: bit,
        name=f"constant{bit}",
        closed_form=lambda t: Fraction(bit) if exact else float(bit),
        state_key=lambda t: len(t))


def two_round_or(exact: bool = True) -> Protocol:
    """Two-round toy with one large-variance round and one non-robust round.

    Party 1 sends a bit that is 1 with probability 1/9; party 2 sends an
    unbiased bit; the output is the OR.  The first round has a lopsided jump
    profile (+4/9 against -1/18), and after a 0 the second round swings the
    outcome by half in either direction.
    """
    d1 = (FiniteDistribution((0, 1), (Fraction(8, 9), Fraction(1, 9)))
          if exact else FiniteDistribution((0, 1), (8 / 9, 1 / 9)))
    d2 = _bit_dist(Fraction(1, 2), exact)
    return Protocol(
        n_parties=2, n_rounds=2,
        next_party=lambda t: len(t) + 1,
        message_dist=lambda t: d1 if len(t) == 0 else d2,
        output=lambda t: 1 if (t[0] or t[1]) else 0,
        name="two_round_or")


GENERATORS = {
    "majority_single_turn": majority_single_turn,
    "majority_many_turn": majority_many_turn,
    "biased_and": biased_and,
    "punishing_majority": punishing_majority,
    "constant": constant_protocol,
    "two_round_or": two_round_or,
}
