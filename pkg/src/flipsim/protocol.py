"""Stateless broadcast-round protocols as finite probabilistic trees.

A protocol is described functionally: who speaks after a given transcript
prefix, from which finite distribution the honest message is drawn, and the
output bit of a full transcript.  Exact quantities (conditional expected
outcomes, jumps, conditional variances, robustness probability) are computed
by backward induction over the reachable tree, memoized, and gated by a node
budget.

Protocols whose subtree behavior depends on the prefix only through a small
abstract state may supply ``state_key`` so the memo collapses equivalent
prefixes, and/or ``closed_form`` for a direct per-prefix expected outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Hashable, Mapping

from .dist import FiniteDistribution
from .errors import BudgetExceededError, InvalidPrefixError, NoNextRoundError
from .params import AttackParameters

Prefix = tuple
DEFAULT_NODE_BUDGET = 10 ** 6


@dataclass(frozen=True)
class Protocol:
    n_parties: int
    n_rounds: int
    next_party: Callable[[Prefix], object]
    message_dist: Callable[[Prefix], FiniteDistribution]
    output: Callable[[Prefix], int]
    name: str = ""
    node_budget: int = DEFAULT_NODE_BUDGET
    closed_form: Callable[[Prefix], object] | None = None
    state_key: Callable[[Prefix], Hashable] | None = None
    fast_lane: object | None = None
    _outcome_memo: dict = field(default_factory=dict, repr=False, compare=False)
    _dist_memo: dict = field(default_factory=dict, repr=False, compare=False)

    def key(self, prefix: Prefix) -> Hashable:
        return self.state_key(prefix) if self.state_key is not None else prefix

    def dist(self, prefix: Prefix) -> FiniteDistribution:
        k = self.key(prefix)
        d = self._dist_memo.get(k)
        if d is None:
            d = self.message_dist(prefix)
            self._dist_memo[k] = d
        return d

    def charge(self, extra_nodes: int = 1) -> None:
        """Account ``extra_nodes`` against the shared exact-work budget."""
        if len(self._outcome_memo) + extra_nodes > self.node_budget:
            raise BudgetExceededError(
                f"protocol {self.name or '<anonymous>'} exceeded node budget "
                f"{self.node_budget}")


def validate_prefix(p: Protocol, prefix: Prefix) -> None:
    """Raise unless ``prefix`` is reachable under honest play."""
    if not isinstance(prefix, tuple):
        raise InvalidPrefixError(f"prefix must be a tuple, got {type(prefix)!r}")
    if len(prefix) > p.n_rounds:
        raise InvalidPrefixError(
            f"prefix of length {len(prefix)} exceeds {p.n_rounds} rounds")
    for i, m in enumerate(prefix):
        if p.dist(prefix[:i]).prob(m) <= 0:
            raise InvalidPrefixError(
                f"message {m!r} at round {i} has zero honest probability")


def _leaf_value(p: Protocol, transcript: Prefix):
    out = p.output(transcript)
    if out not in (0, 1):
        raise ValueError(f"output must be a bit, got {out!r} at {transcript!r}")
    return out


def _expected(p: Protocol, prefix: Prefix):
    """Memoized backward induction; assumes ``prefix`` is reachable."""
    if p.closed_form is not None:
        return p.closed_form(prefix)
    memo = p._outcome_memo
    root_key = p.key(prefix)
    if root_key in memo:
        return memo[root_key]
    stack = [prefix]
    while stack:
        t = stack[-1]
        k = p.key(t)
        if k in memo:
            stack.pop()
            continue
        if len(t) == p.n_rounds:
            p.charge()
            memo[k] = _leaf_value(p, t)
            stack.pop()
            continue
        d = p.dist(t)
        pending = [t + (m,) for m, _ in d.items() if p.key(t + (m,)) not in memo]
        if pending:
            stack.extend(pending)
        else:
            p.charge()
            memo[k] = sum(pr * memo[p.key(t + (m,))] for m, pr in d.items())
            stack.pop()
    return memo[root_key]


def expected_outcome(p: Protocol, prefix: Prefix):
    """Exact conditional expected output given ``prefix``.

    Full transcripts return the output bit itself; the empty prefix returns
    the protocol's overall expectation.
    """
    validate_prefix(p, prefix)
    return _expected(p, prefix)


class JumpClass(Enum):
    NON_ROBUST = "non_robust"
    LARGE = "large"
    SMALL = "small"


@dataclass(frozen=True)
class RoundView:
    """Transcript-conditional view of one round (0-based ``round_index``)."""

    round_index: int
    party: object
    dist: FiniteDistribution
    jumps: Mapping[object, object]
    variance: object

    def min_jump(self):
        return min(self.jumps.values())


def round_view(p: Protocol, prefix: Prefix, validate: bool = True) -> RoundView:
    if validate:
        validate_prefix(p, prefix)
    if len(prefix) >= p.n_rounds:
        raise NoNextRoundError(f"transcript of length {len(prefix)} is complete")
    d = p.dist(prefix)
    base = _expected(p, prefix)
    jumps = {m: _expected(p, prefix + (m,)) - base for m, _ in d.items()}
    mean = sum(pr * jumps[m] for m, pr in d.items())
    variance = sum(pr * (jumps[m] - mean) ** 2 for m, pr in d.items())
    return RoundView(round_index=len(prefix), party=p.next_party(prefix),
                     dist=d, jumps=jumps, variance=variance)


def classify_round(view: RoundView, params: AttackParameters) -> JumpClass:
    """Order matters: the negative-jump test precedes the variance test."""
    if float(view.min_jump()) <= -params.neg_jump_threshold:
        return JumpClass.NON_ROBUST
    if float(view.variance) >= params.large_var_threshold:
        return JumpClass.LARGE
    return JumpClass.SMALL


def is_robust(p: Protocol, params: AttackParameters) -> tuple[bool, object]:
    """Exact probability of meeting a non-robust round, and the verdict.

    The probability is of the event that an honest execution passes through
    at least one prefix whose round classifies ``NON_ROBUST``; the protocol
    is robust when that probability is at most ``delta``.
    """
    memo: dict = {}

    def hit_key(t):
        return p.key(t)

    stack = [()]
    while stack:
        t = stack[-1]
        k = hit_key(t)
        if k in memo:
            stack.pop()
            continue
        if len(t) == p.n_rounds:
            memo[k] = 0
            stack.pop()
            continue
        view = round_view(p, t, validate=False)
        if classify_round(view, params) is JumpClass.NON_ROBUST:
            p.charge()
            memo[k] = 1
            stack.pop()
            continue
        pending = [t + (m,) for m, _ in view.dist.items()
                   if hit_key(t + (m,)) not in memo]
        if pending:
            stack.extend(pending)
        else:
            p.charge()
            memo[k] = sum(pr * memo[hit_key(t + (m,))]
                          for m, pr in view.dist.items())
            stack.pop()
    prob = memo[hit_key(())]
    return float(prob) <= params.delta, prob


def walk_reachable(p: Protocol):
    """Yield ``(prefix, mass)`` for every reachable prefix, root first.

    Masses are honest-execution reach probabilities.  Budget-gated through
    the protocol's charge counter.
    """
    stack = [((), 1)]
    while stack:
        t, mass = stack.pop()
        yield t, mass
        if len(t) == p.n_rounds:
            continue
        p.charge()
        for m, pr in reversed(p.dist(t).items()):
            stack.append((t + (m,), mass * pr))


def transcript_distribution(p: Protocol) -> dict:
    """Exact law of the honest transcript, as ``{transcript: probability}``."""
    return {t: mass for t, mass in walk_reachable(p) if len(t) == p.n_rounds}
