"""Pseudo-party refinement and validation of the normality conditions.

Normalization never changes message content, order, or the output; it only
refines speaker identities so that every round with a qualifying negative
jump belongs to one sentinel party, rounds with large conditional variance
get fresh one-shot speaker labels, and runs of low-variance rounds are capped
by accumulated variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .params import AttackParameters
from .protocol import (JumpClass, Protocol, classify_round, round_view,
                       transcript_distribution, walk_reachable)

#: sentinel speaker owning every qualifying negative-jump round
NONROBUST_PARTY = "NonRobust"


def _small_label(party, k):
    return ("small", party, k)


def _large_label(party, k):
    return ("large", party, k)


@dataclass
class PartyMapping:
    """Prefix-to-pseudo-party assignment recorded during normalization."""

    assignments: dict = field(default_factory=dict)

    def party_at(self, prefix):
        return self.assignments[prefix]

    def to_original(self, pseudo):
        """Original party owning a pseudo-party; ``None`` for the sentinel."""
        if pseudo == NONROBUST_PARTY:
            return None
        return pseudo[1]

    def used_pseudo_parties(self) -> set:
        return set(self.assignments.values())


class _Normalizer:
    """Replays the counter protocol along prefixes, with per-prefix memo.

    Counters per original party: ``large_count`` and ``small_count`` start at
    one, ``acc`` (accumulated small-round variance) starts at zero and resets
    after strictly exceeding the large-variance threshold.
    """

    def __init__(self, base: Protocol, params: AttackParameters,
                 mapping: PartyMapping):
        self.base = base
        self.params = params
        self.mapping = mapping
        self._states: dict = {(): {}}

    def _state(self, prefix):
        state = self._states.get(prefix)
        if state is None:
            prev = self._state(prefix[:-1])
            _, state = self._assign(prefix[:-1], prev)
            self._states[prefix] = state
        return state

    def _assign(self, prefix, state):
        """Pseudo-party speaking at ``prefix`` and the post-round counters."""
        view = round_view(self.base, prefix, validate=False)
        cls = classify_round(view, self.params)
        if cls is JumpClass.NON_ROBUST:
            return NONROBUST_PARTY, state
        party = view.party
        large, small, acc = state.get(party, (1, 1, 0))
        new = dict(state)
        if cls is JumpClass.LARGE:
            label = _large_label(party, large)
            new[party] = (large + 1, small, acc)
        else:
            label = _small_label(party, small)
            acc = acc + view.variance
            if float(acc) > self.params.large_var_threshold:
                new[party] = (large, small + 1, 0)
            else:
                new[party] = (large, small, acc)
        return label, new

    def party_at(self, prefix):
        label = self.mapping.assignments.get(prefix)
        if label is None:
            label, _ = self._assign(prefix, self._state(prefix))
            self.mapping.assignments[prefix] = label
        return label


def normalize(p: Protocol, params: AttackParameters) -> tuple[Protocol, PartyMapping]:
    """Refine ``p``'s speakers into pseudo-parties; semantics are unchanged.

    The returned protocol shares ``p``'s message distributions and output
    (including any closed form), so conditional expectations agree exactly;
    only ``next_party`` differs.
    """
    mapping = PartyMapping()
    norm = _Normalizer(p, params, mapping)
    wrapped = Protocol(
        n_parties=2 * p.n_rounds * p.n_parties + 1,
        n_rounds=p.n_rounds,
        next_party=norm.party_at,
        message_dist=p.dist,
        output=p.output,
        name=f"{p.name}/normalized" if p.name else "normalized",
        node_budget=p.node_budget,
        closed_form=p.closed_form,
        state_key=p.state_key,
        fast_lane=p.fast_lane,
    )
    return wrapped, mapping


@dataclass
class ConditionReport:
    passed: bool
    witness: tuple | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"passed": self.passed,
                "witness": list(self.witness) if self.witness is not None else None,
                "detail": self.detail}


@dataclass
class NormalityReport:
    conditions: dict
    nonrobust_party: object
    pseudo_party_count: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "nonrobust_party": repr(self.nonrobust_party),
            "pseudo_party_count": self.pseudo_party_count,
            "conditions": {k: v.as_dict() for k, v in self.conditions.items()},
        }


def validate_normal(p: Protocol, params: AttackParameters) -> NormalityReport:
    """Check the four normality conditions by exhaustive transcript walk.

    Works on arbitrary protocols: the sentinel party is inferred as the sole
    owner of qualifying rounds (condition 1 fails if ownership is mixed).
    Witnesses are full transcripts exhibiting the first violation found.
    """
    per_transcript: list[tuple[tuple, list]] = []
    rounds_cache: dict = {}
    for prefix, _mass in walk_reachable(p):
        if len(prefix) < p.n_rounds:
            view = round_view(p, prefix, validate=False)
            rounds_cache[prefix] = (view.party, classify_round(view, params),
                                    view.variance)
        else:
            rows = [rounds_cache[prefix[:i]] for i in range(p.n_rounds)]
            per_transcript.append((prefix, rows))

    owners = {party for _, rows in per_transcript
              for party, cls, _ in rows if cls is JumpClass.NON_ROBUST}
    cond1 = ConditionReport(True)
    nonrobust = None
    if len(owners) > 1:
        cond1 = ConditionReport(False, per_transcript[0][0],
                                f"qualifying rounds owned by {sorted(map(repr, owners))}")
    elif len(owners) == 1:
        nonrobust = next(iter(owners))
        for transcript, rows in per_transcript:
            for party, cls, _ in rows:
                if party == nonrobust and cls is not JumpClass.NON_ROBUST:
                    cond1 = ConditionReport(
                        False, transcript,
                        f"{nonrobust!r} owns a round that does not qualify")
                    break
            if not cond1.passed:
                break

    cond2 = ConditionReport(True)
    cond3 = ConditionReport(True)
    cond4 = ConditionReport(True)
    thr = params.large_var_threshold
    for transcript, rows in per_transcript:
        by_party: dict = {}
        for party, cls, var in rows:
            if party == nonrobust:
                continue
            by_party.setdefault(party, []).append((cls, var))
        unfulfilled = 0
        for party, entries in by_party.items():
            is_large = any(float(v) >= thr for _, v in entries)
            if is_large and cond2.passed and len(entries) != 1:
                cond2 = ConditionReport(
                    False, transcript,
                    f"large-jump party {party!r} speaks {len(entries)} times")
            if not is_large:
                total = sum(v for _, v in entries)
                if cond3.passed and float(total) > 2 * thr + 1e-12:
                    cond3 = ConditionReport(
                        False, transcript,
                        f"small-jumps party {party!r} accumulates variance {float(total)}")
                if float(total) < thr:
                    unfulfilled += 1
        if cond4.passed and unfulfilled > params.n:
            cond4 = ConditionReport(
                False, transcript, f"{unfulfilled} unfulfilled parties")

    pseudo_count = len({party for _, rows in per_transcript for party, _, _ in rows})
    return NormalityReport(
        conditions={"single_nonrobust_party": cond1,
                    "large_jump_party_speaks_once": cond2,
                    "small_jumps_variance_bounded": cond3,
                    "unfulfilled_parties_bounded": cond4},
        nonrobust_party=nonrobust,
        pseudo_party_count=pseudo_count,
    )


def semantics_preserved(p: Protocol, q: Protocol) -> bool:
    """Exact equality of transcript laws and outputs (speaker labels aside)."""
    dp = transcript_distribution(p)
    dq = transcript_distribution(q)
    if set(dp) != set(dq):
        return False
    return all(dp[t] == dq[t] and p.output(t) == q.output(t) for t in dp)
