"""Adversary strategies over protocol trees.

A strategy exposes its randomness structurally: ``plan(prefix, state)``
returns weighted branches (corruption lotteries), each optionally carrying a
replacement message distribution (adversary-controlled sampling); ``None``
control means the honest party samples.  This single interface drives Monte
Carlo sampling, exact enumeration, derandomization by conditional
expectations, composition, and budget capping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .dist import FiniteDistribution, biased, coupling_conditional
from .errors import (AttackInfeasibleError, BudgetExceededError,
                     CompositionContractError, InvalidBiasError,
                     UndefinedPosteriorError)
from .normalize import normalize
from .params import AttackParameters
from .protocol import (JumpClass, Protocol, classify_round, expected_outcome,
                       is_robust, round_view, validate_prefix)

HALTED = ("__halted__",)


@dataclass(frozen=True)
class Branch:
    """One lottery outcome: its probability, the successor adversary state,
    and the message distribution the adversary enforces (``None`` = honest)."""

    prob: object
    state: object
    control: FiniteDistribution | None
    corrupts: tuple = ()
    note: dict = field(default_factory=dict, compare=False)


class Strategy:
    """Base adversary bound to the protocol (view) it attacks."""

    deterministic = False

    def __init__(self, protocol: Protocol, params: AttackParameters | None = None):
        self.protocol = protocol
        self.params = params

    def initial_state(self):
        return None

    def plan(self, prefix, state) -> list[Branch]:
        raise NotImplementedError

    def observe(self, prefix, message, state):
        return state


class IdentityAdversary(Strategy):
    """Never intervenes; useful as a baseline and composition unit."""

    deterministic = True

    def plan(self, prefix, state):
        return [Branch(1, state, None)]


def _status(state: frozenset, party):
    for item in state:
        if item[0] == "status" and item[1] == party:
            return item[2]
    return None


def _with_status(state: frozenset, party, corrupted: bool) -> frozenset:
    return state | {("status", party, corrupted)}


class NormalAttacker(Strategy):
    """The gentle adaptive attacker for (normal) protocols.

    Per round: non-robust rounds pass through honestly (flagged; optionally
    halting the attack for good in ``strict_halt`` mode).  A party's first
    message at a non-flagged round triggers the corruption lottery: with
    probability ``lambda^2 * sqrt(v)`` on large-variance rounds, and
    ``lambda^2 / sqrt(n)`` otherwise, both clamped to [0,1].  Corrupted
    parties send messages tilted by the round's jump function, with strength
    ``1/sqrt(v)`` on large rounds and ``sqrt(n)`` on small rounds; on small
    rounds the tilt is withheld (honest sampling) once the public corruption
    posterior exceeds ``16*lambda^2/sqrt(n)``.
    """

    def __init__(self, protocol, params, strict_halt: bool = False):
        super().__init__(protocol, params)
        self.strict_halt = strict_halt
        self._posterior_memo: dict = {}
        self._round_cache: dict = {}

    def initial_state(self):
        return frozenset()

    def _round_info(self, prefix):
        """(view, class, lottery prob, clamped, first-message control)."""
        key = self.protocol.key(prefix)
        info = self._round_cache.get(key)
        if info is None:
            view = round_view(self.protocol, prefix, validate=False)
            cls = classify_round(view, self.params)
            if cls is JumpClass.NON_ROBUST:
                info = (view, cls, 0.0, False, None, None)
            else:
                if cls is JumpClass.LARGE:
                    pc, clamped = self.params.large_corrupt_prob(view.variance)
                else:
                    pc, clamped = self.params.clamped_small_prob()
                control, args = self._tilt(view, cls, prefix)
                info = (view, cls, pc, clamped, control, args)
            self._round_cache[key] = info
        return info

    def _tilt(self, view, cls, prefix):
        if cls is JumpClass.LARGE:
            alpha = 1.0 / math.sqrt(float(view.variance))
        else:
            alpha = math.sqrt(self.params.n)
        try:
            control = biased(view.dist, view.jumps, alpha)
        except InvalidBiasError as e:
            raise AttackInfeasibleError(
                f"round {len(prefix)} (party {view.party!r}) admits no valid "
                f"tilt: {e}; a non-robust round was misclassified") from e
        return control, (view.dist, view.jumps, alpha)

    def plan(self, prefix, state):
        if HALTED in state:
            return [Branch(1, state, None, note={"halted": True})]
        view, cls, pc, clamped, control, args = self._round_info(prefix)
        base = {"class": cls, "variance": view.variance, "party": view.party}
        if cls is JumpClass.NON_ROBUST:
            new = state | {HALTED} if self.strict_halt else state
            return [Branch(1, new, None,
                           note=dict(base, nonrobust_hit=True,
                                     halted=self.strict_halt))]
        party = view.party
        status = _status(state, party)
        if status is None:
            branches = []
            if pc > 0:
                branches.append(Branch(
                    pc, _with_status(state, party, True), control, (party,),
                    note=dict(base, lottery=True, clamped=clamped,
                              biased_args=args)))
            if pc < 1:
                branches.append(Branch(
                    1 - pc, _with_status(state, party, False), None,
                    note=dict(base, lottery=True, clamped=clamped)))
            return branches
        if not status:
            return [Branch(1, state, None, note=base)]
        if cls is JumpClass.LARGE:
            return [Branch(1, state, control, note=dict(base, biased_args=args))]
        post = self.posterior(party, prefix)
        if post <= self.params.posterior_cap:
            return [Branch(1, state, control,
                           note=dict(base, posterior=post, biased_args=args))]
        return [Branch(1, state, None,
                       note=dict(base, posterior=post, honest_fallback=True))]

    def posterior(self, party, prefix) -> float | None:
        """Pr[party corrupted | transcript prefix], by forward induction.

        ``None`` when the party's lottery has not happened within ``prefix``
        (no owned round, or only pass-through rounds).  The update at round j
        uses the attack's own round-j rule, which depends on rounds < j only.
        """
        key = (party, prefix)
        if key in self._posterior_memo:
            return self._posterior_memo[key]
        i = len(prefix) - 1
        while i >= 0 and self.protocol.next_party(prefix[:i]) != party:
            i -= 1
        if i < 0:
            result = None
        else:
            t0, m = prefix[:i], prefix[i]
            view, cls, pc, _clamped, control, _args = self._round_info(t0)
            if cls is JumpClass.NON_ROBUST:
                result = self.posterior(party, t0)
            else:
                q = self.posterior(party, t0)
                if q is None:
                    q = pc
                if cls is JumpClass.LARGE or q <= self.params.posterior_cap:
                    d_corr = control
                else:
                    d_corr = view.dist
                num = q * float(d_corr.prob(m))
                den = num + (1 - q) * float(view.dist.prob(m))
                result = num / den if den > 0 else q
        self._posterior_memo[key] = result
        return result


def corruption_posterior(p: Protocol, params: AttackParameters, party,
                         prefix) -> float:
    """Public posterior query; the party must have entered its lottery.

    When the party is exactly the next speaker (lottery held, no message
    sent), this returns the lottery prior.
    """
    validate_prefix(p, prefix)
    attacker = NormalAttacker(p, params)
    q = attacker.posterior(party, prefix)
    if q is not None:
        return q
    if len(prefix) < p.n_rounds and p.next_party(prefix) == party:
        _view, cls, pc, _clamped, _c, _a = attacker._round_info(prefix)
        if cls is not JumpClass.NON_ROBUST:
            return pc
    raise UndefinedPosteriorError(
        f"party {party!r} has no corruption lottery within the given prefix")


class OneShotAttacker(Strategy):
    """Corrupts at most one message: the first one offering a jump at or
    below ``-1/(lambda*sqrt(n))``, replaced by the worst such message
    (ties broken by the distribution's declared order)."""

    deterministic = True

    def initial_state(self):
        return False

    def pick(self, prefix):
        """The replacement message at ``prefix``, or ``None``."""
        view = round_view(self.protocol, prefix, validate=False)
        threshold = -self.params.neg_jump_threshold
        best = None
        for idx, m in enumerate(view.dist.support()):
            j = view.jumps[m]
            if float(j) <= threshold:
                cand = (float(j), idx, m)
                if best is None or cand < best:
                    best = cand
        return None if best is None else best[2]

    def plan(self, prefix, state):
        if state:
            return [Branch(1, state, None)]
        m = self.pick(prefix)
        if m is None:
            return [Branch(1, state, None)]
        party = self.protocol.next_party(prefix)
        return [Branch(1, True, FiniteDistribution.point(m), (party,),
                       note={"one_shot": True, "party": party})]


def attacked_protocol(p: Protocol, strategy: Strategy) -> Protocol:
    """The protocol induced by a deterministic adversary: honest parties act
    as usual while corrupted rounds follow the adversary's (deterministic)
    instruction."""
    if not strategy.deterministic:
        raise CompositionContractError(
            "the attacked protocol is defined for deterministic adversaries")
    states: dict = {(): strategy.initial_state()}

    def state_at(prefix):
        st = states.get(prefix)
        if st is None:
            prev = state_at(prefix[:-1])
            br = _single(strategy.plan(prefix[:-1], prev))
            st = strategy.observe(prefix[:-1], prefix[-1], br.state)
            states[prefix] = st
        return st

    def message_dist(prefix):
        br = _single(strategy.plan(prefix, state_at(prefix)))
        return br.control if br.control is not None else p.dist(prefix)

    return Protocol(
        n_parties=p.n_parties, n_rounds=p.n_rounds, next_party=p.next_party,
        message_dist=message_dist, output=p.output,
        name=f"{p.name}+attacked" if p.name else "attacked",
        node_budget=p.node_budget)


def _single(branches: list[Branch]) -> Branch:
    if len(branches) != 1:
        raise CompositionContractError(
            "deterministic adversary produced a branching plan")
    return branches[0]


def one_shot_attacker(p: Protocol, params: AttackParameters) -> Protocol:
    """The one-shot-attacked protocol (the attack itself is deterministic)."""
    return attacked_protocol(p, OneShotAttacker(p, params))


@dataclass
class IterationResult:
    final: Protocol
    chain: list
    stop_reason: str
    expectations: list
    qualify_probs: list


def iterate_one_shot(p: Protocol, params: AttackParameters,
                     max_rounds: int | None = None) -> IterationResult:
    """Apply the one-shot attack repeatedly until the expectation falls below
    ``epsilon`` (stop ``biased-to-zero``), no qualifying round remains except
    with probability ``delta`` (stop ``robust``), or the iteration budget is
    hit (stop ``budget``)."""
    if max_rounds is None:
        max_rounds = params.default_iteration_limit()
    cur = p
    chain: list[OneShotAttacker] = []
    expectations, qualify_probs = [], []
    while True:
        e = expected_outcome(cur, ())
        expectations.append(e)
        if float(e) < params.epsilon:
            return IterationResult(cur, chain, "biased-to-zero",
                                   expectations, qualify_probs)
        robust, q = is_robust(cur, params)
        qualify_probs.append(q)
        if robust:
            return IterationResult(cur, chain, "robust",
                                   expectations, qualify_probs)
        if len(chain) >= max_rounds:
            return IterationResult(cur, chain, "budget",
                                   expectations, qualify_probs)
        adv = OneShotAttacker(cur, params)
        chain.append(adv)
        cur = attacked_protocol(cur, adv)


class ComposedAdversary(Strategy):
    """Runs a deterministic inner adversary and an outer adversary for the
    inner-attacked protocol; the inner modification wins when present (the
    two never conflict for valid attackers)."""

    def __init__(self, outer: Strategy, inner: Strategy):
        if not inner.deterministic:
            raise CompositionContractError(
                "composition requires a deterministic inner adversary")
        super().__init__(inner.protocol, outer.params or inner.params)
        self.outer = outer
        self.inner = inner
        self.deterministic = outer.deterministic

    def initial_state(self):
        return (self.outer.initial_state(), self.inner.initial_state())

    def plan(self, prefix, state):
        ostate, istate = state
        ib = _single(self.inner.plan(prefix, istate))
        out = []
        for ob in self.outer.plan(prefix, ostate):
            control = ib.control if ib.control is not None else ob.control
            out.append(Branch(ob.prob, (ob.state, ib.state), control,
                              ob.corrupts + ib.corrupts,
                              note={"outer": ob.note, "inner": ib.note}))
        return out

    def observe(self, prefix, message, state):
        ostate, istate = state
        return (self.outer.observe(prefix, message, ostate),
                self.inner.observe(prefix, message, istate))


def compose(outer: Strategy, inner: Strategy) -> ComposedAdversary:
    return ComposedAdversary(outer, inner)


def chain_adversaries(p: Protocol, params: AttackParameters,
                      chain: Iterable[Strategy]) -> Strategy:
    """Fold a list of adversaries (first applied first) into one strategy."""
    chain = list(chain)
    if not chain:
        return IdentityAdversary(p, params)
    acc = chain[0]
    for adv in chain[1:]:
        acc = compose(adv, acc)
    return acc


class DerandomizedAdversary(Strategy):
    """Deterministic version of a randomized adversary, fixing every lottery
    and controlled-message draw to the branch that optimizes the exact
    conditional expected outcome."""

    deterministic = True

    def __init__(self, p: Protocol, adv: Strategy, direction: str = "maximize"):
        if direction not in ("maximize", "minimize"):
            raise ValueError(f"direction must be maximize|minimize, got {direction}")
        super().__init__(p, adv.params)
        self.adv = adv
        self.direction = direction
        self._value_memo: dict = {}
        self._choice: dict = {}

    def _better(self, a, b) -> bool:
        return a > b if self.direction == "maximize" else a < b

    def value(self, prefix, state):
        """Optimal exact expected outcome from this joint node on."""
        key = (prefix, state)
        if key in self._value_memo:
            return self._value_memo[key]
        p = self.adv.protocol
        if len(prefix) == p.n_rounds:
            v = p.output(prefix)
        else:
            p.charge()
            best_val, best_choice = None, None
            for bi, br in enumerate(self.adv.plan(prefix, state)):
                if br.control is None:
                    val = sum(pr * self.value(
                        prefix + (m,),
                        self.adv.observe(prefix, m, br.state))
                        for m, pr in p.dist(prefix).items())
                    choice = (bi, None)
                else:
                    val, choice = None, None
                    for m in br.control.support():
                        vm = self.value(prefix + (m,),
                                        self.adv.observe(prefix, m, br.state))
                        if val is None or self._better(vm, val):
                            val, choice = vm, (bi, m)
                if best_val is None or self._better(val, best_val):
                    best_val, best_choice = val, choice
            self._choice[key] = best_choice
            v = best_val
        self._value_memo[key] = v
        return v

    def initial_state(self):
        return self.adv.initial_state()

    def plan(self, prefix, state):
        key = (prefix, state)
        if key not in self._choice:
            self.value(prefix, state)
        bi, msg = self._choice[key]
        br = self.adv.plan(prefix, state)[bi]
        control = FiniteDistribution.point(msg) if msg is not None else None
        return [Branch(1, br.state, control, br.corrupts,
                       note=dict(br.note, derandomized=True))]

    def observe(self, prefix, message, state):
        return self.adv.observe(prefix, message, state)


def derandomize(p: Protocol, adv: Strategy,
                direction: str = "maximize") -> DerandomizedAdversary:
    return DerandomizedAdversary(p, adv, direction)


class BudgetCappedAdversary(Strategy):
    """Aborts to honest play before the corruption count could exceed the
    budget; thereafter every message is honest."""

    def __init__(self, inner: Strategy, budget: int):
        super().__init__(inner.protocol, inner.params)
        self.inner = inner
        self.budget = budget
        self.deterministic = inner.deterministic

    def initial_state(self):
        return (self.inner.initial_state(), 0)

    def plan(self, prefix, state):
        istate, count = state
        if count >= self.budget:
            return [Branch(1, state, None, note={"aborted": True})]
        out = []
        for br in self.inner.plan(prefix, istate):
            k = len(br.corrupts)
            if count + k > self.budget:
                out.append(Branch(br.prob, (istate, count), None,
                                  note={"aborted": True}))
            else:
                out.append(Branch(br.prob, (br.state, count + k), br.control,
                                  br.corrupts, note=br.note))
        return out

    def observe(self, prefix, message, state):
        istate, count = state
        return (self.inner.observe(prefix, message, istate), count)


@dataclass
class FullAttackResult:
    adversary: Strategy
    direction: int
    stop_reason: str
    iterations: int
    warnings: list
    expectations: list

    def as_dict(self) -> dict:
        return {"direction": self.direction, "stop_reason": self.stop_reason,
                "iterations": self.iterations, "warnings": self.warnings,
                "expectations": [float(e) for e in self.expectations]}


def full_attack(p: Protocol, params: AttackParameters,
                budget: int | None = None, mode: str = "auto",
                probe_trials: int = 4000,
                probe_seed: int = 2024) -> FullAttackResult:
    """End-to-end attack: iterated one-shot toward zero, else normalization
    plus the gentle attacker toward one; the result is budget-capped.

    ``mode='exact'`` insists on exact iteration (raising on budget overrun);
    ``mode='monte-carlo'`` skips the one-shot phase, estimating the honest
    expectation and robustness by sampling, because iterated attacked
    protocols of large instances are not enumerable.  ``auto`` tries exact
    first and falls back.
    """
    if budget is None:
        budget = math.ceil(10 * params.lambda_ ** 4 * math.sqrt(params.n))
    warnings: list[str] = []

    if mode in ("auto", "exact"):
        try:
            it = iterate_one_shot(p, params)
            if it.stop_reason == "biased-to-zero":
                adv = chain_adversaries(p, params, it.chain)
                return FullAttackResult(
                    BudgetCappedAdversary(adv, budget), 0, it.stop_reason,
                    len(it.chain), warnings, it.expectations)
            if it.stop_reason == "budget":
                warnings.append("one-shot iteration budget exhausted before "
                                "robustness; attacking the last iterate")
            normalized, _mapping = normalize(it.final, params)
            attacker = NormalAttacker(normalized, params)
            adv = (compose(attacker, chain_adversaries(p, params, it.chain))
                   if it.chain else attacker)
            return FullAttackResult(
                BudgetCappedAdversary(adv, budget), 1, it.stop_reason,
                len(it.chain), warnings, it.expectations)
        except BudgetExceededError:
            if mode == "exact":
                raise
            warnings.append("exact one-shot phase exceeded the node budget; "
                            "falling back to sampled estimates")

    # Monte Carlo path: sampled estimates, no one-shot chain.
    from .analyze import estimate_expectation, estimate_robustness
    e = estimate_expectation(p, probe_trials, probe_seed)
    if e < params.epsilon:
        warnings.append("estimated honest expectation already below epsilon")
        return FullAttackResult(
            BudgetCappedAdversary(IdentityAdversary(p, params), budget), 0,
            "biased-to-zero", 0, warnings, [e])
    qual = estimate_robustness(p, params, probe_trials, probe_seed)
    if qual > params.delta:
        warnings.append(
            f"estimated qualifying probability {qual:.4f} exceeds delta "
            f"{params.delta:.4f}; non-robust rounds will pass through honestly")
    normalized, _mapping = normalize(p, params)
    attacker = NormalAttacker(normalized, params)
    return FullAttackResult(
        BudgetCappedAdversary(attacker, budget), 1, "robust", 0, warnings, [e])


# ---------------------------------------------------------------------------
# Single-round execution and traces


@dataclass
class RoundRecord:
    round_index: int
    party: object
    classification: JumpClass | None
    variance: object
    lottery: bool
    corrupted: bool
    altered: bool
    message: object
    x_increment: object = None
    y_increment: object = None
    coupling_active: bool = False
    posterior: float | None = None
    clamped: bool = False
    nonrobust_hit: bool = False


@dataclass
class AdversaryState:
    corrupted_parties: frozenset
    corruption_count: int
    budget: int | None
    posteriors: dict
    halted: bool


@dataclass
class ExecutionTrace:
    transcript: tuple
    rounds: list
    outcome: int
    corruption_rounds: list
    final_state: AdversaryState


def sample_round(strategy: Strategy, prefix, state, rng,
                 want_y: bool = False):
    """Execute one attacked round; returns (message, state', RoundRecord).

    ``want_y`` additionally samples the coupled honest increment for tilted
    rounds (the conditional law of the honest coordinate of the monotone
    coupling given the realized message).
    """
    branches = strategy.plan(prefix, state)
    if len(branches) == 1:
        br = branches[0]
    else:
        u = rng.random()
        acc = 0.0
        br = branches[-1]
        for b in branches:
            acc += float(b.prob)
            if u < acc:
                br = b
                break
    honest = strategy.protocol.dist(prefix)
    control = br.control if br.control is not None else honest
    message = control.sample(rng)
    note = br.note
    flat = dict(note.get("outer", {}), **{k: v for k, v in note.items()
                                          if k not in ("outer", "inner")})
    record = RoundRecord(
        round_index=len(prefix), party=flat.get("party"),
        classification=flat.get("class"), variance=flat.get("variance"),
        lottery=bool(flat.get("lottery")), corrupted=bool(br.corrupts),
        altered=br.control is not None, message=message,
        posterior=flat.get("posterior"),
        clamped=bool(flat.get("clamped")),
        nonrobust_hit=bool(flat.get("nonrobust_hit")))
    if want_y:
        args = flat.get("biased_args")
        if br.control is not None and args is not None:
            dist0, jumps, alpha = args
            cond = coupling_conditional(dist0, jumps, alpha, message)
            record.y_increment = jumps[cond.sample(rng)]
            record.coupling_active = True
    new_state = strategy.observe(prefix, message, br.state)
    return message, new_state, record


def normal_attacker_step(p: Protocol, params: AttackParameters, state,
                         prefix, rng):
    """One round of the gentle attacker, spec-shaped: ``state`` is the
    attacker's running state (``None`` to start)."""
    attacker = NormalAttacker(p, params)
    if state is None:
        state = attacker.initial_state()
    return sample_round(attacker, prefix, state, rng, want_y=True)


def _count_corruptions(rounds: list[RoundRecord]) -> list[int]:
    return [r.round_index for r in rounds if r.corrupted and r.lottery]


def simulate_execution(p: Protocol, strategy: Strategy, rng,
                       want_trace: bool = False,
                       budget: int | None = None):
    """Run one attacked execution of ``p``.

    Returns a summary tuple ``(outcome, corruptions, clamped, nonrobust_hit)``
    or, with ``want_trace``, a full :class:`ExecutionTrace` with per-round
    records, realized increments and coupled honest increments.
    """
    state = strategy.initial_state()
    prefix = ()
    rounds: list[RoundRecord] = []
    corrupted: set = set()
    clamped = False
    nonrobust_hit = False
    corruption_count = 0
    for _ in range(p.n_rounds):
        branches = strategy.plan(prefix, state)
        if len(branches) == 1:
            br = branches[0]
        else:
            u = rng.random()
            acc = 0.0
            br = branches[-1]
            for b in branches:
                acc += float(b.prob)
                if u < acc:
                    br = b
                    break
        corruption_count += len(br.corrupts)
        corrupted.update(br.corrupts)
        note = br.note
        flat = dict(note.get("outer", {}), **{k: v for k, v in note.items()
                                              if k not in ("outer", "inner")})
        if flat.get("clamped") or note.get("inner", {}).get("clamped"):
            clamped = True
        if flat.get("nonrobust_hit"):
            nonrobust_hit = True
        control = br.control if br.control is not None else p.dist(prefix)
        message = control.sample(rng)
        if want_trace:
            record = RoundRecord(
                round_index=len(prefix), party=flat.get("party", p.next_party(prefix)),
                classification=flat.get("class"), variance=flat.get("variance"),
                lottery=bool(flat.get("lottery")), corrupted=bool(br.corrupts),
                altered=br.control is not None, message=message,
                posterior=flat.get("posterior"), clamped=bool(flat.get("clamped")),
                nonrobust_hit=bool(flat.get("nonrobust_hit")))
            base = expected_outcome(p, prefix)
            record.x_increment = expected_outcome(p, prefix + (message,)) - base
            args = flat.get("biased_args")
            if br.control is not None and args is not None:
                dist0, jumps, alpha = args
                cond = coupling_conditional(dist0, jumps, alpha, message)
                record.y_increment = jumps[cond.sample(rng)]
                record.coupling_active = True
            else:
                record.y_increment = record.x_increment
            rounds.append(record)
        state = strategy.observe(prefix, message, br.state)
        prefix = prefix + (message,)
    outcome = p.output(prefix)
    if not want_trace:
        return outcome, corruption_count, clamped, nonrobust_hit
    final = AdversaryState(
        corrupted_parties=frozenset(corrupted),
        corruption_count=corruption_count, budget=budget,
        posteriors={}, halted=any(r.nonrobust_hit for r in rounds))
    return ExecutionTrace(
        transcript=prefix, rounds=rounds, outcome=outcome,
        corruption_rounds=_count_corruptions(rounds), final_state=final)
