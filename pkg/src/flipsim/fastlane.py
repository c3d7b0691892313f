"""Vectorized simulation lane for single-turn majority protocols.

The generic per-trial simulator is far too slow for thousand-party runs, so
majority protocols carry a lane descriptor that simulates whole trial blocks
with numpy.  Conditional expectations depend on the prefix only through
(rounds elapsed, ones seen), so one triangular table drives everything:
expected outcomes, jumps, round classification, lottery probabilities and
tilted message laws.  Block RNG streams are Philox generators keyed by
(base seed, block index), making results independent of worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import AttackParameters


@dataclass
class BlockResult:
    """Aggregates of one simulated trial block (reduced in block order)."""

    trials: int = 0
    outcome_sum: int = 0
    corruption_sum: int = 0
    corruption_max: int = 0
    histogram: dict = field(default_factory=dict)
    clamped_trials: int = 0
    nonrobust_trials: int = 0
    v_small_sum: float = 0.0
    v_large_sum: float = 0.0
    v_nonrobust_sum: float = 0.0
    rows: list | None = None

    def merge(self, other: "BlockResult") -> None:
        self.trials += other.trials
        self.outcome_sum += other.outcome_sum
        self.corruption_sum += other.corruption_sum
        self.corruption_max = max(self.corruption_max, other.corruption_max)
        for k, v in other.histogram.items():
            self.histogram[k] = self.histogram.get(k, 0) + v
        self.clamped_trials += other.clamped_trials
        self.nonrobust_trials += other.nonrobust_trials
        self.v_small_sum += other.v_small_sum
        self.v_large_sum += other.v_large_sum
        self.v_nonrobust_sum += other.v_nonrobust_sum
        if other.rows is not None:
            if self.rows is None:
                self.rows = []
            self.rows.extend(other.rows)


def block_generator(base_seed: int, block_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=(base_seed & (2 ** 64 - 1)),
                                 spawn_key=(block_index,))
    return np.random.Generator(np.random.Philox(seq))


class MajorityLane:
    """Tables and block simulators for an n-round single-turn majority."""

    def __init__(self, n: int):
        self.n = n
        self._expected = None
        self._jump = None

    def tables(self):
        """``expected[i, o]`` and symmetric up-jump ``jump[i, o]``."""
        if self._expected is None:
            n = self.n
            e = np.zeros((n + 1, n + 1))
            e[n, : n + 1] = (np.arange(n + 1) > n / 2).astype(float)
            for i in range(n - 1, -1, -1):
                e[i, : i + 1] = 0.5 * (e[i + 1, : i + 1] + e[i + 1, 1: i + 2])
            j = np.zeros((n, n + 1))
            for i in range(n):
                j[i, : i + 1] = e[i + 1, 1: i + 2] - e[i, : i + 1]
            self._expected, self._jump = e, j
        return self._expected, self._jump

    def expected(self, prefix) -> float:
        e, _ = self.tables()
        return float(e[len(prefix), int(sum(prefix))])

    def robustness_estimate(self, params: AttackParameters, trials: int,
                            seed: int) -> float:
        """Sampled probability that an honest run meets a qualifying round."""
        _, jump = self.tables()
        rng = block_generator(seed, 0)
        ones = np.zeros(trials, dtype=np.int64)
        hit = np.zeros(trials, dtype=bool)
        thr = params.neg_jump_threshold
        for i in range(self.n):
            hit |= jump[i, ones] >= thr
            ones += rng.random(trials) < 0.5
        return float(hit.mean())

    def simulate_block(self, kind: str, params: AttackParameters | None,
                       base_seed: int, block_index: int, start: int,
                       size: int, budget: int | None, strict_halt: bool,
                       collect_rows: bool) -> BlockResult:
        """Simulate ``size`` trials; ``kind`` is ``identity`` or ``normal``."""
        rng = block_generator(base_seed, block_index)
        n = self.n
        res = BlockResult(trials=size)
        if kind == "identity":
            ones = rng.binomial(n, 0.5, size=size)
            outcomes = (ones > n / 2).astype(np.int64)
            res.outcome_sum = int(outcomes.sum())
            res.histogram[0] = size
            if collect_rows:
                from .seeding import trial_seed
                res.rows = [(start + t, trial_seed(base_seed, start + t),
                             int(outcomes[t]), 0, False, False)
                            for t in range(size)]
            return res

        _, jump = self.tables()
        thr = params.neg_jump_threshold
        var_thr = params.large_var_threshold
        p_small, small_clamped = params.clamped_small_prob()
        sqrt_n = math.sqrt(params.n)
        ones = np.zeros(size, dtype=np.int64)
        corr = np.zeros(size, dtype=np.int64)
        clamped = np.zeros(size, dtype=bool)
        nr_hit = np.zeros(size, dtype=bool)
        halted = np.zeros(size, dtype=bool)
        v_small = np.zeros(size)
        v_large = np.zeros(size)
        v_nr = np.zeros(size)
        cap = budget if budget is not None else n + 1
        for i in range(n):
            j = jump[i, ones]
            v = j * j
            nonrob = j >= thr
            large = ~nonrob & (v >= var_thr)
            small = ~nonrob & ~large
            v_small += np.where(small, v, 0.0)
            v_large += np.where(large, v, 0.0)
            v_nr += np.where(nonrob, v, 0.0)
            live = ~nonrob & ~halted
            nr_hit |= nonrob
            if strict_halt:
                halted |= nonrob
            p_large_raw = params.lambda_ ** 2 * np.sqrt(v)
            clamped |= live & large & (p_large_raw > 1.0)
            if small_clamped:
                clamped |= live & small
            p_corr = np.where(large, np.minimum(p_large_raw, 1.0), p_small)
            corrupt = live & (rng.random(size) < p_corr) & (corr < cap)
            corr += corrupt
            alpha = np.where(large, 1.0 / np.sqrt(np.maximum(v, 1e-300)), sqrt_n)
            p_one = np.where(corrupt, 0.5 * (1.0 + alpha * j), 0.5)
            ones += rng.random(size) < p_one
        outcomes = (ones > n / 2).astype(np.int64)
        res.outcome_sum = int(outcomes.sum())
        res.corruption_sum = int(corr.sum())
        res.corruption_max = int(corr.max())
        vals, counts = np.unique(corr, return_counts=True)
        res.histogram = {int(k): int(c) for k, c in zip(vals, counts)}
        res.clamped_trials = int(clamped.sum())
        res.nonrobust_trials = int(nr_hit.sum())
        res.v_small_sum = float(v_small.sum())
        res.v_large_sum = float(v_large.sum())
        res.v_nonrobust_sum = float(v_nr.sum())
        if collect_rows:
            from .seeding import trial_seed
            res.rows = [(start + t, trial_seed(base_seed, start + t),
                         int(outcomes[t]), int(corr[t]), bool(clamped[t]),
                         bool(nr_hit[t]))
                        for t in range(size)]
        return res


def lane_plan(p, adv):
    """Return (lane, kind, params, budget, strict) when the protocol and
    adversary pair is lane-simulable, else ``None``.

    Supported: the identity adversary, the gentle attacker on the protocol
    (or its normalized wrap, which is equivalent for single-turn protocols),
    optionally budget-capped.
    """
    from .adversary import (BudgetCappedAdversary, IdentityAdversary,
                            NormalAttacker)
    lane = p.fast_lane
    if not isinstance(lane, MajorityLane):
        return None
    budget = None
    inner = adv
    if isinstance(inner, BudgetCappedAdversary):
        budget = inner.budget
        inner = inner.inner
    if isinstance(inner, IdentityAdversary):
        return lane, "identity", None, None, False
    if isinstance(inner, NormalAttacker) and inner.protocol.fast_lane is lane:
        return lane, "normal", inner.params, budget, inner.strict_halt
    return None
