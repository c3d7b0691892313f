"""Exact-enumeration oracle and Monte Carlo harness.

The oracle enumerates the joint tree of (transcript, corruption lotteries)
and produces every quantity the analysis tracks: attacked outcome law,
expected corruptions, per-class conditional-variance sums, and the KL
divergence between attacked and honest executions (computed both jointly
and via the chain rule, which must agree).  The Monte Carlo side runs
seeded trial blocks, reduced in fixed order so reports are bit-identical
regardless of worker count.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .adversary import Strategy
from .fastlane import BlockResult, lane_plan
from .params import AttackParameters
from .protocol import (JumpClass, Protocol, classify_round, round_view,
                       transcript_distribution, walk_reachable)
from .seeding import trial_seed

BLOCK_SIZE = 8192
SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Exact oracle

@dataclass
class AttackedDistribution:
    prob_one: object
    expected_corruptions: object
    transcript_dist: dict
    prefix_masses: dict
    corruption_histogram: dict


def exact_attacked_distribution(p: Protocol, adv: Strategy,
                                params: AttackParameters | None = None
                                ) -> AttackedDistribution:
    """Forward enumeration of the attacked execution, lottery branches
    included.  Exact in the protocol's arithmetic (lottery probabilities may
    inject floats)."""
    prefix_masses: dict = {}
    transcript_dist: dict = {}
    histogram: dict = {}
    prob_one = 0
    expected_corruptions = 0
    stack = [((), adv.initial_state(), 0, 1)]
    while stack:
        prefix, state, count, mass = stack.pop()
        prefix_masses[prefix] = prefix_masses.get(prefix, 0) + mass
        if len(prefix) == p.n_rounds:
            out = p.output(prefix)
            prob_one += mass * out
            expected_corruptions += mass * count
            transcript_dist[prefix] = transcript_dist.get(prefix, 0) + mass
            histogram[count] = histogram.get(count, 0) + mass
            continue
        p.charge()
        for br in adv.plan(prefix, state):
            if br.prob == 0:
                continue
            dist = br.control if br.control is not None else p.dist(prefix)
            for m, pr in dist.items():
                new_state = adv.observe(prefix, m, br.state)
                stack.append((prefix + (m,), new_state,
                              count + len(br.corrupts), mass * br.prob * pr))
    return AttackedDistribution(prob_one, expected_corruptions,
                                transcript_dist, prefix_masses, histogram)


@dataclass
class VarianceAccounting:
    small: float
    large: float
    nonrobust: float
    bound: float

    @property
    def robust_total(self) -> float:
        return self.small + self.large

    @property
    def within_bound(self) -> bool:
        return self.robust_total < self.bound

    def as_dict(self) -> dict:
        return {"small": self.small, "large": self.large,
                "nonrobust": self.nonrobust, "robust_total": self.robust_total,
                "bound_2_over_lambda": self.bound,
                "within_bound": self.within_bound}


def variance_accounting(p: Protocol, adv: Strategy,
                        params: AttackParameters) -> VarianceAccounting:
    """Expected sum of conditional variances of the coupled honest increments
    over attacked executions, split by round class.

    The coupled increment's conditional law equals the honest jump law, so
    the per-round conditional variance is the honest one; only the weighting
    (the attacked prefix distribution) reflects the attack.  The 2/lambda
    comparison is informational, never a hard assertion.
    """
    att = exact_attacked_distribution(p, adv, params)
    sums = {JumpClass.SMALL: 0.0, JumpClass.LARGE: 0.0,
            JumpClass.NON_ROBUST: 0.0}
    for prefix, mass in att.prefix_masses.items():
        if len(prefix) == p.n_rounds or mass == 0:
            continue
        view = round_view(p, prefix, validate=False)
        cls = classify_round(view, params)
        sums[cls] += float(mass) * float(view.variance)
    return VarianceAccounting(small=sums[JumpClass.SMALL],
                              large=sums[JumpClass.LARGE],
                              nonrobust=sums[JumpClass.NON_ROBUST],
                              bound=2.0 / params.lambda_)


@dataclass
class KLReport:
    joint: float
    chain: float
    bound: float

    @property
    def agreement(self) -> float:
        if math.isinf(self.joint) and math.isinf(self.chain):
            return 0.0
        return abs(self.joint - self.chain)

    @property
    def within_bound(self) -> bool:
        return self.joint <= self.bound

    def as_dict(self) -> dict:
        return {"joint": self.joint, "chain": self.chain,
                "agreement": self.agreement,
                "bound_16cubed_lambda_cubed": self.bound,
                "within_bound": self.within_bound}


def kl_attacked_vs_honest(p: Protocol, adv: Strategy,
                          params: AttackParameters) -> KLReport:
    """KL(attacked transcript law || honest transcript law), in bits,
    computed on the joint and again via the per-round chain rule."""
    att = exact_attacked_distribution(p, adv, params)
    honest = transcript_distribution(p)
    joint = 0.0
    for t, mass in att.transcript_dist.items():
        if mass == 0:
            continue
        h = honest.get(t, 0)
        if h == 0:
            joint = math.inf
            break
        joint += float(mass) * math.log2(float(mass) / float(h))
    chain = 0.0
    for prefix, mass in att.prefix_masses.items():
        if len(prefix) == p.n_rounds or mass == 0:
            continue
        d = p.dist(prefix)
        for m, pr in d.items():
            am = att.prefix_masses.get(prefix + (m,), 0)
            if am == 0:
                continue
            chain += float(am) * math.log2(
                (float(am) / float(mass)) / float(pr))
        # controlled messages outside the honest support cannot occur, but a
        # support violation would make both computations infinite
    return KLReport(joint=joint, chain=chain, bound=16 ** 3 * params.lambda_ ** 3)


@dataclass
class DoobCheck:
    threshold: float
    sup_probability: float
    bound: float
    passed: bool


@dataclass
class MartingaleReport:
    tower_residual: float
    jump_centering_residual: float
    output_variance: float
    summed_conditional_variance: float
    doob: list

    @property
    def orthogonality_residual(self) -> float:
        return abs(self.output_variance - self.summed_conditional_variance)

    def as_dict(self) -> dict:
        return {
            "tower_residual": self.tower_residual,
            "jump_centering_residual": self.jump_centering_residual,
            "output_variance": self.output_variance,
            "summed_conditional_variance": self.summed_conditional_variance,
            "orthogonality_residual": self.orthogonality_residual,
            "doob": [{"threshold": d.threshold,
                      "sup_probability": d.sup_probability,
                      "bound": d.bound, "passed": d.passed} for d in self.doob],
        }


def martingale_diagnostics(p: Protocol,
                           doob_grid: tuple = (0.6, 0.8, 1.0)
                           ) -> MartingaleReport:
    """Honest-execution diagnostics: tower property, centering of jumps,
    orthogonality of increments, and the maximal inequality for the
    conditional-expectation sequence on a grid of thresholds."""
    from .protocol import _expected
    tower = 0.0
    centering = 0.0
    summed = 0.0
    for prefix, mass in walk_reachable(p):
        if len(prefix) == p.n_rounds:
            continue
        view = round_view(p, prefix, validate=False)
        base = _expected(p, prefix)
        mean_child = sum(pr * _expected(p, prefix + (m,))
                         for m, pr in view.dist.items())
        tower = max(tower, abs(float(mean_child - base)))
        mean_jump = sum(pr * view.jumps[m] for m, pr in view.dist.items())
        centering = max(centering, abs(float(mean_jump)))
        summed += float(mass) * float(view.variance)
    e = float(_expected(p, ()))
    output_var = e * (1.0 - e)
    doob = []
    for c in doob_grid:
        sup_prob = _sup_hit_probability(p, c)
        bound = e / c
        doob.append(DoobCheck(threshold=c, sup_probability=sup_prob,
                              bound=bound, passed=sup_prob <= bound + 1e-12))
    return MartingaleReport(tower_residual=tower,
                            jump_centering_residual=centering,
                            output_variance=output_var,
                            summed_conditional_variance=summed,
                            doob=doob)


def _sup_hit_probability(p: Protocol, c: float) -> float:
    """Exact Pr[sup_k E[out | prefix_{<=k}] >= c] under honest play."""
    from .protocol import _expected
    memo: dict = {}

    def hit(prefix):
        k = p.key(prefix)
        if k in memo:
            return memo[k]
        if float(_expected(p, prefix)) >= c:
            result = 1.0
        elif len(prefix) == p.n_rounds:
            result = 0.0
        else:
            result = sum(float(pr) * hit(prefix + (m,))
                         for m, pr in p.dist(prefix).items())
        memo[k] = result
        return result

    return hit(())


# ---------------------------------------------------------------------------
# Monte Carlo harness

def estimate_expectation(p: Protocol, trials: int, seed: int) -> float:
    """Honest expected outcome: closed form when available, else sampled."""
    if p.closed_form is not None:
        return float(p.closed_form(()))
    total = 0
    for i in range(trials):
        rng = random.Random(trial_seed(seed, i))
        prefix = ()
        for _ in range(p.n_rounds):
            prefix += (p.dist(prefix).sample(rng),)
        total += p.output(prefix)
    return total / trials


def estimate_robustness(p: Protocol, params: AttackParameters, trials: int,
                        seed: int) -> float:
    """Sampled probability that an honest run passes a qualifying round."""
    if p.fast_lane is not None and hasattr(p.fast_lane, "robustness_estimate"):
        return p.fast_lane.robustness_estimate(params, trials, seed)
    hits = 0
    for i in range(trials):
        rng = random.Random(trial_seed(seed, i))
        prefix = ()
        for _ in range(p.n_rounds):
            view = round_view(p, prefix, validate=False)
            if classify_round(view, params) is JumpClass.NON_ROBUST:
                hits += 1
                break
            prefix += (view.dist.sample(rng),)
    return hits / trials


@dataclass
class ExperimentReport:
    """Deterministic body of one Monte Carlo experiment.

    Everything in :meth:`body` is reproducible bit-for-bit from
    (protocol, adversary, params, trials, base_seed); wall-clock metadata
    lives outside the body.
    """

    trials: int
    base_seed: int
    outcome_frequency: float
    mean_corruptions: float
    max_corruptions: int
    corruption_histogram: dict
    clamped_trials: int
    nonrobust_trials: int
    variance_means: dict
    engine: str
    protocol_name: str
    adversary_name: str
    params: dict | None
    rows: list | None = field(default=None, repr=False)

    @property
    def outcome_se(self) -> float:
        f = self.outcome_frequency
        return math.sqrt(max(f * (1 - f), 1e-300) / self.trials)

    def body(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "outcome_frequency": self.outcome_frequency,
            "outcome_standard_error": self.outcome_se,
            "mean_corruptions": self.mean_corruptions,
            "max_corruptions": self.max_corruptions,
            "corruption_histogram": {str(k): v for k, v in
                                     sorted(self.corruption_histogram.items())},
            "clamped_trials": self.clamped_trials,
            "nonrobust_trials": self.nonrobust_trials,
            "variance_means": self.variance_means,
            "engine": self.engine,
            "protocol": self.protocol_name,
            "adversary": self.adversary_name,
            "params": self.params,
        }


def _adv_name(adv: Strategy) -> str:
    name = type(adv).__name__
    inner = getattr(adv, "inner", None)
    if inner is not None:
        return f"{name}({_adv_name(inner)})"
    parts = [getattr(adv, "outer", None), getattr(adv, "adv", None)]
    tags = [_adv_name(x) for x in parts if x is not None]
    return f"{name}({', '.join(tags)})" if tags else name


def _generic_block(p: Protocol, adv: Strategy, base_seed: int, start: int,
                   size: int, collect_rows: bool) -> BlockResult:
    res = BlockResult(trials=size)
    hist = res.histogram
    rows = [] if collect_rows else None
    for t in range(start, start + size):
        rng = random.Random(trial_seed(base_seed, t))
        state = adv.initial_state()
        prefix = ()
        corr = 0
        clamped = False
        nr_hit = False
        v_small = v_large = v_nr = 0.0
        for _ in range(p.n_rounds):
            branches = adv.plan(prefix, state)
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
            corr += len(br.corrupts)
            note = br.note
            if "outer" in note:
                flat = dict(note["outer"])
                flat.update({k: v for k, v in note.items()
                             if k not in ("outer", "inner")})
            else:
                flat = note
            cls = flat.get("class")
            if cls is not None:
                v = float(flat.get("variance", 0.0))
                if cls is JumpClass.SMALL:
                    v_small += v
                elif cls is JumpClass.LARGE:
                    v_large += v
                else:
                    v_nr += v
            if flat.get("clamped"):
                clamped = True
            if flat.get("nonrobust_hit"):
                nr_hit = True
            dist = br.control if br.control is not None else p.dist(prefix)
            m = dist.sample(rng)
            state = adv.observe(prefix, m, br.state)
            prefix += (m,)
        outcome = p.output(prefix)
        res.outcome_sum += outcome
        res.corruption_sum += corr
        res.corruption_max = max(res.corruption_max, corr)
        hist[corr] = hist.get(corr, 0) + 1
        if clamped:
            res.clamped_trials += 1
        if nr_hit:
            res.nonrobust_trials += 1
        res.v_small_sum += v_small
        res.v_large_sum += v_large
        res.v_nonrobust_sum += v_nr
        if collect_rows:
            rows.append((t, trial_seed(base_seed, t), outcome, corr,
                         clamped, nr_hit))
    res.rows = rows
    return res


def monte_carlo(p: Protocol, adv: Strategy, params: AttackParameters | None,
                trials: int, base_seed: int, workers: int = 1,
                collect_rows: bool = False,
                engine: str = "auto") -> ExperimentReport:
    """Run seeded attacked executions and aggregate a deterministic report.

    Trials are partitioned into fixed-size blocks with independent derived
    RNG streams and reduced in block order, so the report does not depend on
    ``workers``.  ``engine`` selects the vectorized lane when the pair
    supports it (``auto``), or forces ``generic``/``vector``.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}")
    plan = lane_plan(p, adv) if engine in ("auto", "vector") else None
    if engine == "vector" and plan is None:
        raise ValueError("vector engine requested but unsupported for this "
                         "protocol/adversary pair")
    blocks = [(i, start, min(BLOCK_SIZE, trials - start))
              for i, start in enumerate(range(0, trials, BLOCK_SIZE))]

    if plan is not None:
        lane, kind, lane_params, budget, strict = plan

        def run(block):
            i, start, size = block
            return lane.simulate_block(kind, lane_params, base_seed, i, start,
                                       size, budget, strict, collect_rows)
        engine_used = "vector"
    else:
        def run(block):
            _i, start, size = block
            return _generic_block(p, adv, base_seed, start, size, collect_rows)
        engine_used = "generic"

    if workers == 1 or len(blocks) == 1:
        results = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    total = BlockResult()
    for r in results:
        total.merge(r)
    return ExperimentReport(
        trials=trials, base_seed=base_seed,
        outcome_frequency=total.outcome_sum / trials,
        mean_corruptions=total.corruption_sum / trials,
        max_corruptions=total.corruption_max,
        corruption_histogram=total.histogram,
        clamped_trials=total.clamped_trials,
        nonrobust_trials=total.nonrobust_trials,
        variance_means={
            "small": total.v_small_sum / trials,
            "large": total.v_large_sum / trials,
            "nonrobust": total.v_nonrobust_sum / trials,
        },
        engine=engine_used,
        protocol_name=p.name,
        adversary_name=_adv_name(adv),
        params=params.as_dict() if params is not None else None,
        rows=total.rows,
    )
