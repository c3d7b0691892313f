"""Command-line front end: run experiments, normalize protocols, verify.

Reports are JSON with a deterministic ``body`` (bit-identical across reruns
of the same config and seed, regardless of worker count) and a separate
``meta`` block for timestamps and runtimes, so report bodies diff cleanly.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import random
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import analyze
from .adversary import (BudgetCappedAdversary, IdentityAdversary,
                        NormalAttacker, OneShotAttacker, chain_adversaries,
                        full_attack, iterate_one_shot)
from .config import (ExperimentConfig, canonical_json, load_config,
                     protocol_from_spec, resolve_params)
from .dist import (biased_mean_shift, coupling_joint, kl_divergence,
                   mixture_identity_check, pinsker_check,
                   random_rational_instance, FiniteDistribution)
from .errors import BudgetExceededError, ConfigError, FlipsimError
from .normalize import normalize, validate_normal
from .protocol import expected_outcome
from .zoo import majority_single_turn, two_round_or

CSV_COLUMNS = ("trial_index", "seed", "outcome", "corruptions", "clamped",
               "nonrobust_hit")


def _build_adversary(p, params, cfg: ExperimentConfig):
    kind = cfg.adversary.kind
    detail = {"kind": kind}
    if kind == "none":
        adv = IdentityAdversary(p, params)
    elif kind == "one-shot":
        adv = OneShotAttacker(p, params)
    elif kind == "iterated":
        it = iterate_one_shot(p, params)
        adv = chain_adversaries(p, params, it.chain)
        detail.update(stop_reason=it.stop_reason, iterations=len(it.chain),
                      direction=0)
    elif kind == "normal":
        normalized, _ = normalize(p, params)
        adv = NormalAttacker(normalized, params,
                             strict_halt=cfg.adversary.strict_halt)
        detail.update(direction=1)
    else:  # composed: the full end-to-end attack
        result = full_attack(
            p, params, budget=cfg.adversary.budget,
            mode="exact" if cfg.mode == "exact" else "monte-carlo")
        detail.update(result.as_dict())
        return result.adversary, detail
    if cfg.adversary.budget is not None:
        adv = BudgetCappedAdversary(adv, cfg.adversary.budget)
    return adv, detail


def _exact_body(p, adv, params, cfg, detail):
    att = analyze.exact_attacked_distribution(p, adv, params)
    var = analyze.variance_accounting(p, adv, params)
    kl = analyze.kl_attacked_vs_honest(p, adv, params)
    honest = expected_outcome(p, ())
    body = {
        "schema_version": analyze.SCHEMA_VERSION,
        "mode": "exact",
        "expected_outcome_honest": float(honest),
        "prob_one_attacked": float(att.prob_one),
        "expected_corruptions": float(att.expected_corruptions),
        "variance_accounting": var.as_dict(),
        "kl_attacked_vs_honest": kl.as_dict(),
        "attack": detail,
        "params": params.as_dict(),
        "config": cfg.as_dict(),
    }
    summary = (f"E[honest] = {float(honest):.6f}  "
               f"E[attacked] = {float(att.prob_one):.6f}  "
               f"E[corruptions] = {float(att.expected_corruptions):.4f}  "
               f"direction = {detail.get('direction', '-')}")
    return body, summary, None


def _mc_body(p, adv, params, cfg, detail):
    report = analyze.monte_carlo(
        p, adv, params, trials=cfg.trials, base_seed=cfg.base_seed,
        workers=cfg.workers, collect_rows=cfg.trials_csv is not None)
    honest = analyze.estimate_expectation(
        p, trials=min(cfg.trials, 20000), seed=cfg.base_seed)
    body = {
        "schema_version": analyze.SCHEMA_VERSION,
        "mode": "monte-carlo",
        "expected_outcome_honest": honest,
        "report": report.body(),
        "attack": detail,
        "config": cfg.as_dict(),
    }
    summary = (f"E[honest] ~ {honest:.6f}  "
               f"freq[attacked] = {report.outcome_frequency:.6f}  "
               f"mean corruptions = {report.mean_corruptions:.4f}  "
               f"direction = {detail.get('direction', '-')}")
    return body, summary, report.rows


def _write_report(path: str | None, body: dict, meta: dict) -> None:
    if path is None:
        return
    payload = {"body": body, "meta": meta}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: str | None, rows) -> None:
    if path is None or rows is None:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([row[0], row[1], row[2], row[3],
                        int(row[4]), int(row[5])])


def cmd_run(cfg: ExperimentConfig) -> int:
    started = time.monotonic()
    p = protocol_from_spec(cfg.protocol)
    if cfg.node_budget != p.node_budget:
        p = dataclasses.replace(p, node_budget=cfg.node_budget)
    params = resolve_params(p, cfg.adversary.overrides)
    try:
        adv, detail = _build_adversary(p, params, cfg)
        if cfg.mode == "exact":
            body, summary, rows = _exact_body(p, adv, params, cfg, detail)
        else:
            body, summary, rows = _mc_body(p, adv, params, cfg, detail)
    except BudgetExceededError as e:
        print(f"error: {e}\nhint: switch \"mode\" to \"monte-carlo\" for "
              f"protocols too large to enumerate", file=sys.stderr)
        return 3
    meta = {"runtime_seconds": time.monotonic() - started,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "workers": cfg.workers}
    _write_report(cfg.report_path, body, meta)
    _write_csv(cfg.trials_csv, rows)
    print(summary)
    return 0


def cmd_normalize(cfg: ExperimentConfig) -> int:
    started = time.monotonic()
    p = protocol_from_spec(cfg.protocol)
    params = resolve_params(p, cfg.adversary.overrides)
    try:
        normalized, mapping = normalize(p, params)
        report = validate_normal(normalized, params)
    except BudgetExceededError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    by_original: dict = {}
    for pseudo in sorted(mapping.used_pseudo_parties(), key=repr):
        orig = mapping.to_original(pseudo)
        by_original.setdefault(repr(orig), []).append(repr(pseudo))
    body = {
        "schema_version": analyze.SCHEMA_VERSION,
        "protocol": p.name,
        "party_mapping": by_original,
        "normality": report.as_dict(),
        "params": params.as_dict(),
    }
    meta = {"runtime_seconds": time.monotonic() - started,
            "created_utc": datetime.now(timezone.utc).isoformat()}
    _write_report(cfg.report_path, body, meta)
    verdict = "pass" if report.passed else "FAIL"
    print(f"normalized {p.name}: {len(mapping.used_pseudo_parties())} "
          f"pseudo-parties, conditions {verdict}")
    return 0


def _verify_batteries(seed: int):
    rng = random.Random(seed)
    yield "biased-identities", _battery_biased(rng)
    yield "biased-kl-bound", _battery_kl_bound(rng)
    yield "pinsker", _battery_pinsker(rng)
    yield "coupling", _battery_coupling(rng)
    yield "kl-chain-rule", _battery_chain_rule()
    yield "martingale-diagnostics", _battery_martingale()
    if os.environ.get("FLIPSIM_VERIFY_INJECT_FAULT"):
        yield "injected-fault", False


def _battery_biased(rng) -> bool:
    for _ in range(100):
        x, util, alpha = random_rational_instance(rng)
        var = x.variance(lambda v: util[v])
        if biased_mean_shift(x, util, alpha) != alpha * var:
            return False
        pweight = rng.choice((0, 1, rng.random()))
        if not mixture_identity_check(x, util, alpha, pweight):
            return False
    return True


def _battery_kl_bound(rng) -> bool:
    from .dist import biased
    for _ in range(100):
        x, util, alpha = random_rational_instance(rng, for_kl_bound=True)
        var = x.variance(lambda v: util[v])
        kl = kl_divergence(biased(x, util, alpha), x)
        if kl > float(2 * alpha ** 2 * var):
            return False
    return True


def _battery_pinsker(rng) -> bool:
    for _ in range(100):
        size = rng.randint(2, 6)
        def draw():
            w = [rng.random() + 1e-3 for _ in range(size)]
            s = sum(w)
            return FiniteDistribution(tuple(range(size)),
                                      tuple(x / s for x in w))
        if not pinsker_check(draw(), draw()):
            return False
    return True


def _battery_coupling(rng) -> bool:
    from .dist import biased
    for _ in range(20):
        x, util, alpha = random_rational_instance(rng)
        joint = coupling_joint(x, util, alpha)
        if any(util[b] < util[a] for (a, b) in joint):
            return False
        tilted = biased(x, util, alpha)
        for v, pr in x.items():
            if sum(m for (a, _), m in joint.items() if a == v) != pr:
                return False
        for v, pr in tilted.items():
            if sum(m for (_, b), m in joint.items() if b == v) != pr:
                return False
    return True


def _battery_chain_rule() -> bool:
    from .config import resolve_params as rp
    p = two_round_or()
    params = rp(p, {"n": 27, "lambda": 2, "epsilon": 0.3, "delta": 0.1})
    normalized, _ = normalize(p, params)
    kl = analyze.kl_attacked_vs_honest(
        p, NormalAttacker(normalized, params), params)
    return kl.agreement <= 1e-9


def _battery_martingale() -> bool:
    for n in (3, 5):
        rep = analyze.martingale_diagnostics(majority_single_turn(n))
        if rep.tower_residual > 1e-9 or rep.orthogonality_residual > 1e-9:
            return False
        if not all(d.passed for d in rep.doob):
            return False
    return True


def cmd_verify(seed: int) -> int:
    failures = 0
    for name, ok in _verify_batteries(seed):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures += 1
    return 1 if failures else 0


def _apply_flag_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "mode", None) is not None:
        updates["mode"] = args.mode
    if getattr(args, "out", None) is not None:
        updates["report_path"] = args.out
    return dataclasses.replace(cfg, **updates) if updates else cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flipsim",
        description="Simulate coin-flipping protocols and adaptive attacks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--mode", choices=("exact", "monte-carlo"), default=None)
    run.add_argument("--out", default=None)

    norm = sub.add_parser("normalize", help="emit pseudo-party mapping and "
                                            "normality verdicts")
    norm.add_argument("--config", required=True)
    norm.add_argument("--out", default=None)

    ver = sub.add_parser("verify", help="run the randomized property suites")
    ver.add_argument("--seed", type=int, default=2718)

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.seed)
        cfg = _apply_flag_overrides(load_config(args.config), args)
        # re-validate after flag overrides (e.g. trials dropped via file)
        cfg = ExperimentConfig.from_dict(cfg.as_dict())
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_normalize(cfg)
    except ConfigError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except FlipsimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
