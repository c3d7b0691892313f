"""Experiment and protocol description files.

Both are JSON.  A protocol description either names a zoo generator with its
arguments or spells out a small protocol explicitly (per-prefix message
rules plus an output table); explicit descriptions are validated for
totality over the reachable tree.  Experiment configs bind a protocol, an
adversary block, a mode, and sampling parameters; parsing is strict and
errors carry the offending field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .dist import FiniteDistribution
from .errors import ConfigError
from .protocol import DEFAULT_NODE_BUDGET, Protocol, walk_reachable
from .params import AttackParameters
from .zoo import GENERATORS


def _parse_number(x, where: str):
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"bad rational literal {x!r}: {e}", where)
    if isinstance(x, (int, float)):
        return x
    raise ConfigError(f"expected number or 'p/q' string, got {type(x).__name__}",
                      where)


def _as_value(x):
    # JSON message values arrive as scalars; lists are not hashable, so they
    # are rejected early with a clear error
    if isinstance(x, (int, str, bool, float)) or x is None:
        return x
    raise ConfigError(f"message values must be scalars, got {type(x).__name__}")


def explicit_protocol(spec: dict, where: str = "protocol.explicit") -> Protocol:
    for fld in ("n_parties", "n_rounds", "rounds", "outputs"):
        if fld not in spec:
            raise ConfigError("missing required field", f"{where}.{fld}")
    n_parties = spec["n_parties"]
    n_rounds = spec["n_rounds"]
    rules: dict = {}
    for i, rule in enumerate(spec["rounds"]):
        loc = f"{where}.rounds[{i}]"
        for fld in ("prefix", "party", "messages", "probs"):
            if fld not in rule:
                raise ConfigError("missing required field", f"{loc}.{fld}")
        prefix = tuple(_as_value(v) for v in rule["prefix"])
        msgs = tuple(_as_value(v) for v in rule["messages"])
        probs = tuple(_parse_number(x, f"{loc}.probs") for x in rule["probs"])
        try:
            d = FiniteDistribution(msgs, probs)
        except ValueError as e:
            raise ConfigError(str(e), f"{loc}.probs")
        rules[prefix] = (rule["party"], d)
    outputs = {}
    for i, row in enumerate(spec["outputs"]):
        loc = f"{where}.outputs[{i}]"
        if "transcript" not in row or "bit" not in row:
            raise ConfigError("needs 'transcript' and 'bit'", loc)
        if row["bit"] not in (0, 1):
            raise ConfigError(f"bit must be 0 or 1, got {row['bit']!r}",
                              f"{loc}.bit")
        outputs[tuple(_as_value(v) for v in row["transcript"])] = row["bit"]

    def next_party(t):
        if t not in rules:
            raise ConfigError("no rule for reachable prefix", f"{where}.rounds")
        return rules[t][0]

    def message_dist(t):
        if t not in rules:
            raise ConfigError("no rule for reachable prefix", f"{where}.rounds")
        return rules[t][1]

    def output(t):
        if t not in outputs:
            raise ConfigError("no output for reachable transcript",
                              f"{where}.outputs")
        return outputs[t]

    p = Protocol(n_parties=n_parties, n_rounds=n_rounds,
                 next_party=next_party, message_dist=message_dist,
                 output=output, name=spec.get("name", "explicit"))
    for prefix, _mass in walk_reachable(p):
        if len(prefix) == p.n_rounds:
            output(prefix)
        else:
            message_dist(prefix)
    return p


def protocol_from_spec(spec: dict, where: str = "protocol") -> Protocol:
    if not isinstance(spec, dict):
        raise ConfigError("protocol block must be an object", where)
    if "file" in spec:
        path = Path(spec["file"])
        try:
            inner = json.loads(path.read_text())
        except OSError as e:
            raise ConfigError(f"cannot read protocol file: {e}", f"{where}.file")
        return protocol_from_spec(inner, where=f"{where}.file")
    if "explicit" in spec:
        return explicit_protocol(spec["explicit"], f"{where}.explicit")
    if "generator" in spec:
        name = spec["generator"]
        if name not in GENERATORS:
            raise ConfigError(
                f"unknown generator {name!r}; known: {sorted(GENERATORS)}",
                f"{where}.generator")
        args = spec.get("args", {})
        try:
            return GENERATORS[name](**args)
        except TypeError as e:
            raise ConfigError(str(e), f"{where}.args")
        except ValueError as e:
            raise ConfigError(str(e), f"{where}.args")
    raise ConfigError("needs 'generator', 'explicit' or 'file'", where)


ADVERSARY_KINDS = ("none", "normal", "one-shot", "iterated", "composed")


@dataclass
class AdversaryConfig:
    kind: str = "none"
    overrides: dict = field(default_factory=dict)
    budget: int | None = None
    strict_halt: bool = False

    def as_dict(self) -> dict:
        return {"kind": self.kind, "overrides": dict(sorted(self.overrides.items())),
                "budget": self.budget, "strict_halt": self.strict_halt}


@dataclass
class ExperimentConfig:
    protocol: dict
    adversary: AdversaryConfig
    mode: str = "exact"
    trials: int | None = None
    base_seed: int = 0
    workers: int = 1
    node_budget: int = DEFAULT_NODE_BUDGET
    report_path: str | None = None
    trials_csv: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if "protocol" not in raw:
            raise ConfigError("missing required field", "protocol")
        adv_raw = raw.get("adversary", {})
        if not isinstance(adv_raw, dict):
            raise ConfigError("adversary block must be an object", "adversary")
        kind = adv_raw.get("kind", "none")
        if kind not in ADVERSARY_KINDS:
            raise ConfigError(
                f"unknown kind {kind!r}; known: {ADVERSARY_KINDS}",
                "adversary.kind")
        overrides = adv_raw.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ConfigError("overrides must be an object", "adversary.overrides")
        for key in overrides:
            if key not in ("n", "epsilon", "lambda", "delta"):
                raise ConfigError(f"unknown override {key!r}",
                                  f"adversary.overrides.{key}")
        adversary = AdversaryConfig(
            kind=kind, overrides=overrides,
            budget=adv_raw.get("budget"),
            strict_halt=bool(adv_raw.get("strict_halt", False)))
        mode = raw.get("mode", "exact")
        if mode not in ("exact", "monte-carlo"):
            raise ConfigError(f"mode must be exact|monte-carlo, got {mode!r}",
                              "mode")
        trials = raw.get("trials")
        if mode == "monte-carlo":
            if trials is None:
                raise ConfigError("monte-carlo mode requires a trial count",
                                  "trials")
            if not isinstance(trials, int) or trials < 1:
                raise ConfigError(f"must be a positive integer, got {trials!r}",
                                  "trials")
        workers = raw.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError(f"must be a positive integer, got {workers!r}",
                              "workers")
        return cls(
            protocol=raw["protocol"], adversary=adversary, mode=mode,
            trials=trials, base_seed=int(raw.get("base_seed", 0)),
            workers=workers,
            node_budget=int(raw.get("node_budget", DEFAULT_NODE_BUDGET)),
            report_path=raw.get("out", {}).get("report"),
            trials_csv=raw.get("out", {}).get("trials_csv"))

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "adversary": self.adversary.as_dict(),
            "mode": self.mode,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "workers": self.workers,
            "node_budget": self.node_budget,
            "out": {"report": self.report_path, "trials_csv": self.trials_csv},
        }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    return ExperimentConfig.from_dict(raw)


def resolve_params(p: Protocol, overrides: dict) -> AttackParameters:
    """Attack parameters for a protocol: overrides win, formulas fill gaps,
    and the normality parameter n defaults to the protocol's party count."""
    n = overrides.get("n", p.n_parties)
    try:
        return AttackParameters.defaults(
            n=n,
            epsilon=overrides.get("epsilon"),
            lambda_=overrides.get("lambda"),
            delta=overrides.get("delta"))
    except ValueError as e:
        raise ConfigError(str(e), "adversary.overrides")
