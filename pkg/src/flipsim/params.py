"""Attack parameters and the thresholds derived from them.

All logarithms are base 2.  The default formulas give unusable magnitudes at
desk scale (``lambda`` grows without bound), so every experiment may override
``epsilon``, ``lambda_``, ``delta`` and the normality parameter ``n``; the
derived thresholds always equal their formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def clamp_prob(p: float) -> tuple[float, bool]:
    """Clamp a corruption probability to [0, 1]; flag when clamping bites."""
    if p > 1.0:
        return 1.0, True
    if p < 0.0:
        return 0.0, True
    return p, False


@dataclass(frozen=True)
class AttackParameters:
    """Free constants (n, epsilon, lambda, delta) plus derived thresholds.

    ``n`` parameterizes robustness and normality; it defaults to the attacked
    protocol's party count but may be set independently.
    """

    n: int
    epsilon: float
    lambda_: float
    delta: float
    neg_jump_threshold: float = None
    large_var_threshold: float = None
    posterior_cap: float = None
    small_corrupt_prob: float = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0,1), got {self.epsilon}")
        if self.lambda_ <= 0:
            raise ValueError(f"lambda must be positive, got {self.lambda_}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0,1), got {self.delta}")
        root = math.sqrt(self.n)
        object.__setattr__(self, "neg_jump_threshold", 1.0 / (self.lambda_ * root))
        object.__setattr__(self, "large_var_threshold", 1.0 / (self.lambda_ * self.n))
        object.__setattr__(self, "posterior_cap", 16.0 * self.lambda_ ** 2 / root)
        object.__setattr__(self, "small_corrupt_prob", self.lambda_ ** 2 / root)

    @classmethod
    def defaults(cls, n: int, epsilon: float | None = None,
                 lambda_: float | None = None,
                 delta: float | None = None) -> "AttackParameters":
        """Build parameters from the default formulas, with optional overrides.

        ``epsilon = (log log n)^(-1/50)``, ``lambda = 100 / epsilon^5`` and
        ``delta = 1 / log^2 n``; the formulas need ``n >= 5`` to land in their
        valid ranges.
        """
        if epsilon is None:
            if n < 5:
                raise ValueError("default epsilon formula requires n >= 5")
            epsilon = math.log2(math.log2(n)) ** (-1.0 / 50.0)
        if lambda_ is None:
            lambda_ = 100.0 / epsilon ** 5
        if delta is None:
            if n < 3:
                raise ValueError("default delta formula requires n >= 3")
            delta = 1.0 / math.log2(n) ** 2
        return cls(n=n, epsilon=epsilon, lambda_=lambda_, delta=delta)

    def large_corrupt_prob(self, variance) -> tuple[float, bool]:
        """Corruption probability for a large-variance round, clamped."""
        return clamp_prob(self.lambda_ ** 2 * math.sqrt(float(variance)))

    def clamped_small_prob(self) -> tuple[float, bool]:
        return clamp_prob(self.small_corrupt_prob)

    def default_iteration_limit(self, hard_cap: int = 10_000) -> int:
        """Iteration budget for the repeated one-shot attack.

        The guaranteed expectation drop per still-qualifying iteration is
        ``delta / (lambda*sqrt(n))``, so this many iterations suffice to
        exhaust an expectation of one; capped to keep desk-scale runs sane.
        """
        t = math.ceil(math.sqrt(self.n) * self.lambda_ / self.delta)
        return min(t, hard_cap)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "lambda": self.lambda_,
            "delta": self.delta,
            "neg_jump_threshold": self.neg_jump_threshold,
            "large_var_threshold": self.large_var_threshold,
            "posterior_cap": self.posterior_cap,
            "small_corrupt_prob": self.small_corrupt_prob,
        }
