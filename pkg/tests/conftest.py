import random
from fractions import Fraction

import pytest

from flipsim import AttackParameters
from flipsim.dist import FiniteDistribution


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def make_params(neg_jump_threshold=None, large_var_threshold=None, **kw):
    """Parameters hitting requested thresholds exactly.

    1/(lambda*sqrt(n)) = T and 1/(lambda*n) = V imply sqrt(n) = T/V and
    lambda = V/T^2; used by tests that state thresholds directly.
    """
    if neg_jump_threshold is not None and large_var_threshold is not None:
        root = neg_jump_threshold / large_var_threshold
        n = max(1, round(root ** 2))
        lam = large_var_threshold / neg_jump_threshold ** 2
    elif neg_jump_threshold is not None:
        n = kw.pop("n", 100)
        lam = 1.0 / (neg_jump_threshold * n ** 0.5)
    else:
        n = kw.pop("n", 100)
        lam = kw.pop("lambda_", 1.0)
    return AttackParameters(n=n, lambda_=lam,
                            epsilon=kw.pop("epsilon", 0.3),
                            delta=kw.pop("delta", 0.05))


def uniform_pm1(exact=True):
    half = Fraction(1, 2) if exact else 0.5
    return FiniteDistribution((-1, 1), (half, half))


def brute_force_expectation(p, prefix=()):
    """Oracle: expected outcome by plain recursion over the message tree,
    independent of the package's memoized backward induction."""
    if len(prefix) == p.n_rounds:
        return p.output(prefix)
    return sum(pr * brute_force_expectation(p, prefix + (m,))
               for m, pr in p.message_dist(prefix).items())


def enumerate_transcripts(p, prefix=(), mass=1):
    if len(prefix) == p.n_rounds:
        yield prefix, mass
        return
    for m, pr in p.message_dist(prefix).items():
        yield from enumerate_transcripts(p, prefix + (m,), mass * pr)
