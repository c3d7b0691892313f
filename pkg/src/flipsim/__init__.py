"""flipsim: full-information coin-flipping protocols under adaptive attack.

The package simulates stateless broadcast protocols as finite probabilistic
trees, runs the gentle adaptive corruption attack and the one-shot
negative-jump attack against them, and checks every identity the analysis
relies on with an exact enumeration oracle next to a seeded Monte Carlo
harness.
"""

from .adversary import (AttackInfeasibleError, BudgetCappedAdversary,
                        ComposedAdversary, DerandomizedAdversary,
                        ExecutionTrace, FullAttackResult, IdentityAdversary,
                        IterationResult, NormalAttacker, OneShotAttacker,
                        attacked_protocol, chain_adversaries, compose,
                        corruption_posterior, derandomize, full_attack,
                        iterate_one_shot, normal_attacker_step,
                        one_shot_attacker, simulate_execution)
from .analyze import (ExperimentReport, exact_attacked_distribution,
                      kl_attacked_vs_honest, martingale_diagnostics,
                      monte_carlo, variance_accounting)
from .dist import (FiniteDistribution, biased, biased_mean_shift,
                   coupling_joint, kl_divergence, mixture_identity_check,
                   monotone_coupling, pinsker_check, statistical_distance)
from .errors import (BudgetExceededError, CompositionContractError,
                     ConfigError, FlipsimError, InvalidBiasError,
                     InvalidPrefixError, InvalidUtilityError,
                     NoNextRoundError, UndefinedPosteriorError)
from .normalize import (NONROBUST_PARTY, PartyMapping, normalize,
                        semantics_preserved, validate_normal)
from .params import AttackParameters
from .protocol import (JumpClass, Protocol, RoundView, classify_round,
                       expected_outcome, is_robust, round_view,
                       transcript_distribution)

__version__ = "0.1.0"
