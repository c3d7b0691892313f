"""Deterministic, splittable seed derivation.

Per-trial seeds mix the base seed with the trial index through SplitMix64,
so any subset of trials can be reproduced in isolation and results cannot
depend on worker scheduling.
"""

MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return (x ^ (x >> 31)) & MASK


def trial_seed(base_seed: int, trial_index: int) -> int:
    return splitmix64((base_seed & MASK) ^ splitmix64(trial_index))
