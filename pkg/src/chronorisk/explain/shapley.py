"""Shapley values over coalition value functions.

A coalition is an n-bit mask: bit i set means group i is present (unmasked).
`value` must be a pure function of the mask. Exact mode enumerates all 2^n
coalitions; sampled mode averages marginal contributions over random
permutations, falling back to full permutation enumeration when the budget
covers n! (which makes it exact).
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from ..errors import CapacityError, InvalidInputError

MAX_EXACT_GROUPS = 15
# full-enumeration fallback is worthwhile while n! stays around this size
_MAX_ENUMERATED_PERMS = math.factorial(8)

ValueFn = Callable[[int], float]


def coalition_weights(n: int) -> list[float]:
    """w(s) = s! (n-s-1)! / n! for coalition size s, 0 <= s < n."""
    fact = [math.factorial(k) for k in range(n + 1)]
    return [fact[s] * fact[n - s - 1] / fact[n] for s in range(n)]


def exact_shapley(value: ValueFn, n: int) -> np.ndarray:
    """phi_i = sum over S not containing i of w(|S|) (v(S+i) - v(S))."""
    if n < 0:
        raise InvalidInputError("group count must be non-negative")
    if n > MAX_EXACT_GROUPS:
        raise CapacityError(
            f"{n} groups need 2^{n} coalition evaluations; exact mode caps at "
            f"{MAX_EXACT_GROUPS} groups, use sampled mode"
        )
    if n == 0:
        return np.zeros(0)
    values = [float(value(mask)) for mask in range(1 << n)]
    weights = coalition_weights(n)
    phi = np.zeros(n)
    for i in range(n):
        bit = 1 << i
        acc = 0.0
        for mask in range(1 << n):
            if mask & bit:
                continue
            acc += weights[mask.bit_count()] * (values[mask | bit] - values[mask])
        phi[i] = acc
    return phi


def _permutations(n: int, n_permutations: int, seed: int) -> list[Sequence[int]]:
    if math.factorial(n) <= min(n_permutations, _MAX_ENUMERATED_PERMS):
        # budget covers every ordering once: enumerate instead of sampling
        return list(itertools.permutations(range(n)))
    rng = np.random.default_rng(seed)
    return [rng.permutation(n) for _ in range(n_permutations)]


def sampled_shapley(value: ValueFn, n: int, n_permutations: int,
                    seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Permutation-sampling estimate: (phi, per-group standard error)."""
    if n < 0:
        raise InvalidInputError("group count must be non-negative")
    if n_permutations < 1:
        raise InvalidInputError("n_permutations must be >= 1")
    if n == 0:
        return np.zeros(0), np.zeros(0)

    cache: dict[int, float] = {}

    def v(mask: int) -> float:
        if mask not in cache:
            cache[mask] = float(value(mask))
        return cache[mask]

    perms = _permutations(n, n_permutations, seed)
    marginals = np.zeros((len(perms), n))
    for p, perm in enumerate(perms):
        mask = 0
        prev = v(0)
        for g in perm:
            mask |= 1 << int(g)
            cur = v(mask)
            marginals[p, int(g)] = cur - prev
            prev = cur
    phi = marginals.mean(axis=0)
    if len(perms) > 1:
        stderr = marginals.std(axis=0, ddof=1) / math.sqrt(len(perms))
    else:
        stderr = np.zeros(n)
    return phi, stderr
