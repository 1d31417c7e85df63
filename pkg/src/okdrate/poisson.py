"""Poisson photocount statistics with certified tail truncation.

Every information-rate computation in this package reduces to sums over
truncated Poisson supports.  The truncation here is certified: the support
bound is the smallest count K whose upper tail holds mass at most
``tail_epsilon``, so downstream mutual-information errors are bounded by the
declared deficit instead of a heuristic mean-plus-sigma window.  Truncated
vectors are deliberately *not* renormalized; renormalizing would silently
bias entropies, so the missing mass is carried along as ``deficit``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson as _poisson


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite probability vector over an ordered alphabet.

    ``labels`` may be integers, strings, or tuples (for joint alphabets).
    ``deficit`` declares an upper bound on probability mass missing from the
    vector (from tail truncation); the entries sum to 1 within it.
    """

    labels: tuple
    probs: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if len(self.labels) != probs.size:
            raise ValueError("labels and probs must have equal length")
        if np.any(probs < 0):
            raise ValueError("negative probability entry")
        if not 0.0 <= self.deficit < 1.0:
            raise ValueError("deficit out of [0, 1)")
        total = probs.sum()
        if not (1.0 - self.deficit - 1e-9 <= total <= 1.0 + 1e-9):
            raise ValueError(
                f"probabilities sum to {total}, outside declared deficit {self.deficit}"
            )

    @property
    def total(self) -> float:
        return float(self.probs.sum())


@dataclass(frozen=True)
class PoissonLaw:
    """Poisson photocount law; mean 0 denotes the point mass at k = 0."""

    mean: float

    def __post_init__(self):
        if not np.isfinite(self.mean) or self.mean < 0:
            raise ValueError(f"Poisson mean must be finite and >= 0, got {self.mean}")


@dataclass(frozen=True)
class TruncationPolicy:
    """Certified-tail truncation: keep counts until the tail mass <= tail_epsilon."""

    tail_epsilon: float = 1e-12
    hard_cap: int = 10**6

    def __post_init__(self):
        if not 0.0 < self.tail_epsilon < 1e-6:
            raise ValueError("tail_epsilon must lie in (0, 1e-6)")
        if self.hard_cap < 16:
            raise ValueError("hard_cap must be >= 16")


DEFAULT_POLICY = TruncationPolicy()


def log_pmf_vector(mean: float, kmax: int) -> np.ndarray:
    """log pmf of Pois(mean) at k = 0..kmax; -inf entries for the mean-0 point mass."""
    ks = np.arange(kmax + 1)
    if mean == 0.0:
        out = np.full(kmax + 1, -np.inf)
        out[0] = 0.0
        return out
    return ks * np.log(mean) - mean - gammaln(ks + 1.0)


def pmf_vector(mean: float, kmax: int) -> np.ndarray:
    """pmf of Pois(mean) at k = 0..kmax."""
    return np.exp(log_pmf_vector(mean, kmax))


def pmf(law: PoissonLaw, k: int) -> float:
    """Probability of exactly k counts under ``law`` (log-space evaluation)."""
    if k < 0 or k != int(k):
        raise ValueError(f"count must be a nonnegative integer, got {k}")
    k = int(k)
    if law.mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return float(np.exp(k * np.log(law.mean) - law.mean - gammaln(k + 1.0)))


def support_bound(law: PoissonLaw, policy: TruncationPolicy = DEFAULT_POLICY) -> int:
    """Smallest K with upper-tail mass P(k > K) <= tail_epsilon.

    Equivalently P(k <= K) >= 1 - tail_epsilon.  Raises if the bound would
    exceed ``policy.hard_cap``.
    """
    eps = policy.tail_epsilon
    if law.mean == 0.0:
        return 0
    # scipy's isf lands at or near the answer; certify minimality locally.
    k = int(_poisson.isf(eps, law.mean))
    k = max(k, 0)
    while k > 0 and _poisson.sf(k - 1, law.mean) <= eps:
        k -= 1
    while _poisson.sf(k, law.mean) > eps:
        k += 1
        if k > policy.hard_cap:
            raise RuntimeError("truncation cap exceeded")
    if k > policy.hard_cap:
        raise RuntimeError("truncation cap exceeded")
    return k


def truncated_pmf_vector(law: PoissonLaw, kmax: int) -> DiscreteDistribution:
    """pmf values at k = 0..kmax, not renormalized; missing mass goes to deficit."""
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    probs = pmf_vector(law.mean, kmax)
    deficit = float(_poisson.sf(kmax, law.mean)) if law.mean > 0 else 0.0
    return DiscreteDistribution(
        labels=tuple(range(kmax + 1)), probs=probs, deficit=deficit
    )
