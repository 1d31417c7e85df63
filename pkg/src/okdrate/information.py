"""Mutual informations and the attainable secret-key rate.

Key-rate convention: reverse reconciliation with ideal post-processing, so

    K = max{ I(A;B) - I(B;E), 0 }   [bits per slot]

with A the transmitted bit (uniform), B the receiver's variable — the raw
photocount k_B for soft decoding, or the ternary discrimination result
{0, X, 1} for hard decoding — and E the eavesdropper's detector pair
(k_u, k_v).  Counts on the two sides are independent given A, so every joint
distribution here is assembled as sum_a P(a) P(b|a) P(e|a).

Collapsed eavesdropper alphabet: since the v-mode detector is dark for bit 0,
any outcome with k_v >= 1 forces the posterior P(A=1|E) = 1.  All such
outcomes therefore have proportional likelihood columns and merging them into
a single aggregate outcome leaves every mutual information unchanged.  The
working alphabet is {(k_v = 0, k_u = k)}_{k=0..K_u} plus that aggregate,
which turns the 2-D count lattice into a 1-D alphabet of size K_u + 2.

Sums run over certified-truncated supports (see ``poisson``); truncated
vectors keep their mass deficit rather than being renormalized, so the
absolute error of every information value is bounded by a small multiple of
the policy's tail epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy
from scipy.stats import poisson as _poisson

from .channels import ScenarioParams, bob_channel, eve_channel
from .poisson import (
    DEFAULT_POLICY,
    DiscreteDistribution,
    TruncationPolicy,
    log_pmf_vector,
    support_bound,
)

LN2 = math.log(2.0)

#: Label assigned to photocounts between the two discrimination thresholds.
INCONCLUSIVE = "X"


@dataclass(frozen=True)
class HardDecoder:
    """Threshold pair for ternary discrimination of the receiver count.

    k_B < k0 maps to bit 0, k_B > k1 to bit 1, anything in between to the
    inconclusive symbol, which is announced publicly and discarded.
    """

    k0: int
    k1: int

    def __post_init__(self):
        if self.k0 < 0 or self.k1 < 0:
            raise ValueError("thresholds must be nonnegative")
        if self.k0 > self.k1:
            raise ValueError(f"k0 must not exceed k1, got ({self.k0}, {self.k1})")


@dataclass(frozen=True)
class KeyRateResult:
    """Key rate together with its mutual-information breakdown."""

    key_rate: float
    i_ab: float
    i_be: float
    decoding: str
    decoder: HardDecoder | None
    delta_e: float

    def __post_init__(self):
        if self.decoding not in ("soft", "hard"):
            raise ValueError(f"decoding must be 'soft' or 'hard', got {self.decoding!r}")
        expected = max(self.i_ab - self.i_be, 0.0)
        if abs(self.key_rate - expected) > 1e-12:
            raise ValueError("key_rate inconsistent with max(i_ab - i_be, 0)")


def hard_decode(k_b: int, d: HardDecoder) -> str:
    """Ternary discrimination of one photocount: '0', 'X', or '1'."""
    if k_b < d.k0:
        return "0"
    if k_b <= d.k1:
        return INCONCLUSIVE
    return "1"


def _mi_bits(joint: np.ndarray) -> float:
    """Mutual information (bits) of a nonnegative joint-measure matrix.

    Marginals are taken from the matrix itself, which keeps the value
    nonnegative (Gibbs) even when the matrix carries a truncation deficit.
    """
    j = np.asarray(joint, dtype=float)
    rows = j.sum(axis=1)
    cols = j.sum(axis=0)
    val = (xlogy(j, j).sum() - xlogy(rows, rows).sum() - xlogy(cols, cols).sum()) / LN2
    return max(float(val), 0.0)


def mutual_information(joint: DiscreteDistribution) -> float:
    """Mutual information (bits) of a joint distribution over pair labels."""
    xs: list = []
    ys: list = []
    for label in joint.labels:
        if not (isinstance(label, tuple) and len(label) == 2):
            raise ValueError("joint labels must be (x, y) pairs")
        if label[0] not in xs:
            xs.append(label[0])
        if label[1] not in ys:
            ys.append(label[1])
    matrix = np.zeros((len(xs), len(ys)))
    for label, prob in zip(joint.labels, joint.probs):
        matrix[xs.index(label[0]), ys.index(label[1])] += prob
    return _mi_bits(matrix)


# ---------------------------------------------------------------------------
# Truncated conditional tables, shared with the optimizer.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BobTables:
    """Receiver count distribution tables over the truncated alphabet 0..k_max."""

    k_max: int
    pmf0: np.ndarray  # P(k_B = k | bit 0), k = 0..k_max
    pmf1: np.ndarray
    cdf0: np.ndarray  # index j holds P(k_B <= j - 1); length k_max + 2
    cdf1: np.ndarray
    sf0: np.ndarray  # index j holds P(k_B > j); length k_max + 1
    sf1: np.ndarray


@dataclass(frozen=True)
class EveTables:
    """Collapsed eavesdropper alphabet: u-counts with a dark v-mode, then the aggregate.

    Index k = 0..k_u_max is the outcome (k_v = 0, k_u = k); the final index is
    the v-click aggregate.  ``w1`` is the posterior P(A=1 | outcome), exactly
    1.0 at the aggregate whenever it has mass.
    """

    k_u_max: int
    p0: np.ndarray  # P(outcome | bit 0)
    p1: np.ndarray
    w1: np.ndarray
    pe: np.ndarray  # equal-prior marginal (p0 + p1) / 2


def bob_tables(p: ScenarioParams, policy: TruncationPolicy = DEFAULT_POLICY) -> BobTables:
    ch = bob_channel(p)
    k_max = max(
        support_bound(ch.law0, policy),
        support_bound(ch.law1, policy),
    )
    ks = np.arange(k_max + 1)
    pmf0 = np.exp(log_pmf_vector(ch.law0.mean, k_max))
    pmf1 = np.exp(log_pmf_vector(ch.law1.mean, k_max))
    cdf0 = np.concatenate(([0.0], _cdf(ks, ch.law0.mean)))
    cdf1 = np.concatenate(([0.0], _cdf(ks, ch.law1.mean)))
    sf0 = _sf(ks, ch.law0.mean)
    sf1 = _sf(ks, ch.law1.mean)
    return BobTables(k_max, pmf0, pmf1, cdf0, cdf1, sf0, sf1)


def _cdf(ks, mean: float) -> np.ndarray:
    if mean == 0.0:
        return (np.asarray(ks) >= 0).astype(float)
    return _poisson.cdf(ks, mean)


def _sf(ks, mean: float) -> np.ndarray:
    if mean == 0.0:
        return (np.asarray(ks) < 0).astype(float)
    return _poisson.sf(ks, mean)


def eve_tables(p: ScenarioParams, policy: TruncationPolicy = DEFAULT_POLICY) -> EveTables:
    ch = eve_channel(p)
    mu_v1 = ch.v_law1.mean
    k_u_max = max(
        support_bound(ch.u_law0, policy),
        support_bound(ch.u_law1, policy),
    )
    log0 = log_pmf_vector(ch.u_law0.mean, k_u_max)
    # bit 1 contributes to the dark-v outcomes only when its v-count is zero
    log1 = log_pmf_vector(ch.u_law1.mean, k_u_max) - mu_v1
    n = k_u_max + 2
    p0 = np.zeros(n)
    p1 = np.zeros(n)
    p0[:-1] = np.exp(log0)
    p1[:-1] = np.exp(log1)
    p1[-1] = -np.expm1(-mu_v1)  # any v-click at all

    w1 = np.empty(n)
    with np.errstate(over="ignore"):
        logit = log1 - log0
        w1[:-1] = np.where(
            np.isneginf(log1),
            0.0,
            np.where(np.isneginf(log0), 1.0, 1.0 / (1.0 + np.exp(-logit))),
        )
    w1[-1] = 1.0  # a v-click identifies bit 1 unambiguously
    return EveTables(k_u_max, p0, p1, w1, (p0 + p1) / 2.0)


def hard_region_masses(p: ScenarioParams, d: HardDecoder) -> np.ndarray:
    """Exact region masses P(q_B | bit) as a (2, 3) array, rows = bit value.

    Columns are (bit 0, inconclusive, bit 1); each row sums to 1 exactly —
    the ternary regions partition the full count distribution, so no
    truncation is involved.
    """
    ch = bob_channel(p)
    out = np.empty((2, 3))
    for row, law in enumerate((ch.law0, ch.law1)):
        lo = float(_cdf(d.k0 - 1, law.mean))  # P(k_B < k0)
        hi = float(_cdf(d.k1, law.mean))  # P(k_B <= k1)
        out[row] = (lo, hi - lo, float(_sf(d.k1, law.mean)))
    return out


def i_ab_soft(p: ScenarioParams, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """I(A; k_B) in bits for a uniform transmitted bit."""
    t = bob_tables(p, policy)
    joint = 0.5 * np.vstack([t.pmf0, t.pmf1])
    return _mi_bits(joint)


def i_ab_hard(
    p: ScenarioParams,
    d: HardDecoder,
    policy: TruncationPolicy | None = None,
) -> float:
    """I(A; q_B) in bits over the ternary alphabet {0, X, 1}.

    Region masses come from exact Poisson cdf/sf values, so no truncation
    enters; ``policy`` is accepted for interface symmetry and unused.
    """
    del policy
    joint = 0.5 * hard_region_masses(p, d)
    return _mi_bits(joint)


def i_be(
    p: ScenarioParams,
    decoding: str,
    d: HardDecoder | None = None,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> float:
    """I(B; E) in bits over the collapsed eavesdropper alphabet.

    B is k_B (soft) or q_B (hard); E is the demultiplexed detector pair.
    The joint is assembled through the shared bit: P(b, e) =
    sum_a P(a) P(b|a) P(e|a).
    """
    et = eve_tables(p, policy)
    if decoding == "soft":
        bt = bob_tables(p, policy)
        pb = np.vstack([bt.pmf0, bt.pmf1])
    elif decoding == "hard":
        if d is None:
            raise ValueError("hard decoding requires a decoder")
        pb = hard_region_masses(p, d)
    else:
        raise ValueError(f"decoding must be 'soft' or 'hard', got {decoding!r}")
    joint = 0.5 * (np.outer(pb[0], et.p0) + np.outer(pb[1], et.p1))
    return _mi_bits(joint)


def key_rate(
    p: ScenarioParams,
    decoding: str,
    d: HardDecoder | None = None,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> KeyRateResult:
    """Attainable key per slot: max{I(A;B) - I(B;E), 0}."""
    if decoding == "soft":
        iab = i_ab_soft(p, policy)
    elif decoding == "hard":
        if d is None:
            raise ValueError("hard decoding requires a decoder")
        iab = i_ab_hard(p, d, policy)
    else:
        raise ValueError(f"decoding must be 'soft' or 'hard', got {decoding!r}")
    ibe = i_be(p, decoding, d, policy)
    return KeyRateResult(
        key_rate=max(iab - ibe, 0.0),
        i_ab=iab,
        i_be=ibe,
        decoding=decoding,
        decoder=d if decoding == "hard" else None,
        delta_e=p.delta_e,
    )
