"""Key-rate maximization over modulation depth and discrimination thresholds.

The outer problem is one-dimensional: maximize the key rate over the
modulation depth delta_E in [0, sqrt(nbar_E)] (the upper bound keeps the
weak-symbol energy nonnegative).  The landscape is not assumed unimodal --
the clamp at zero key flattens whole regions -- so a coarse uniform grid
locates the best basin and golden-section refinement polishes it.

For hard decoding each probed delta_E additionally requires the best
threshold pair (k0, k1) over the truncated receiver alphabet.  The search is
exhaustive in its guarantees: every pair either gets an exact evaluation or
is certified away by an upper bound that provably dominates its objective.
The bound replaces the eavesdropper alphabet with a small posterior-grouped
surrogate; grouping outcomes is a deterministic coarse-graining, so the
surrogate leaks at most as much information, which makes

    I(A; q_B) - I(q_B; grouped E)  >=  I(A; q_B) - I(q_B; E)

a valid per-pair upper bound.  Surrogates form a ladder of increasing size,
each level re-pruning the survivors of the previous one, so flat landscapes
(where the coarse gap exceeds the spread of the objective) tighten
geometrically instead of forcing exact work on everything.  The search
resolves values down to _RESOLUTION nats -- far below every tolerance stated
for this artifact -- and within that resolution ties break lexicographically
toward smaller (k0, k1); a clamped-to-zero optimum is reported as (0, 0)
since every pair is then equally good.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .channels import ScenarioParams, bob_channel
from .information import HardDecoder, KeyRateResult, _cdf, eve_tables, key_rate
from .poisson import DEFAULT_POLICY, TruncationPolicy, support_bound

# Coarsest surrogate size and growth factor between ladder levels.
_LADDER_BASE = 16
_LADDER_GROWTH = 4

# Survivors exact-evaluated after each ladder level to sharpen the incumbent.
_TOP_PROBE = 8

# Below this many pairs, batched 2-d gathers beat a per-row accumulation loop.
_MATRIX_CUTOFF = 4096

# Log-odds window resolved by the surrogate bins; posteriors beyond it are
# saturated in float64 anyway.
_LOGIT_SPAN = 40.0

# Value resolution of the threshold search, in nats.  Pairs within this of
# the optimum are not distinguished: the returned pair is certified to lie
# within _RESOLUTION of the global maximum, which is two orders of magnitude
# below every tolerance this artifact states.  Without a resolution floor the
# degenerate regimes (whole landscape tied at zero key within float noise)
# would force exact evaluation of every pair for no informational gain.
_RESOLUTION = 1e-11

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizationBudget:
    """Effort knobs for the modulation-depth and threshold searches."""

    coarse_grid_points: int = 64
    refine_tolerance: float = 1e-4
    # Cap on the number of candidate threshold values (the truncated receiver
    # alphabet size); None means the alphabet itself is the only limit.
    max_threshold_span: int | None = None

    def __post_init__(self):
        if self.coarse_grid_points < 8:
            raise ValueError("coarse_grid_points must be >= 8")
        if not (0.0 < self.refine_tolerance <= 1e-2):
            raise ValueError("refine_tolerance must lie in (0, 1e-2]")
        if self.max_threshold_span is not None and self.max_threshold_span < 1:
            raise ValueError("max_threshold_span must be positive when set")


DEFAULT_BUDGET = OptimizationBudget()


@dataclass(frozen=True)
class OptimizedPoint:
    """Optimizer output: winning parameters plus an audit trail of probes."""

    params: ScenarioParams
    result: KeyRateResult
    decoder: HardDecoder | None
    probes: tuple[tuple[float, float], ...]  # (delta_e, key_rate) per probe
    pairs_evaluated: int = 0  # exact threshold-pair evaluations (hard only)

    def __post_init__(self):
        if self.probes and self.result.key_rate + 1e-12 < max(r for _, r in self.probes):
            raise ValueError("optimized key rate below a probed candidate")
        if self.params.delta_e != self.result.delta_e:
            raise ValueError("params and result disagree on delta_e")


def _phi(x: np.ndarray) -> np.ndarray:
    """Elementwise -x ln x on [0, 1]-ish masses; clips subtraction dust."""
    x = np.maximum(x, 0.0)
    return -xlogy(x, x)


def _group_by_posterior(pe: np.ndarray, w1: np.ndarray, n_groups: int):
    """Merge eavesdropper outcomes into uniform log-odds bins.

    Returns group weights and group posteriors.  The grouped conditional law
    of q_B is the probability-weighted average of its members' laws, which is
    again a two-component mixture at the averaged posterior.  The surrogate's
    looseness per group scales with the within-group posterior spread, and
    for Poisson likelihood ratios the log-odds is linear in the count, so
    uniform log-odds bins slice the crossover window evenly while the
    saturated blocks collapse into (near) zero-spread end bins.
    """
    with np.errstate(divide="ignore"):
        logit = np.log(w1) - np.log1p(-w1)
    edges = np.linspace(-_LOGIT_SPAN, _LOGIT_SPAN, n_groups - 1)
    idx = np.searchsorted(edges, logit)
    p_t = np.bincount(idx, weights=pe, minlength=n_groups)
    pw_t = np.bincount(idx, weights=pe * w1, minlength=n_groups)
    keep = p_t > 0.0
    p_t = p_t[keep]
    return p_t, pw_t[keep] / p_t


def _pair_indices(kmax: int):
    """All padded index pairs (i0, i1) with 0 <= i0 < i1 <= kmax + 1.

    In the padded cdf arrays, entry i holds P(k <= i - 1), so a threshold
    pair maps to indices i0 = k0 and i1 = k1 + 1; the constraint
    0 <= k0 <= k1 <= kmax becomes exactly i0 < i1.
    """
    i0, i1 = np.triu_indices(kmax + 2, k=1)
    return i0.astype(np.int64), i1.astype(np.int64)


class _ThresholdSearch:
    """Certified exhaustive threshold search at one fixed parameter point.

    Decomposes the unclamped objective I(A;q_B) - I(q_B;E) (in nats) into
    per-i0, per-i1, cheap pairwise, and one eavesdropper-alphabet pairwise
    term; the last is bounded through the surrogate ladder and computed
    exactly only for pairs no surrogate level could rule out.
    """

    def __init__(self, p: ScenarioParams, policy: TruncationPolicy, budget: OptimizationBudget):
        ch = bob_channel(p)
        kmax = max(support_bound(ch.law0, policy), support_bound(ch.law1, policy))
        span = kmax + 1
        if budget.max_threshold_span is not None and span > budget.max_threshold_span:
            raise RuntimeError(
                f"truncated receiver alphabet needs {span} threshold values: "
                "threshold span cap exceeded"
            )
        self.kmax = kmax

        ks = np.arange(-1, kmax + 1)
        c0 = _cdf(ks, ch.law0.mean)  # padded: index i holds P(k <= i - 1)
        c1 = _cdf(ks, ch.law1.mean)
        cbar = 0.5 * (c0 + c1)

        et = eve_tables(p, policy)
        s0 = float(et.p0.sum())
        s1 = float(et.p1.sum())
        # Marginal over q_B regions carries the (tiny) eavesdropper-side
        # truncation deficit, matching the public i_be joint exactly.
        crow = 0.5 * (s0 * c0 + s1 * c1)
        self._trow = 0.5 * (s0 + s1)
        self._c = (c0, c1, cbar, crow)

        # Given the eavesdropper outcome, the receiver count law depends on
        # the outcome only through its posterior, so outcomes with identical
        # posteriors merge losslessly.  The likelihood ratio saturates to
        # exactly 0.0 / 1.0 in floats outside the crossover window, which
        # shrinks the exact table several-fold at large pulse energies.
        w_u, inverse = np.unique(et.w1, return_inverse=True)
        pe_u = np.bincount(inverse, weights=et.pe, minlength=w_u.size)
        self._pe = pe_u
        self._g = (1.0 - w_u)[:, None] * c0[None, :] + w_u[:, None] * c1[None, :]

        # Pure per-index contributions (low side at i0, high side at i1).
        self._a0 = _phi(cbar) - 0.5 * _phi(c0) - 0.5 * _phi(c1) - _phi(crow)
        self._a1 = (
            _phi(1.0 - cbar)
            - 0.5 * _phi(1.0 - c0)
            - 0.5 * _phi(1.0 - c1)
            - _phi(self._trow - crow)
        )
        self._f_lo = pe_u @ _phi(self._g)
        self._f_hi = pe_u @ _phi(1.0 - self._g)

        # Surrogate ladder, coarsest first: (weights, rows, lo sums, hi sums).
        self._ladder = []
        size = _LADDER_BASE
        while 2 * size < w_u.size:
            p_t, w_t = _group_by_posterior(pe_u, w_u, size)
            gt = (1.0 - w_t)[:, None] * c0[None, :] + w_t[:, None] * c1[None, :]
            self._ladder.append((p_t, gt, p_t @ _phi(gt), p_t @ _phi(1.0 - gt)))
            size *= _LADDER_GROWTH

    @staticmethod
    def _pair_terms(weights: np.ndarray, rows: np.ndarray, i0, i1) -> np.ndarray:
        """sum_t weights[t] * phi(rows[t, i1] - rows[t, i0]) for each pair."""
        if i0.size <= _MATRIX_CUTOFF:
            return weights @ _phi(rows[:, i1] - rows[:, i0])
        out = np.zeros(i0.shape)
        for t in range(weights.size):
            row = rows[t]
            out += weights[t] * _phi(row[i1] - row[i0])
        return out

    def _partial(self, i0, i1, f_lo: np.ndarray, f_hi: np.ndarray) -> np.ndarray:
        """All objective terms except the eavesdropper pairwise one (nats)."""
        c0, c1, cbar, crow = self._c
        out = self._a0[i0] + self._a1[i1] + f_lo[i0] + f_hi[i1]
        out += (
            _phi(cbar[i1] - cbar[i0])
            - 0.5 * _phi(c0[i1] - c0[i0])
            - 0.5 * _phi(c1[i1] - c1[i0])
            - _phi(crow[i1] - crow[i0])
        )
        return out

    def _exact(self, i0, i1) -> np.ndarray:
        """Exact objective (nats) for a batch of pairs."""
        out = self._partial(i0, i1, self._f_lo, self._f_hi)
        out += self._pair_terms(self._pe, self._g, i0, i1)
        return out

    def _bound(self, level, i0, i1) -> np.ndarray:
        """Upper bound on the objective (nats) via one surrogate level."""
        p_t, gt, ft_lo, ft_hi = level
        out = self._partial(i0, i1, ft_lo, ft_hi)
        out += self._pair_terms(p_t, gt, i0, i1)
        return out

    def best_pair(self, warm: HardDecoder | None = None):
        """Return (decoder, exact evaluations) for the certified optimum."""
        i0, i1 = _pair_indices(self.kmax)
        n_eval = 0
        best_val = -np.inf
        best: tuple[int, int] | None = None

        def consider(ci0, ci1):
            nonlocal n_eval, best_val, best
            if ci0.size == 0:
                return
            vals = self._exact(ci0, ci1)
            n_eval += vals.size
            vmax = float(vals.max())
            if vmax < best_val:
                return
            hits = np.nonzero(vals == vmax)[0]
            j = hits[np.lexsort((ci1[hits], ci0[hits]))[0]]
            pair = (int(ci0[j]), int(ci1[j]) - 1)
            if vmax > best_val or best is None or pair < best:
                best_val, best = vmax, pair

        def floor() -> float:
            # Bounds below zero can never beat the clamp (if the true optimum
            # hides there the report is (0, 0) anyway), and candidates that
            # cannot improve on the incumbent by the value resolution are not
            # worth distinguishing.
            return max(best_val, 0.0) + _RESOLUTION

        if warm is not None and warm.k1 <= self.kmax:
            consider(np.array([warm.k0]), np.array([warm.k1 + 1]))

        last_bounds = None
        for level in self._ladder:
            total = i0.size
            bounds = self._bound(level, i0, i1)
            keep = bounds >= floor()
            i0 = i0[keep]
            i1 = i1[keep]
            if i0.size == 0:
                break
            last_bounds = bounds[keep]
            top = np.argsort(last_bounds, kind="stable")[-_TOP_PROBE:]
            consider(i0[top], i1[top])
            if 2 * i0.size > total:
                break  # surrogate saturated; finer levels won't pay off

        if i0.size and last_bounds is not None:
            # Top probes may have raised the incumbent since the last prune.
            keep = last_bounds >= floor()
            i0 = i0[keep]
            i1 = i1[keep]
        consider(i0, i1)

        if best is None or best_val <= 0.0:
            return HardDecoder(0, 0), n_eval
        return HardDecoder(*best), n_eval


def _golden_section(f, a: float, b: float, tol: float) -> None:
    """Golden-section ascent on [a, b]; f records its own probes."""
    if b - a <= tol:
        if b > a:
            f(0.5 * (a + b))
        return
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = f(x1)
    f2 = f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)


def _maximize_over_delta(evaluate, nbar_e: float, budget: OptimizationBudget):
    """Shared outer loop: coarse grid, then golden-section around the winner.

    ``evaluate(delta)`` returns the key rate at that modulation depth (and
    may carry side state such as the best decoder).  Ties prefer the probe
    seen first, so an everywhere-zero landscape reports delta_E = 0.
    """
    d_hi = math.sqrt(nbar_e)
    grid = np.linspace(0.0, d_hi, budget.coarse_grid_points)

    probes: list[tuple[float, float]] = []

    def probe(delta: float) -> float:
        rate = evaluate(delta)
        probes.append((delta, rate))
        return rate

    values = [probe(d) for d in grid]
    i_best = int(np.argmax(values))  # first index on ties -> smallest delta

    lo = grid[max(i_best - 1, 0)]
    hi = grid[min(i_best + 1, grid.size - 1)]
    _golden_section(probe, float(lo), float(hi), budget.refine_tolerance * d_hi)

    best_delta, best_rate = probes[0]
    for delta, rate in probes:
        if rate > best_rate:
            best_delta, best_rate = delta, rate
    if best_rate == 0.0:
        best_delta = 0.0
    return best_delta, tuple(probes)


def optimize_soft(
    nbar_e: float,
    distortion: float,
    tau_ratio: float,
    n_b: float,
    budget: OptimizationBudget = DEFAULT_BUDGET,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> OptimizedPoint:
    """Maximize the soft-decoding key rate over delta_E in [0, sqrt(nbar_E)]."""

    def evaluate(delta: float) -> float:
        p = ScenarioParams(nbar_e, delta, distortion, tau_ratio, n_b)
        return key_rate(p, "soft", policy=policy).key_rate

    best_delta, probes = _maximize_over_delta(evaluate, nbar_e, budget)
    params = ScenarioParams(nbar_e, best_delta, distortion, tau_ratio, n_b)
    result = key_rate(params, "soft", policy=policy)
    return OptimizedPoint(params=params, result=result, decoder=None, probes=probes)


def optimize_fixed_decoder(
    nbar_e: float,
    distortion: float,
    tau_ratio: float,
    n_b: float,
    decoder: HardDecoder,
    budget: OptimizationBudget = DEFAULT_BUDGET,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> OptimizedPoint:
    """Maximize over delta_E with the ternary decoder held fixed."""

    def evaluate(delta: float) -> float:
        p = ScenarioParams(nbar_e, delta, distortion, tau_ratio, n_b)
        return key_rate(p, "hard", decoder, policy=policy).key_rate

    best_delta, probes = _maximize_over_delta(evaluate, nbar_e, budget)
    params = ScenarioParams(nbar_e, best_delta, distortion, tau_ratio, n_b)
    result = key_rate(params, "hard", decoder, policy=policy)
    return OptimizedPoint(params=params, result=result, decoder=decoder, probes=probes)


def optimal_thresholds(
    params: ScenarioParams,
    budget: OptimizationBudget = DEFAULT_BUDGET,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> HardDecoder:
    """Certified-best ternary thresholds at fixed scenario parameters."""
    decoder, _ = _ThresholdSearch(params, policy, budget).best_pair()
    return decoder


def optimize_hard(
    nbar_e: float,
    distortion: float,
    tau_ratio: float,
    n_b: float,
    budget: OptimizationBudget = DEFAULT_BUDGET,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> OptimizedPoint:
    """Maximize the hard-decoding key rate over delta_E and thresholds.

    Each probed delta_E runs the certified threshold search; the previous
    probe's winner seeds the incumbent, which only sharpens pruning and never
    changes the certified result.
    """
    state = {"warm": None, "pairs": 0, "decoders": {}}

    def evaluate(delta: float) -> float:
        p = ScenarioParams(nbar_e, delta, distortion, tau_ratio, n_b)
        search = _ThresholdSearch(p, policy, budget)
        decoder, n_eval = search.best_pair(warm=state["warm"])
        state["warm"] = decoder
        state["pairs"] += n_eval
        state["decoders"][delta] = decoder
        return key_rate(p, "hard", decoder, policy=policy).key_rate

    best_delta, probes = _maximize_over_delta(evaluate, nbar_e, budget)
    decoder = state["decoders"].get(best_delta)
    if decoder is None:  # zero-rate fallback reported at delta_E = 0
        p0 = ScenarioParams(nbar_e, best_delta, distortion, tau_ratio, n_b)
        decoder, n_eval = _ThresholdSearch(p0, policy, budget).best_pair()
        state["pairs"] += n_eval
    params = ScenarioParams(nbar_e, best_delta, distortion, tau_ratio, n_b)
    result = key_rate(params, "hard", decoder, policy=policy)
    return OptimizedPoint(
        params=params,
        result=result,
        decoder=decoder,
        probes=probes,
        pairs_evaluated=state["pairs"],
    )
