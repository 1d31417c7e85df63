"""Sampling oracle: simulate protocol slots and estimate the key rate.

Slots are drawn from the exact conditional Poisson laws of `channels` with
numpy's PCG64 generator (period 2^128; numpy picks exact inversion for small
means and transformed rejection for large ones).  A fixed seed gives a
bit-identical record stream: the root seed sequence is spawned into one
stream for the simulation and one for the bootstrap, and the simulation
consumes its stream in a fixed order -- sender bits, then receiver counts,
then demultiplexer u-counts, then v-counts, each as a single vectorized
draw -- so requesting standard errors never perturbs the records.

Estimates are plug-in (maximum-likelihood) mutual informations over the
empirical joint frequencies, with the eavesdropper pair collapsed exactly as
in the analytic pipeline: the v-count is reduced to a click indicator, and
the u-count is kept only for click-free slots.  Standard errors come from a
nonoverlapping-block bootstrap (100 blocks, 200 replicates).  No bias
correction is applied; the plug-in bias is positive and O(alphabet/slots),
which the convergence property test tracks explicitly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .channels import ScenarioParams, bob_channel, eve_channel
from .information import LN2, HardDecoder

N_BLOCKS = 100
N_REPLICATES = 200
MIN_ESTIMATE_SLOTS = 10_000

RECORD_HEADER = ["q_A", "k_B", "k_Eu", "k_Ev"]


@dataclass(frozen=True)
class SimConfig:
    """One reproducible simulation: parameters, size, seed, and decoding."""

    params: ScenarioParams
    slots: int
    seed: int
    decoding: str = "soft"
    decoder: HardDecoder | None = None

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError("slots must be a positive integer")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.decoding not in ("soft", "hard"):
            raise ValueError(f"decoding must be 'soft' or 'hard', got {self.decoding!r}")
        if self.decoding == "hard" and self.decoder is None:
            raise ValueError("hard decoding requires a decoder")


@dataclass(frozen=True)
class SlotRecord:
    """One protocol slot: sender bit and the three photocounts."""

    q_a: int
    k_b: int
    k_eu: int
    k_ev: int


@dataclass(frozen=True)
class EstimateResult:
    """Plug-in estimates with block-bootstrap standard errors."""

    i_ab_hat: float
    i_be_hat: float
    k_hat: float
    se_i_ab: float
    se_i_be: float
    se_k: float
    slots_used: int


def _draw(cfg: SimConfig):
    """All slot arrays in one shot: (q_a, k_b, k_eu, k_ev)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed).spawn(2)[0]))
    bob = bob_channel(cfg.params)
    eve = eve_channel(cfg.params)
    q = rng.integers(0, 2, size=cfg.slots)
    is1 = q == 1
    k_b = rng.poisson(np.where(is1, bob.law1.mean, bob.law0.mean))
    k_eu = rng.poisson(np.where(is1, eve.u_law1.mean, eve.u_law0.mean))
    k_ev = rng.poisson(np.where(is1, eve.v_law1.mean, eve.v_law0.mean))
    return q, k_b, k_eu, k_ev


def _bootstrap_rng(cfg: SimConfig) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed).spawn(2)[1]))


def simulate(cfg: SimConfig):
    """Yield SlotRecord per slot; bit-identical stream for a fixed config."""
    q, k_b, k_eu, k_ev = _draw(cfg)
    for i in range(cfg.slots):
        yield SlotRecord(int(q[i]), int(k_b[i]), int(k_eu[i]), int(k_ev[i]))


def write_records_csv(path, records) -> int:
    """Dump records as CSV `q_A,k_B,k_Eu,k_Ev`; returns the row count."""
    n = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_HEADER)
        for rec in records:
            writer.writerow([rec.q_a, rec.k_b, rec.k_eu, rec.k_ev])
            n += 1
    return n


def _receiver_symbols(cfg: SimConfig, k_b: np.ndarray) -> np.ndarray:
    """Receiver variable for the estimator: raw counts or ternary regions."""
    if cfg.decoding == "soft":
        return k_b
    d = cfg.decoder
    return np.where(k_b < d.k0, 0, np.where(k_b <= d.k1, 1, 2))


def _eve_symbols(k_eu: np.ndarray, k_ev: np.ndarray) -> np.ndarray:
    """Collapsed eavesdropper outcome: 0 for any v-click, else k_Eu + 1."""
    return np.where(k_ev > 0, 0, k_eu + 1)


def _block_tables(x: np.ndarray, y: np.ndarray, block_len: int):
    """Per-block contingency tables over the observed support of (x, y).

    Returns (tables, x_idx, y_idx, nx, ny) where tables is (N_BLOCKS, cells)
    counts and the index arrays map each observed cell back to its x and y
    codes for marginalization.
    """
    nx = int(x.max()) + 1
    code = x * (int(y.max()) + 1) + y
    cells, inverse = np.unique(code, return_inverse=True)
    block_id = np.arange(x.size) // block_len
    tables = np.bincount(
        block_id * cells.size + inverse, minlength=N_BLOCKS * cells.size
    ).reshape(N_BLOCKS, cells.size)
    x_idx = cells // (int(y.max()) + 1)
    y_idx = cells % (int(y.max()) + 1)
    return tables.astype(float), x_idx, y_idx


def _mi_of_cells(freq: np.ndarray, x_idx: np.ndarray, y_idx: np.ndarray) -> float:
    """Plug-in MI in bits from sparse cell frequencies."""
    rows = np.bincount(x_idx, weights=freq)
    cols = np.bincount(y_idx, weights=freq)
    val = (xlogy(freq, freq).sum() - xlogy(rows, rows).sum() - xlogy(cols, cols).sum()) / LN2
    return max(float(val), 0.0)


def estimate_key_rate(cfg: SimConfig) -> EstimateResult:
    """Empirical counterpart of the key-rate formula, with bootstrap errors."""
    if cfg.slots < MIN_ESTIMATE_SLOTS:
        raise ValueError(
            f"insufficient slots for estimation: need >= {MIN_ESTIMATE_SLOTS}, got {cfg.slots}"
        )
    q, k_b, k_eu, k_ev = _draw(cfg)
    block_len = cfg.slots // N_BLOCKS
    used = block_len * N_BLOCKS
    q = q[:used]
    b = _receiver_symbols(cfg, k_b[:used])
    e = _eve_symbols(k_eu[:used], k_ev[:used])

    ab_tables, ab_x, ab_y = _block_tables(q, b, block_len)
    be_tables, be_x, be_y = _block_tables(b, e, block_len)

    i_ab = _mi_of_cells(ab_tables.sum(axis=0) / used, ab_x, ab_y)
    i_be = _mi_of_cells(be_tables.sum(axis=0) / used, be_x, be_y)

    rng = _bootstrap_rng(cfg)
    draws = rng.integers(0, N_BLOCKS, size=(N_REPLICATES, N_BLOCKS))
    weights = np.zeros((N_REPLICATES, N_BLOCKS))
    for r in range(N_REPLICATES):
        weights[r] = np.bincount(draws[r], minlength=N_BLOCKS)

    ab_rep = weights @ ab_tables / used
    be_rep = weights @ be_tables / used
    i_ab_rep = np.array([_mi_of_cells(ab_rep[r], ab_x, ab_y) for r in range(N_REPLICATES)])
    i_be_rep = np.array([_mi_of_cells(be_rep[r], be_x, be_y) for r in range(N_REPLICATES)])
    k_rep = np.maximum(i_ab_rep - i_be_rep, 0.0)

    return EstimateResult(
        i_ab_hat=i_ab,
        i_be_hat=i_be,
        k_hat=max(i_ab - i_be, 0.0),
        se_i_ab=float(np.std(i_ab_rep, ddof=1)),
        se_i_be=float(np.std(i_be_rep, ddof=1)),
        se_k=float(np.std(k_rep, ddof=1)),
        slots_used=used,
    )
