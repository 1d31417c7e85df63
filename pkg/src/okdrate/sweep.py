"""Parameter sweeps over distortion grids, with CSV emission.

A sweep evaluates the optimizer at every (decoding, signal energy, distortion)
cell of a dB-spaced grid, one output file per (tau_ratio, n_b) panel.  Rows
are sorted deterministically by (decoding, energy, distortion) before writing,
so the files are reproducible regardless of evaluation order.

The distortion axis is decibels of a power fraction: db = 10*log10(D).  Each
energy's grid is the requested even spacing with the single point nearest the
clamp knee D = 1/nbar_E snapped exactly onto the knee (when the knee lies
inside the range) and flagged in the `knee` column, so downstream plots can
place vertical markers on an actual sample.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .optimize import DEFAULT_BUDGET, OptimizationBudget, optimize_hard, optimize_soft
from .poisson import DEFAULT_POLICY, TruncationPolicy

CSV_HEADER = [
    "distortion_db",
    "decoding",
    "nbar_e",
    "delta_e_opt",
    "k0",
    "k1",
    "i_ab",
    "i_be",
    "key_rate",
    "knee",
]

FIGURE3_TAU_RATIOS = (1.0, 0.1)
FIGURE3_NOISE_LEVELS = (0.0, 0.1, 1.0, 10.0)
FIGURE3_ENERGIES = (10.0, 75.0, 500.0)
FIGURE3_DB_RANGE = (-40.0, 0.0)
FIGURE3_STEPS = 81


def db_from_distortion(d: float) -> float:
    """Distortion as decibels of a power fraction, 10*log10(D)."""
    return 10.0 * math.log10(d) if d > 0.0 else -math.inf


def distortion_from_db(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SweepSpec:
    """Grid description: a dB range and lists for the other axes."""

    db_min: float
    db_max: float
    steps: int
    nbar_e_list: tuple[float, ...]
    tau_ratio_list: tuple[float, ...]
    n_b_list: tuple[float, ...]
    decoding_list: tuple[str, ...]

    def __post_init__(self):
        if not self.db_min < self.db_max:
            raise ValueError("distortion range needs min < max (--distortion-db-min/--distortion-db-max)")
        if self.db_max > 0.0:
            raise ValueError("distortion upper bound must be <= 0 dB (--distortion-db-max)")
        if self.steps < 2:
            raise ValueError("need at least 2 sweep steps (--steps)")
        for name, values in (
            ("--nbar-e", self.nbar_e_list),
            ("--tau-ratio", self.tau_ratio_list),
            ("--n-b", self.n_b_list),
            ("--decoding", self.decoding_list),
        ):
            if len(values) == 0:
                raise ValueError(f"empty sweep axis ({name})")
        bad = set(self.decoding_list) - {"soft", "hard"}
        if bad:
            raise ValueError(f"unknown decoding {sorted(bad)} (--decoding)")


def figure3_spec(steps: int = FIGURE3_STEPS) -> SweepSpec:
    """The published parameter-study grid; only the dB resolution is free."""
    return SweepSpec(
        db_min=FIGURE3_DB_RANGE[0],
        db_max=FIGURE3_DB_RANGE[1],
        steps=steps,
        nbar_e_list=FIGURE3_ENERGIES,
        tau_ratio_list=FIGURE3_TAU_RATIOS,
        n_b_list=FIGURE3_NOISE_LEVELS,
        decoding_list=("soft", "hard"),
    )


def _db_grid(spec: SweepSpec, nbar_e: float) -> tuple[np.ndarray, int]:
    """Even dB grid with the sample nearest the knee snapped onto it.

    Returns (grid, knee_index); knee_index is -1 when 1/nbar_E falls outside
    the swept range.
    """
    grid = np.linspace(spec.db_min, spec.db_max, spec.steps)
    knee_db = db_from_distortion(1.0 / nbar_e)
    if not (spec.db_min <= knee_db <= spec.db_max):
        return grid, -1
    i = int(np.argmin(np.abs(grid - knee_db)))
    grid[i] = knee_db
    return grid, i


@dataclass(frozen=True)
class SweepRow:
    distortion_db: float
    decoding: str
    nbar_e: float
    delta_e_opt: float
    k0: int | None
    k1: int | None
    i_ab: float
    i_be: float
    key_rate: float
    knee: int


def sweep_panel(
    spec: SweepSpec,
    tau_ratio: float,
    n_b: float,
    budget: OptimizationBudget = DEFAULT_BUDGET,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> list[SweepRow]:
    """All rows of one (tau_ratio, n_b) panel, deterministically sorted."""
    rows = []
    for decoding in spec.decoding_list:
        for nbar_e in spec.nbar_e_list:
            grid, knee_i = _db_grid(spec, nbar_e)
            for i, db in enumerate(grid):
                d = distortion_from_db(float(db))
                if decoding == "soft":
                    point = optimize_soft(nbar_e, d, tau_ratio, n_b, budget, policy)
                    k0 = k1 = None
                else:
                    point = optimize_hard(nbar_e, d, tau_ratio, n_b, budget, policy)
                    k0, k1 = point.decoder.k0, point.decoder.k1
                rows.append(
                    SweepRow(
                        distortion_db=float(db),
                        decoding=decoding,
                        nbar_e=nbar_e,
                        delta_e_opt=point.params.delta_e,
                        k0=k0,
                        k1=k1,
                        i_ab=point.result.i_ab,
                        i_be=point.result.i_be,
                        key_rate=point.result.key_rate,
                        knee=1 if i == knee_i else 0,
                    )
                )
    rows.sort(key=lambda r: (r.decoding, r.nbar_e, r.distortion_db))
    return rows


def write_panel_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [
                    repr(r.distortion_db),
                    r.decoding,
                    f"{r.nbar_e:g}",
                    repr(r.delta_e_opt),
                    "" if r.k0 is None else r.k0,
                    "" if r.k1 is None else r.k1,
                    repr(r.i_ab),
                    repr(r.i_be),
                    repr(r.key_rate),
                    r.knee,
                ]
            )


def panel_filename(prefix: str, tau_ratio: float, n_b: float) -> str:
    return f"{prefix}_tau{tau_ratio:g}_nb{n_b:g}.csv"


def run_sweep(
    spec: SweepSpec,
    out_dir,
    prefix: str = "sweep",
    budget: OptimizationBudget = DEFAULT_BUDGET,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> list[str]:
    """Evaluate every panel and write one CSV each; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for tau in spec.tau_ratio_list:
        for n_b in spec.n_b_list:
            rows = sweep_panel(spec, tau, n_b, budget, policy)
            path = os.path.join(out_dir, panel_filename(prefix, tau, n_b))
            write_panel_csv(path, rows)
            paths.append(path)
    return paths
