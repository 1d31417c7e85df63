"""Command-line front end: point evaluation, sweeps, validation, waveforms.

Subcommands:

* ``keyrate``     -- one operating point; optimizes whatever is left free.
* ``sweep``       -- custom distortion sweep; one CSV per (tau_ratio, n_b).
* ``figure3``     -- the preset parameter-study grid (8 CSV panels).
* ``mc-validate`` -- Monte Carlo vs analytic cross-check with 3-SE verdicts.
* ``modes``       -- waveform-level distortion and complement-mode output.

Settings resolve as flags > TOML config file > built-in defaults; config keys
mirror flag names exactly (e.g. ``nbar-e = 75.0``).  Exit status: 0 on
success, 1 when an mc-validate comparison fails, 2 for invalid inputs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .channels import ScenarioParams, energies_from_params
from .information import HardDecoder, KeyRateResult, key_rate
from .modes import (
    COINCIDENT_MODE_CUTOFF,
    ModePair,
    complement_mode,
    distortion as waveform_distortion,
    gaussian_pair,
    load_waveform_csv,
    normalize,
    overlap,
    write_envelope_csv,
    write_waveform_csv,
)
from .montecarlo import SimConfig, estimate_key_rate, simulate, write_records_csv
from .optimize import (
    OptimizationBudget,
    OptimizedPoint,
    optimal_thresholds,
    optimize_fixed_decoder,
    optimize_hard,
    optimize_soft,
)
from .poisson import TruncationPolicy
from .sweep import SweepSpec, db_from_distortion, distortion_from_db, figure3_spec, run_sweep


class CliError(Exception):
    """Invalid input; message names the offending flag."""


def _fail(message: str):
    raise CliError(message)


# ---------------------------------------------------------------------------
# defaults and config handling

_POINT_DEFAULTS = {
    "nbar_e": 10.0,
    "delta_e": None,
    "distortion": None,
    "distortion_db": None,
    "tau_ratio": 1.0,
    "n_b": 0.0,
    "decoding": "soft",
    "k0": None,
    "k1": None,
    "tail_epsilon": 1e-12,
    "coarse_grid_points": 64,
    "refine_tolerance": 1e-4,
    "config": None,
}

_DEFAULT_DISTORTION = 1e-2

_SWEEP_DEFAULTS = {
    "distortion_db_min": -40.0,
    "distortion_db_max": 0.0,
    "steps": 81,
    "nbar_e": "10,75,500",
    "tau_ratio": "1,0.1",
    "n_b": "0,0.1,1,10",
    "decoding": "both",
    "out": ".",
    "tail_epsilon": 1e-12,
    "coarse_grid_points": 64,
    "refine_tolerance": 1e-4,
    "config": None,
}

_FIGURE3_DEFAULTS = {
    "steps": 81,
    "nbar_e": "10,75,500",
    "tau_ratio": "1,0.1",
    "n_b": "0,0.1,1,10",
    "decoding": "both",
    "out": ".",
    "tail_epsilon": 1e-12,
    "coarse_grid_points": 64,
    "refine_tolerance": 1e-4,
    "config": None,
}

_MC_DEFAULTS = {
    **_POINT_DEFAULTS,
    "slots": 10**6,
    "seed": 1,
    "dump_records": None,
    "self_test_mismatch": None,
}

_MODES_DEFAULTS = {
    "waveform": None,
    "generate": None,
    "offset": 1.0,
    "sigma": 1.0,
    "points": 2001,
    "out": ".",
    "config": None,
}


def _load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        _fail(f"--config: no such file: {path}")
    except tomllib.TOMLDecodeError as exc:
        _fail(f"--config: {exc}")


def _merge(ns: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Apply flags > config > defaults, rejecting unknown config keys."""
    cfg = {}
    if getattr(ns, "config", None):
        for key, value in _load_config(ns.config).items():
            dest = key.replace("-", "_")
            if dest not in defaults or dest == "config":
                _fail(f"--config: unknown key '{key}'")
            cfg[dest] = value
    merged = {}
    for dest, fallback in defaults.items():
        flag_value = getattr(ns, dest, None)
        merged[dest] = flag_value if flag_value is not None else cfg.get(dest, fallback)
    return argparse.Namespace(**merged)


# ---------------------------------------------------------------------------
# shared validation

def _resolve_distortion(v) -> float:
    if v.distortion is not None and v.distortion_db is not None:
        _fail("give only one of --distortion / --distortion-db")
    if v.distortion_db is not None:
        if v.distortion_db > 0.0:
            _fail(f"--distortion-db: must be <= 0 dB, got {v.distortion_db}")
        return distortion_from_db(v.distortion_db)
    d = v.distortion if v.distortion is not None else _DEFAULT_DISTORTION
    if not 0.0 <= d <= 1.0:
        _fail("--distortion: distortion out of [0,1]")
    return d


def _validated_point(v):
    """Common point checks; returns (nbar_e, distortion, tau_ratio, n_b)."""
    if v.nbar_e <= 0.0:
        _fail(f"--nbar-e: must be positive, got {v.nbar_e}")
    d = _resolve_distortion(v)
    if v.tau_ratio <= 0.0:
        _fail(f"--tau-ratio: must be positive, got {v.tau_ratio}")
    if v.n_b < 0.0:
        _fail(f"--n-b: must be >= 0, got {v.n_b}")
    if v.delta_e is not None and not 0.0 <= v.delta_e <= math.sqrt(v.nbar_e):
        _fail(f"--delta-e: must lie in [0, sqrt(nbar_e)] = [0, {math.sqrt(v.nbar_e):g}]")
    if (v.k0 is None) != (v.k1 is None):
        _fail("give both --k0 and --k1 or neither")
    if v.k0 is not None and not 0 <= v.k0 <= v.k1:
        _fail(f"--k0/--k1: need 0 <= k0 <= k1, got ({v.k0}, {v.k1})")
    return v.nbar_e, d, v.tau_ratio, v.n_b


def _budget(v) -> OptimizationBudget:
    try:
        return OptimizationBudget(
            coarse_grid_points=v.coarse_grid_points,
            refine_tolerance=v.refine_tolerance,
        )
    except ValueError as exc:
        _fail(f"--coarse-grid-points/--refine-tolerance: {exc}")


def _policy(v) -> TruncationPolicy:
    try:
        return TruncationPolicy(tail_epsilon=v.tail_epsilon)
    except ValueError as exc:
        _fail(f"--tail-epsilon: {exc}")


def _decodings(choice: str) -> list[str]:
    return ["soft", "hard"] if choice == "both" else [choice]


def _solve_point(decoding: str, v, budget, policy):
    """Evaluate one decoding, optimizing whatever was left free.

    Returns (params, result, decoder, delta_was_optimized).
    """
    nbar_e, d, tau, n_b = _validated_point(v)
    decoder = None if v.k0 is None else HardDecoder(v.k0, v.k1)
    if v.delta_e is not None:
        params = ScenarioParams(nbar_e, v.delta_e, d, tau, n_b)
        if decoding == "hard" and decoder is None:
            decoder = optimal_thresholds(params, budget, policy)
        result = key_rate(params, decoding, decoder if decoding == "hard" else None, policy=policy)
        return params, result, decoder if decoding == "hard" else None, False
    if decoding == "soft":
        point = optimize_soft(nbar_e, d, tau, n_b, budget, policy)
    elif decoder is not None:
        point = optimize_fixed_decoder(nbar_e, d, tau, n_b, decoder, budget, policy)
    else:
        point = optimize_hard(nbar_e, d, tau, n_b, budget, policy)
    return point.params, point.result, point.decoder, True


def _print_point_report(decoding: str, params: ScenarioParams, result: KeyRateResult,
                        decoder: HardDecoder | None, optimized: bool) -> None:
    en = energies_from_params(params)
    d = params.distortion
    print(f"[{decoding} decoding]")
    print(f"  nbar_E = {params.nbar_e:g}  distortion = {d:.10g} ({db_from_distortion(d):.6g} dB)"
          f"  tau_ratio = {params.tau_ratio:g}  n_b = {params.n_b:g}")
    print(f"  n_E0 = {en.n_e0:.10g}")
    print(f"  n_E1 = {en.n_e1:.10g}")
    print(f"  delta_E = {params.delta_e:.10g}" + (" (optimized)" if optimized else " (given)"))
    if decoding == "hard":
        print(f"  thresholds (k0, k1) = ({decoder.k0}, {decoder.k1})")
    print(f"  I(A;B) = {result.i_ab:.10g} bits")
    print(f"  I(B;E) = {result.i_be:.10g} bits")
    print(f"  K = {result.key_rate:.10g} bits/slot")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_keyrate(ns) -> int:
    v = _merge(ns, _POINT_DEFAULTS)
    budget, policy = _budget(v), _policy(v)
    for decoding in _decodings(v.decoding):
        _print_point_report(decoding, *_solve_point(decoding, v, budget, policy))
    return 0


def _float_list(text, flag: str) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    try:
        return tuple(float(piece) for piece in str(text).split(","))
    except ValueError:
        _fail(f"{flag}: expected comma-separated numbers, got {text!r}")


def _cmd_sweep(ns) -> int:
    v = _merge(ns, _SWEEP_DEFAULTS)
    budget, policy = _budget(v), _policy(v)
    try:
        spec = SweepSpec(
            db_min=v.distortion_db_min,
            db_max=v.distortion_db_max,
            steps=v.steps,
            nbar_e_list=_float_list(v.nbar_e, "--nbar-e"),
            tau_ratio_list=_float_list(v.tau_ratio, "--tau-ratio"),
            n_b_list=_float_list(v.n_b, "--n-b"),
            decoding_list=tuple(_decodings(v.decoding)),
        )
    except ValueError as exc:
        _fail(str(exc))
    for path in run_sweep(spec, v.out, "sweep", budget, policy):
        print(f"wrote {path}")
    return 0


def _cmd_figure3(ns) -> int:
    v = _merge(ns, _FIGURE3_DEFAULTS)
    budget, policy = _budget(v), _policy(v)
    if v.steps < 2:
        _fail(f"--steps: need at least 2, got {v.steps}")
    base = figure3_spec(v.steps)
    try:
        spec = SweepSpec(
            db_min=base.db_min,
            db_max=base.db_max,
            steps=v.steps,
            nbar_e_list=_float_list(v.nbar_e, "--nbar-e"),
            tau_ratio_list=_float_list(v.tau_ratio, "--tau-ratio"),
            n_b_list=_float_list(v.n_b, "--n-b"),
            decoding_list=tuple(_decodings(v.decoding)),
        )
    except ValueError as exc:
        _fail(str(exc))
    for path in run_sweep(spec, v.out, "figure3", budget, policy):
        print(f"wrote {path}")
    return 0


def _cmd_mc_validate(ns) -> int:
    v = _merge(ns, _MC_DEFAULTS)
    budget, policy = _budget(v), _policy(v)
    if v.slots < 1:
        _fail(f"--slots: must be positive, got {v.slots}")
    if not 0 <= v.seed < 2**64:
        _fail(f"--seed: must fit in 64 unsigned bits, got {v.seed}")
    all_pass = True
    for decoding in _decodings(v.decoding):
        params, analytic, decoder, _ = _solve_point(decoding, v, budget, policy)
        est_decoder = decoder
        if v.self_test_mismatch:
            if decoding != "hard":
                _fail("--self-test-mismatch: requires hard decoding")
            est_decoder = HardDecoder(decoder.k0 + 2, decoder.k1 + 4)
            print(f"[self-test] estimator uses mismatched thresholds "
                  f"({est_decoder.k0}, {est_decoder.k1}) vs analytic ({decoder.k0}, {decoder.k1})")
        try:
            cfg = SimConfig(params=params, slots=v.slots, seed=v.seed,
                            decoding=decoding, decoder=est_decoder)
            est = estimate_key_rate(cfg)
        except ValueError as exc:
            _fail(f"--slots: {exc}")
        if v.dump_records:
            n = write_records_csv(v.dump_records, simulate(cfg))
            print(f"wrote {n} records to {v.dump_records}")
        print(f"[{decoding} decoding] delta_E = {params.delta_e:.10g}, "
              f"{v.slots} slots, seed {v.seed}")
        for name, exact, hat, se in (
            ("I(A;B)", analytic.i_ab, est.i_ab_hat, est.se_i_ab),
            ("I(B;E)", analytic.i_be, est.i_be_hat, est.se_i_be),
            ("K     ", analytic.key_rate, est.k_hat, est.se_k),
        ):
            gap = abs(hat - exact)
            ok = gap <= 3.0 * se
            all_pass &= ok
            print(f"  {name}  analytic = {exact:.8f}  estimate = {hat:.8f}"
                  f"  se = {se:.2e}  {'PASS' if ok else 'FAIL'} (|diff| {'<=' if ok else '>'} 3 SE)")
    print("RESULT: PASS" if all_pass else "RESULT: FAIL")
    return 0 if all_pass else 1


def _cmd_modes(ns) -> int:
    v = _merge(ns, _MODES_DEFAULTS)
    os.makedirs(v.out, exist_ok=True)
    if v.generate:
        if v.sigma <= 0.0:
            _fail(f"--sigma: must be positive, got {v.sigma}")
        if v.points < 8:
            _fail(f"--points: need at least 8 grid points, got {v.points}")
        pair = gaussian_pair(delta_t=v.offset, sigma=v.sigma, n_points=v.points)
        path = v.waveform or os.path.join(v.out, "gaussian_pair.csv")
        write_waveform_csv(path, pair.u0, pair.u1)
        print(f"wrote offset-Gaussian waveform (delta_t = {v.offset:g}, sigma = {v.sigma:g}) to {path}")
    elif v.waveform:
        path = v.waveform
    else:
        _fail("give --waveform PATH, or --generate to create one")
    try:
        raw0, raw1 = load_waveform_csv(path)
        pair = ModePair(normalize(raw0), normalize(raw1))
        ov = overlap(pair)
        d = waveform_distortion(pair)
    except (OSError, ValueError) as exc:
        _fail(f"--waveform: {exc}")
    print(f"|<u0, u1>| = {abs(ov):.12g}")
    print(f"distortion = {d:.12g} ({db_from_distortion(d):.6g} dB)")
    if d <= COINCIDENT_MODE_CUTOFF:
        _fail(f"distortion {d:g} is below {COINCIDENT_MODE_CUTOFF:g}; "
              "complement mode undefined, refusing v(t) output")
    v_path = os.path.join(v.out, "complement_mode.csv")
    write_envelope_csv(v_path, complement_mode(pair))
    print(f"wrote complement mode to {v_path}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring

def _add_point_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nbar-e", type=float, dest="nbar_e")
    p.add_argument("--delta-e", type=float, dest="delta_e")
    p.add_argument("--distortion", type=float)
    p.add_argument("--distortion-db", type=float, dest="distortion_db")
    p.add_argument("--tau-ratio", type=float, dest="tau_ratio")
    p.add_argument("--n-b", type=float, dest="n_b")
    p.add_argument("--decoding", choices=["soft", "hard", "both"])
    p.add_argument("--k0", type=int)
    p.add_argument("--k1", type=int)
    _add_budget_flags(p)


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tail-epsilon", type=float, dest="tail_epsilon")
    p.add_argument("--coarse-grid-points", type=int, dest="coarse_grid_points")
    p.add_argument("--refine-tolerance", type=float, dest="refine_tolerance")
    p.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="okdrate",
        description="Secure key rates for binary intensity-modulated optical "
                    "key distribution against a temporal-demultiplexing receiver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate", help="evaluate or optimize one operating point")
    _add_point_flags(p)
    p.set_defaults(func=_cmd_keyrate)

    p = sub.add_parser("sweep", help="custom distortion sweep, one CSV per (tau, n_b)")
    p.add_argument("--distortion-db-min", type=float, dest="distortion_db_min")
    p.add_argument("--distortion-db-max", type=float, dest="distortion_db_max")
    p.add_argument("--steps", type=int)
    p.add_argument("--nbar-e", dest="nbar_e", help="comma-separated list")
    p.add_argument("--tau-ratio", dest="tau_ratio", help="comma-separated list")
    p.add_argument("--n-b", dest="n_b", help="comma-separated list")
    p.add_argument("--decoding", choices=["soft", "hard", "both"])
    p.add_argument("--out")
    _add_budget_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("figure3", help="preset parameter-study grid (8 CSV panels)")
    p.add_argument("--steps", type=int)
    p.add_argument("--nbar-e", dest="nbar_e", help="narrow the preset energy list")
    p.add_argument("--tau-ratio", dest="tau_ratio", help="narrow the preset ratio list")
    p.add_argument("--n-b", dest="n_b", help="narrow the preset noise list")
    p.add_argument("--decoding", choices=["soft", "hard", "both"])
    p.add_argument("--out")
    _add_budget_flags(p)
    p.set_defaults(func=_cmd_figure3)

    p = sub.add_parser("mc-validate", help="Monte Carlo vs analytic cross-check")
    _add_point_flags(p)
    p.add_argument("--slots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-records", dest="dump_records", metavar="PATH")
    p.add_argument("--self-test-mismatch", action="store_true", default=None,
                   dest="self_test_mismatch",
                   help="negative control: estimator decodes with shifted thresholds")
    p.set_defaults(func=_cmd_mc_validate)

    p = sub.add_parser("modes", help="waveform distortion and complement mode")
    p.add_argument("--waveform", help="input CSV t,re_u0,im_u0,re_u1,im_u1")
    p.add_argument("--generate", action="store_true", default=None,
                   help="write an offset-Gaussian pair first, then analyze it")
    p.add_argument("--offset", type=float, help="Gaussian center separation")
    p.add_argument("--sigma", type=float, help="Gaussian width")
    p.add_argument("--points", type=int, help="grid points for --generate")
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_modes)

    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
