"""Command-line front end: single recoveries, Monte Carlo batches,
phase-transition sweeps, and restricted-isometry probes.

Every subcommand validates its full parameter set before doing any work,
and identical invocations produce byte-identical output files.  Exit
codes: 0 success, 2 parameter/validation error, 3 numerical solver
failure.  The master seed resolves in order: ``--seed`` flag, config
file, the ``PURSUIT_SEED`` environment variable, then 0.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from typing import List, Optional, Sequence

from . import bench
from .bench import TrialConfig
from .errors import SolverFailure, UsageError
from .sensing import empirical_ric, make_operator

# Keys a --config file may set, per subcommand.  Output destination,
# format, and threading stay flag-only so a shared config file never
# hijacks where results land.
_RECOVER_KEYS = {
    "algorithm", "ensemble", "m", "N", "s", "seed", "signal_kind", "signal_s",
    "p", "R", "signal_truncate", "noise_mode", "noise_level", "eta", "eta_rel",
    "max_iter", "ls_method",
}
_BENCH_KEYS = _RECOVER_KEYS | {"trials", "scaling_s"}
_SWEEP_KEYS = {
    "algorithm", "ensemble", "N", "m_values", "s_values", "trials", "seed",
    "noise_mode", "noise_level", "eta", "eta_rel",
}
_RIC_KEYS = {"ensemble", "m", "N", "op_seed", "n", "trials", "seed"}


def _load_config(path: Optional[str], allowed: set) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _merge(defaults: dict, config: dict, flags: dict) -> dict:
    """Flags beat config-file keys beat built-in defaults."""
    merged = dict(defaults)
    merged.update(config)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("PURSUIT_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise UsageError(f"PURSUIT_SEED is not an integer: {env!r}") from None
    return 0


def _int_list(text) -> List[int]:
    if isinstance(text, list):
        return [int(v) for v in text]
    try:
        return [int(part) for part in str(text).split(",") if part != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _render_csv(write_fn, *args) -> str:
    buffer = io.StringIO()
    write_fn(buffer, *args)
    return buffer.getvalue()


def _trial_config(params: dict, *, trials: int, seed: int) -> TrialConfig:
    return TrialConfig(
        algorithm=params["algorithm"],
        ensemble=params["ensemble"],
        m=int(params["m"]),
        N=int(params["N"]),
        s=int(params["s"]),
        trials=trials,
        master_seed=seed,
        signal_kind=params["signal_kind"],
        signal_s=None if params["signal_s"] is None else int(params["signal_s"]),
        p=None if params["p"] is None else float(params["p"]),
        R=None if params["R"] is None else float(params["R"]),
        signal_truncate=bool(params["signal_truncate"]),
        noise_mode=params["noise_mode"],
        noise_level=float(params["noise_level"]),
        eta=float(params["eta"]),
        eta_rel=None if params["eta_rel"] is None else float(params["eta_rel"]),
        max_iter=int(params["max_iter"]),
        ls_method=params["ls_method"],
    ).validate()


_TRIAL_DEFAULTS = {
    "algorithm": "omp",
    "ensemble": "gaussian",
    "m": None,
    "N": None,
    "s": None,
    "seed": None,
    "signal_kind": "sparse",
    "signal_s": None,
    "p": None,
    "R": None,
    "signal_truncate": False,
    "noise_mode": "none",
    "noise_level": 0.0,
    "eta": 0.0,
    "eta_rel": None,
    "max_iter": 100,
    "ls_method": "cg",
}


def _require(params: dict, names: Sequence[str]) -> None:
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise UsageError(f"missing required parameters: {', '.join(missing)}")


def _add_trial_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alg", "--algorithm", dest="algorithm",
                        choices=["omp", "romp", "cosamp"], default=None)
    parser.add_argument("--ensemble",
                        choices=["gaussian", "bernoulli", "partial_dct"], default=None)
    parser.add_argument("--m", type=int, default=None)
    parser.add_argument("--N", type=int, default=None)
    parser.add_argument("--s", type=int, default=None,
                        help="target sparsity for recovery")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--signal-kind", dest="signal_kind",
                        choices=["sparse", "compressible"], default=None)
    parser.add_argument("--signal-s", dest="signal_s", type=int, default=None,
                        help="signal sparsity when it differs from --s")
    parser.add_argument("--p", type=float, default=None, help="compressible decay exponent")
    parser.add_argument("--R", type=float, default=None, help="compressible magnitude")
    parser.add_argument("--signal-truncate", dest="signal_truncate",
                        action="store_true", default=None,
                        help="zero the compressible tail past s")
    parser.add_argument("--noise-mode", dest="noise_mode",
                        choices=["none", "fixed", "fixed_rel", "sigma"], default=None)
    parser.add_argument("--noise-level", dest="noise_level", type=float, default=None)
    parser.add_argument("--eta", type=float, default=None,
                        help="residual-norm halting target (cosamp)")
    parser.add_argument("--eta-rel", dest="eta_rel", type=float, default=None,
                        help="eta as a fraction of the measurement norm")
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    parser.add_argument("--ls-method", dest="ls_method",
                        choices=["cg", "richardson"], default=None)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default=None, help="output file (default: stdout)")


def cmd_recover(args: argparse.Namespace) -> int:
    config = _load_config(args.config, _RECOVER_KEYS)
    flags = {k: getattr(args, k) for k in _TRIAL_DEFAULTS}
    params = _merge(_TRIAL_DEFAULTS, config, flags)
    _require(params, ["m", "N", "s"])
    seed = _resolve_seed(params["seed"])
    cfg = _trial_config(params, trials=1, seed=seed)
    record = bench.run_trial(cfg, 0)
    record.result = None
    report = bench._json_safe(
        {"format_version": bench.FORMAT_VERSION, "config": cfg.to_dict(), "record": record.to_row()}
    )
    _emit(bench.render_json(report), args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = _load_config(args.config, _BENCH_KEYS)
    flags = {k: getattr(args, k) for k in _TRIAL_DEFAULTS}
    flags["trials"] = args.trials
    flags["scaling_s"] = args.scaling_s
    defaults = {**_TRIAL_DEFAULTS, "trials": None, "scaling_s": None}
    params = _merge(defaults, config, flags)
    _require(params, ["m", "N", "trials"])
    seed = _resolve_seed(params["seed"])
    trials = int(params["trials"])

    if params["scaling_s"] is not None:
        if params["signal_kind"] != "compressible":
            raise UsageError("--scaling-s requires --signal-kind compressible")
        if params["p"] is None or params["R"] is None:
            raise UsageError("missing required parameters: p, R")
        s_values = _int_list(params["scaling_s"])
        scaling = bench.compressible_scaling(
            N=int(params["N"]),
            m=int(params["m"]),
            p=float(params["p"]),
            R=float(params["R"]),
            s_values=s_values,
            ensemble=params["ensemble"],
            algorithm=params["algorithm"],
            trials=trials,
            master_seed=seed,
            eta_rel=params["eta_rel"] if params["eta_rel"] is not None else 1e-8,
            truncate=bool(params["signal_truncate"]),
            threads=args.threads,
        )
        echo = {
            "mode": "scaling", "algorithm": params["algorithm"], "ensemble": params["ensemble"],
            "m": int(params["m"]), "N": int(params["N"]), "p": float(params["p"]),
            "R": float(params["R"]), "s_values": s_values, "trials": trials,
            "master_seed": seed, "truncate": bool(params["signal_truncate"]),
        }
        if args.format == "csv":
            _emit(_render_csv(bench.write_scaling_csv, echo, scaling), args.out)
        else:
            _emit(bench.render_json(bench.scaling_report(echo, scaling)), args.out)
        return 0

    _require(params, ["s"])
    cfg = _trial_config(params, trials=trials, seed=seed)
    records = bench.run_trials(cfg, threads=args.threads)
    if args.format == "csv":
        _emit(_render_csv(bench.write_trials_csv, cfg, records), args.out)
    else:
        _emit(bench.render_json(bench.trials_report(cfg, records)), args.out)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args.config, _SWEEP_KEYS)
    defaults = {
        "algorithm": "omp", "ensemble": "gaussian", "N": None,
        "m_values": None, "s_values": None, "trials": None, "seed": None,
        "noise_mode": "none", "noise_level": 0.0, "eta": 0.0, "eta_rel": None,
    }
    flags = {k: getattr(args, k) for k in defaults}
    params = _merge(defaults, config, flags)
    _require(params, ["N", "m_values", "s_values", "trials"])
    seed = _resolve_seed(params["seed"])
    m_values = _int_list(params["m_values"])
    s_values = _int_list(params["s_values"])
    trials = int(params["trials"])
    if trials < 1:
        raise UsageError(f"trial count must be at least 1, got {trials}")
    cells = bench.phase_sweep(
        N=int(params["N"]),
        m_values=m_values,
        s_values=s_values,
        ensemble=params["ensemble"],
        algorithm=params["algorithm"],
        trials_per_cell=trials,
        master_seed=seed,
        noise_mode=params["noise_mode"],
        noise_level=float(params["noise_level"]),
        eta=float(params["eta"]),
        eta_rel=None if params["eta_rel"] is None else float(params["eta_rel"]),
        threads=args.threads,
    )
    echo = {
        "mode": "sweep", "algorithm": params["algorithm"], "ensemble": params["ensemble"],
        "N": int(params["N"]), "m_values": m_values, "s_values": s_values,
        "trials_per_cell": trials, "master_seed": seed,
        "noise_mode": params["noise_mode"], "noise_level": float(params["noise_level"]),
    }
    if args.format == "csv":
        _emit(_render_csv(bench.write_sweep_csv, echo, cells), args.out)
    else:
        _emit(bench.render_json(bench.sweep_report(echo, cells)), args.out)
    return 0


def cmd_ric(args: argparse.Namespace) -> int:
    config = _load_config(args.config, _RIC_KEYS)
    defaults = {
        "ensemble": "gaussian", "m": None, "N": None, "op_seed": 0,
        "n": None, "trials": None, "seed": None,
    }
    flags = {k: getattr(args, k) for k in defaults}
    params = _merge(defaults, config, flags)
    _require(params, ["m", "N", "n", "trials"])
    seed = _resolve_seed(params["seed"])
    op = make_operator(params["ensemble"], int(params["m"]), int(params["N"]), int(params["op_seed"]))
    estimate = empirical_ric(op, int(params["n"]), int(params["trials"]), seed)
    report = bench._json_safe(
        {
            "format_version": bench.FORMAT_VERSION,
            "config": {
                "ensemble": params["ensemble"], "m": int(params["m"]), "N": int(params["N"]),
                "op_seed": int(params["op_seed"]), "n": int(params["n"]),
                "trials": int(params["trials"]), "seed": seed,
            },
            "n": estimate.n,
            "delta_lower": estimate.delta_lower,
            "trials": estimate.trials,
            "seed": estimate.seed,
        }
    )
    _emit(bench.render_json(report), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsekit",
        description="Greedy sparse recovery over synthetic sensing ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    recover = sub.add_parser("recover", help="run one recovery on a synthetic instance")
    _add_trial_flags(recover)
    recover.set_defaults(func=cmd_recover)

    bench_p = sub.add_parser("bench", help="run a Monte Carlo batch (or scaling study)")
    _add_trial_flags(bench_p)
    bench_p.add_argument("--trials", type=int, default=None)
    bench_p.add_argument("--scaling-s", dest="scaling_s", default=None,
                         help="comma-separated s list: compressible scaling study")
    bench_p.add_argument("--threads", type=int, default=1)
    bench_p.add_argument("--format", choices=["csv", "json"], default="csv")
    bench_p.set_defaults(func=cmd_bench)

    sweep = sub.add_parser("sweep", help="success-rate sweep over an (m, s) grid")
    sweep.add_argument("--alg", "--algorithm", dest="algorithm",
                       choices=["omp", "romp", "cosamp"], default=None)
    sweep.add_argument("--ensemble",
                       choices=["gaussian", "bernoulli", "partial_dct"], default=None)
    sweep.add_argument("--N", type=int, default=None)
    sweep.add_argument("--m-values", dest="m_values", default=None,
                       help="comma-separated measurement counts")
    sweep.add_argument("--s-values", dest="s_values", default=None,
                       help="comma-separated sparsities")
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--noise-mode", dest="noise_mode",
                       choices=["none", "fixed", "fixed_rel", "sigma"], default=None)
    sweep.add_argument("--noise-level", dest="noise_level", type=float, default=None)
    sweep.add_argument("--eta", type=float, default=None)
    sweep.add_argument("--eta-rel", dest="eta_rel", type=float, default=None)
    sweep.add_argument("--threads", type=int, default=1)
    sweep.add_argument("--format", choices=["csv", "json"], default="csv")
    sweep.add_argument("--config", default=None)
    sweep.add_argument("--out", default=None)
    sweep.set_defaults(func=cmd_sweep)

    ric = sub.add_parser("ric", help="empirical restricted-isometry probe")
    ric.add_argument("--ensemble",
                     choices=["gaussian", "bernoulli", "partial_dct"], default=None)
    ric.add_argument("--m", type=int, default=None)
    ric.add_argument("--N", type=int, default=None)
    ric.add_argument("--op-seed", dest="op_seed", type=int, default=None,
                     help="operator seed (default 0)")
    ric.add_argument("--n", type=int, default=None, help="sparsity level probed")
    ric.add_argument("--trials", type=int, default=None)
    ric.add_argument("--seed", type=int, default=None, help="probe seed")
    ric.add_argument("--config", default=None)
    ric.add_argument("--out", default=None)
    ric.set_defaults(func=cmd_ric)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


def entry_point() -> None:
    sys.exit(main())
