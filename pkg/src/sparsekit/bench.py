"""Monte Carlo benchmark harness: seeded trial execution, phase-transition
sweeps, compressible-decay scaling, and deterministic CSV/JSON emission.

Reproducibility contract: every trial derives its own seed from the
batch's master seed and trial index, then splits that into independent
streams for the operator, the signal, and the noise.  Records are always
ordered by trial index, so running a batch with any number of threads
emits identical bytes.  Wall-clock timings are kept on the in-memory
records but never written to output files for the same reason.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import SolverFailure, UsageError
from .pursuit import RecoveryResult, cosamp, omp, romp
from .rng import derive_seed
from .sensing import Ensemble, make_operator
from .signals import NoiseSpec, Signal, gen_compressible, gen_sparse, head, measure, tail_l1

FORMAT_VERSION = 1

# Exact recovery means relative l2 error at or below this; the margin
# separates least-squares round-off from genuine support errors.
SUCCESS_RELATIVE_TOL = 1e-6

_ALGORITHMS = ("omp", "romp", "cosamp")
_SIGNAL_KINDS = ("sparse", "compressible")
_NOISE_MODES = ("none", "fixed", "fixed_rel", "sigma")

# Stream tags hashed into the per-trial seed so the operator, signal,
# and noise draws are independent of each other.
_STREAM_OPERATOR = 1
_STREAM_SIGNAL = 2
_STREAM_NOISE = 3

TRIAL_CSV_COLUMNS = (
    "trial_index",
    "l2_error",
    "rel_error",
    "support_exact",
    "success",
    "tail_term",
    "noise_norm",
    "bound_ratio",
    "residual_norm",
    "iterations",
    "matvecs",
    "halted_by",
    "error",
)

SWEEP_CSV_COLUMNS = ("m", "s", "trials", "successes", "success_rate")

SCALING_CSV_COLUMNS = ("s", "trials", "median_l2_error")


@dataclass(frozen=True)
class TrialConfig:
    """Everything that determines one benchmark batch."""

    algorithm: str
    ensemble: str
    m: int
    N: int
    s: int
    trials: int
    master_seed: int
    signal_kind: str = "sparse"
    signal_s: Optional[int] = None  # sparse signals only; defaults to s
    p: Optional[float] = None
    R: Optional[float] = None
    signal_truncate: bool = False  # compressible only: zero the tail past s
    noise_mode: str = "none"
    noise_level: float = 0.0
    eta: float = 0.0
    eta_rel: Optional[float] = None  # eta as a fraction of ||u||; wins over eta
    max_iter: int = 100
    ls_method: str = "cg"

    def validate(self) -> "TrialConfig":
        if self.algorithm not in _ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algorithm!r}; expected one of {_ALGORITHMS}")
        try:
            Ensemble(self.ensemble)
        except ValueError:
            raise UsageError(f"unknown ensemble {self.ensemble!r}") from None
        if self.m < 1 or self.m > self.N:
            raise UsageError(f"need 1 <= m <= N, got m={self.m}, N={self.N}")
        if self.trials < 1:
            raise UsageError(f"trial count must be at least 1, got {self.trials}")
        if self.s < 1:
            raise UsageError(f"sparsity must be at least 1, got {self.s}")
        if self.algorithm in ("omp", "romp") and self.s > self.m:
            raise UsageError(f"sparsity {self.s} exceeds measurement count {self.m}")
        if self.algorithm == "cosamp" and 3 * self.s > self.m:
            raise UsageError(f"cosamp needs 3*s <= m, got s={self.s}, m={self.m}")
        if self.signal_kind not in _SIGNAL_KINDS:
            raise UsageError(f"unknown signal kind {self.signal_kind!r}")
        if self.signal_kind == "sparse":
            if self.p is not None or self.R is not None:
                raise UsageError("p and R apply only to compressible signals")
            if self.signal_truncate:
                raise UsageError("signal_truncate applies only to compressible signals")
            s_sig = self.s if self.signal_s is None else self.signal_s
            if s_sig < 0 or s_sig > self.N:
                raise UsageError(f"need 0 <= signal_s <= N, got {s_sig}")
        else:
            if self.signal_s is not None:
                raise UsageError("signal_s applies only to sparse signals")
            if self.p is None or self.R is None:
                raise UsageError("compressible signals need p and R")
            if self.p <= 0 or self.R <= 0:
                raise UsageError("compressible signals need p > 0 and R > 0")
        if self.noise_mode not in _NOISE_MODES:
            raise UsageError(f"unknown noise mode {self.noise_mode!r}")
        if self.noise_level < 0:
            raise UsageError("noise level must be non-negative")
        if self.eta < 0:
            raise UsageError("eta must be non-negative")
        if self.eta_rel is not None and self.eta_rel < 0:
            raise UsageError("eta_rel must be non-negative")
        if self.max_iter < 1:
            raise UsageError("max_iter must be at least 1")
        if self.ls_method not in ("cg", "richardson"):
            raise UsageError(f"unknown least-squares method {self.ls_method!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, mapping: dict) -> "TrialConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**mapping).validate()


@dataclass
class TrialRecord:
    """Outcome of one trial, ready for CSV/JSON emission.

    ``wall_time`` and ``result`` stay in memory only: timings would break
    byte-reproducible outputs, and the full recovery trace is bulky.
    """

    trial_index: int
    l2_error: Optional[float]
    rel_error: Optional[float]
    support_exact: Optional[bool]
    success: bool
    tail_term: float
    noise_norm: float
    bound_ratio: Optional[float]
    residual_norm: Optional[float]
    iterations: Optional[int]
    matvecs: Optional[int]
    halted_by: str
    error: Optional[str] = None
    wall_time: float = 0.0
    result: Optional[RecoveryResult] = None

    def to_row(self) -> dict:
        return {name: getattr(self, name) for name in TRIAL_CSV_COLUMNS}


def trial_seeds(master_seed: int, trial_index: int) -> dict:
    """Per-trial seeds for the operator, signal, and noise streams."""
    trial_seed = derive_seed(master_seed, trial_index)
    return {
        "operator": derive_seed(trial_seed, _STREAM_OPERATOR),
        "signal": derive_seed(trial_seed, _STREAM_SIGNAL),
        "noise": derive_seed(trial_seed, _STREAM_NOISE),
    }


def _trial_signal(cfg: TrialConfig, seed: int) -> Signal:
    if cfg.signal_kind == "sparse":
        s_sig = cfg.s if cfg.signal_s is None else cfg.signal_s
        return gen_sparse(cfg.N, s_sig, seed)
    signal = gen_compressible(cfg.N, cfg.p, cfg.R, seed)
    if cfg.signal_truncate:
        signal = head(signal, cfg.s)
    return signal


def _trial_noise(cfg: TrialConfig, op, signal: Signal, seed: int) -> NoiseSpec:
    if cfg.noise_mode == "none" or cfg.noise_level == 0.0:
        return NoiseSpec.none()
    if cfg.noise_mode == "fixed":
        return NoiseSpec.fixed_norm(cfg.noise_level, seed)
    if cfg.noise_mode == "fixed_rel":
        clean_norm = float(np.linalg.norm(op.forward(signal.values)))
        return NoiseSpec.fixed_norm(cfg.noise_level * clean_norm, seed)
    return NoiseSpec.gaussian(cfg.noise_level, seed)


def run_trial(cfg: TrialConfig, trial_index: int) -> TrialRecord:
    """Build the trial's operator/signal/noise, recover, and score."""
    seeds = trial_seeds(cfg.master_seed, trial_index)
    op = make_operator(cfg.ensemble, cfg.m, cfg.N, seeds["operator"])
    signal = _trial_signal(cfg, seeds["signal"])
    noise = _trial_noise(cfg, op, signal, seeds["noise"])
    u, e = measure(op, signal, noise)

    eta = cfg.eta if cfg.eta_rel is None else cfg.eta_rel * float(np.linalg.norm(u))

    started = time.perf_counter()
    error_message = None
    result: Optional[RecoveryResult] = None
    try:
        if cfg.algorithm == "omp":
            result = omp(op, u, cfg.s, ls_method=cfg.ls_method)
        elif cfg.algorithm == "romp":
            result = romp(op, u, cfg.s, ls_method=cfg.ls_method)
        else:
            result = cosamp(
                op, u, cfg.s, eta=eta, max_iter=cfg.max_iter, ls_method=cfg.ls_method
            )
    except SolverFailure as exc:
        error_message = str(exc)
    wall_time = time.perf_counter() - started

    x = signal.values
    x_norm = float(np.linalg.norm(x))
    tail_s = cfg.s // 2 if cfg.algorithm == "cosamp" else cfg.s
    tail_term = tail_l1(x, tail_s) / math.sqrt(cfg.s)
    noise_norm = float(np.linalg.norm(e))

    if result is None:
        return TrialRecord(
            trial_index=trial_index,
            l2_error=None,
            rel_error=None,
            support_exact=None,
            success=False,
            tail_term=tail_term,
            noise_norm=noise_norm,
            bound_ratio=None,
            residual_norm=None,
            iterations=None,
            matvecs=None,
            halted_by="solver_failure",
            error=error_message,
            wall_time=wall_time,
        )

    l2_error = float(np.linalg.norm(result.estimate - x))
    rel_error = l2_error / x_norm if x_norm > 0 else None
    success = l2_error <= SUCCESS_RELATIVE_TOL * x_norm
    support_exact = None
    if signal.true_support is not None:
        support_exact = result.support == signal.true_support
    denominator = tail_term + noise_norm
    bound_ratio = l2_error / denominator if denominator > 0 else None

    return TrialRecord(
        trial_index=trial_index,
        l2_error=l2_error,
        rel_error=rel_error,
        support_exact=support_exact,
        success=success,
        tail_term=tail_term,
        noise_norm=noise_norm,
        bound_ratio=bound_ratio,
        residual_norm=result.residual_norms[-1],
        iterations=result.iterations,
        matvecs=result.matvec_count,
        halted_by=result.halted_by.value,
        error=None,
        wall_time=wall_time,
        result=result,
    )


def run_trials(cfg: TrialConfig, *, threads: int = 1, keep_results: bool = False) -> List[TrialRecord]:
    """Run the whole batch; records come back ordered by trial index.

    Trials are independent (each builds its own operator, so the matvec
    counter is never shared across threads) and the output is identical
    for any thread count.
    """
    cfg.validate()
    if threads < 1:
        raise UsageError("threads must be at least 1")
    indices = range(cfg.trials)
    if threads == 1:
        records = [run_trial(cfg, i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda i: run_trial(cfg, i), indices))
    if not keep_results:
        for record in records:
            record.result = None
    return records


def summarize(records: Sequence[TrialRecord]) -> dict:
    """Aggregate statistics over a batch, None-safe for failed trials."""
    def _median(values):
        values = [v for v in values if v is not None and math.isfinite(v)]
        return float(np.median(values)) if values else None

    iteration_counts = [r.iterations for r in records if r.iterations is not None]
    halt_counts: dict = {}
    for record in records:
        halt_counts[record.halted_by] = halt_counts.get(record.halted_by, 0) + 1
    successes = sum(1 for r in records if r.success)
    return {
        "trials": len(records),
        "successes": successes,
        "success_rate": successes / len(records) if records else None,
        "median_l2_error": _median([r.l2_error for r in records]),
        "median_rel_error": _median([r.rel_error for r in records]),
        "median_bound_ratio": _median([r.bound_ratio for r in records]),
        "mean_iterations": (
            float(np.mean(iteration_counts)) if iteration_counts else None
        ),
        "max_iterations": max(iteration_counts) if iteration_counts else None,
        "total_matvecs": sum(r.matvecs for r in records if r.matvecs is not None),
        "all_errors_finite": all(
            r.l2_error is not None and math.isfinite(r.l2_error) for r in records
        ),
        "halted_by": {k: halt_counts[k] for k in sorted(halt_counts)},
    }


def phase_sweep(
    N: int,
    m_values: Sequence[int],
    s_values: Sequence[int],
    ensemble: str,
    algorithm: str,
    trials_per_cell: int,
    master_seed: int,
    *,
    noise_mode: str = "none",
    noise_level: float = 0.0,
    eta: float = 0.0,
    eta_rel: Optional[float] = None,
    threads: int = 1,
) -> List[dict]:
    """Exact-recovery fraction over an (m, s) grid.

    Cells that violate the algorithm's dimensional preconditions are
    emitted with ``None`` statistics rather than being skipped, so the
    grid shape of the output is always ``len(m_values) * len(s_values)``.
    """
    if not m_values or not s_values:
        raise UsageError("sweep needs at least one m and one s value")
    cells = []
    for m in m_values:
        for s in s_values:
            valid = 1 <= s <= m <= N
            if algorithm == "cosamp":
                valid = valid and 3 * s <= m
            if not valid:
                cells.append(
                    {"m": m, "s": s, "trials": trials_per_cell, "successes": None, "success_rate": None}
                )
                continue
            cfg = TrialConfig(
                algorithm=algorithm,
                ensemble=ensemble,
                m=m,
                N=N,
                s=s,
                trials=trials_per_cell,
                master_seed=master_seed,
                noise_mode=noise_mode,
                noise_level=noise_level,
                eta=eta,
                eta_rel=eta_rel,
            )
            records = run_trials(cfg, threads=threads)
            successes = sum(1 for r in records if r.success)
            cells.append(
                {
                    "m": m,
                    "s": s,
                    "trials": trials_per_cell,
                    "successes": successes,
                    "success_rate": successes / trials_per_cell,
                }
            )
    return cells


def fit_decay_slope(s_values: Sequence[int], medians: Sequence[float]):
    """Least-squares slope of log(median / sqrt(log s)) against log s.

    Returns ``(slope, intercept, rms_residual)`` or ``None`` when the fit
    is degenerate: fewer than two points, any s < 2 (log s vanishes), or
    any non-positive or non-finite median.
    """
    if len(s_values) < 2 or len(s_values) != len(medians):
        return None
    if any(s < 2 for s in s_values):
        return None
    if any(m is None or not math.isfinite(m) or m <= 0 for m in medians):
        return None
    xs = np.log(np.asarray(s_values, dtype=np.float64))
    ys = np.log(np.asarray(medians, dtype=np.float64) / np.sqrt(np.log(s_values)))
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    rms = float(np.sqrt(np.mean((ys - fitted) ** 2)))
    return float(slope), float(intercept), rms


def compressible_scaling(
    N: int,
    m: int,
    p: float,
    R: float,
    s_values: Sequence[int],
    ensemble: str,
    algorithm: str,
    trials: int,
    master_seed: int,
    *,
    eta_rel: Optional[float] = 1e-8,
    truncate: bool = False,
    threads: int = 1,
) -> dict:
    """Median recovery error per target sparsity on compressible signals.

    Noiseless by construction.  Fits the decay slope described in
    ``fit_decay_slope``; a degenerate fit (for example when truncation
    makes every error vanish) is reported rather than raised.
    """
    if not s_values:
        raise UsageError("scaling needs at least one s value")
    if list(s_values) != sorted(set(s_values)):
        raise UsageError("s values must be strictly increasing")
    rows = []
    for s in s_values:
        cfg = TrialConfig(
            algorithm=algorithm,
            ensemble=ensemble,
            m=m,
            N=N,
            s=s,
            trials=trials,
            master_seed=master_seed,
            signal_kind="compressible",
            p=p,
            R=R,
            signal_truncate=truncate,
            eta_rel=eta_rel,
        )
        records = run_trials(cfg, threads=threads)
        median = summarize(records)["median_l2_error"]
        rows.append({"s": int(s), "trials": trials, "median_l2_error": median})
    medians = [row["median_l2_error"] for row in rows]
    # Medians at the solver-tolerance floor (e.g. a zeroed tail making every
    # trial exact) carry no decay information; the envelope scale R sets the
    # natural unit for "effectively zero" here.
    floor = 1e-6 * R
    fit = None
    if all(v is not None and math.isfinite(v) and v > floor for v in medians):
        fit = fit_decay_slope([row["s"] for row in rows], medians)
    if fit is None:
        return {"rows": rows, "slope": None, "intercept": None, "fit_residual": None, "degenerate": True}
    slope, intercept, rms = fit
    return {"rows": rows, "slope": slope, "intercept": intercept, "fit_residual": rms, "degenerate": False}


# ---------------------------------------------------------------------------
# Deterministic emission


def _cell_text(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _config_comment(config: dict) -> str:
    return "# config=" + json.dumps(_json_safe(config), sort_keys=True, separators=(",", ":"))


def _write_csv(stream, config: dict, columns: Sequence[str], rows: Sequence[dict]) -> None:
    stream.write(f"# format_version={FORMAT_VERSION}\n")
    stream.write(_config_comment(config) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell_text(row[c]) for c in columns])


def write_trials_csv(stream, cfg: TrialConfig, records: Sequence[TrialRecord]) -> None:
    _write_csv(stream, cfg.to_dict(), TRIAL_CSV_COLUMNS, [r.to_row() for r in records])


def trials_report(cfg: TrialConfig, records: Sequence[TrialRecord]) -> dict:
    return _json_safe(
        {
            "format_version": FORMAT_VERSION,
            "config": cfg.to_dict(),
            "summary": summarize(records),
            "records": [r.to_row() for r in records],
        }
    )


def write_sweep_csv(stream, config: dict, cells: Sequence[dict]) -> None:
    _write_csv(stream, config, SWEEP_CSV_COLUMNS, cells)


def sweep_report(config: dict, cells: Sequence[dict]) -> dict:
    return _json_safe(
        {"format_version": FORMAT_VERSION, "config": config, "cells": list(cells)}
    )


def write_scaling_csv(stream, config: dict, scaling: dict) -> None:
    stream.write(f"# format_version={FORMAT_VERSION}\n")
    stream.write(_config_comment(config) + "\n")
    fit = {k: scaling[k] for k in ("slope", "intercept", "fit_residual", "degenerate")}
    stream.write("# fit=" + json.dumps(_json_safe(fit), sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SCALING_CSV_COLUMNS)
    for row in scaling["rows"]:
        writer.writerow([_cell_text(row[c]) for c in SCALING_CSV_COLUMNS])


def scaling_report(config: dict, scaling: dict) -> dict:
    return _json_safe({"format_version": FORMAT_VERSION, "config": config, **scaling})


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
