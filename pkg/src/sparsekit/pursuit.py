"""Greedy sparse recovery: orthogonal matching pursuit, regularized OMP,
and compressive sampling matching pursuit.

All three share the same skeleton — form a proxy by applying the adjoint
to the current residual, pick candidate coordinates from its largest
entries, refit by restricted least squares — and differ in how many
coordinates they commit per iteration and whether they can drop them
again.  Every routine is deterministic: ties in magnitude comparisons
always resolve to the lowest index, and the iteration trace is logged so
invariants can be audited after the fact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import SolverFailure, UsageError
from .linalg import (
    DEFAULT_LS_MAX_ITER,
    DEFAULT_LS_TOL,
    RestrictedSystem,
    SupportSet,
    as_vector,
    embed,
    largest_indices,
    restricted_least_squares,
)

# CoSaMP declares the support stalled when it repeats and the residual
# norm dropped by less than this relative amount.
STALL_RELATIVE_DECREASE = 1e-6

DEFAULT_COSAMP_MAX_ITER = 100


class HaltReason(enum.Enum):
    SPARSITY_REACHED = "sparsity_reached"
    RESIDUAL_SMALL = "residual_small"
    MAX_ITERATIONS = "max_iterations"
    SUPPORT_CAP = "support_cap"
    PROXY_ZERO = "proxy_zero"
    # Not one of the canonical stopping events, but CoSaMP's fixed-point
    # halt has to be reportable as itself rather than mislabelled.
    SUPPORT_STALL = "support_stall"


@dataclass
class RecoveryResult:
    """Outcome of one recovery run, with enough trace to audit it."""

    estimate: np.ndarray
    support: SupportSet
    iterations: int
    residual_norms: List[float]
    matvec_count: int
    halted_by: HaltReason
    iterates: List[dict] = field(default_factory=list)


def _check_measurement(op, u) -> np.ndarray:
    return as_vector(u, length=op.m, name="measurement")


def _refit(op, support: np.ndarray, u: np.ndarray, *, tol, max_iter, method, stage: str):
    system = RestrictedSystem(operator=op, support=SupportSet(support), rhs=u)
    try:
        return restricted_least_squares(system, tol=tol, max_iter=max_iter, method=method)
    except SolverFailure as exc:
        raise SolverFailure(f"{stage}: {exc}") from exc


def omp(
    op,
    u,
    s: int,
    *,
    ls_tol: float = DEFAULT_LS_TOL,
    ls_max_iter: int = DEFAULT_LS_MAX_ITER,
    ls_method: str = "cg",
) -> RecoveryResult:
    """Orthogonal matching pursuit: one coordinate per iteration, s iterations.

    Each round applies the adjoint to the residual, commits the largest
    proxy coordinate not already selected (ties to the lowest index), and
    refits all committed coordinates by least squares, so the residual is
    orthogonal to the selected columns and never increases.
    """
    u = _check_measurement(op, u)
    if s < 1:
        raise UsageError(f"sparsity must be at least 1, got {s}")
    if s > op.m:
        raise UsageError(f"sparsity {s} exceeds measurement count {op.m}")

    start_count = op.matvec_count
    selected: List[int] = []
    estimate = np.zeros(op.N)
    residual = u.copy()
    residual_norms = [float(np.linalg.norm(residual))]
    iterates: List[dict] = []
    halted: Optional[HaltReason] = None

    for iteration in range(1, s + 1):
        proxy = op.adjoint(residual)
        if selected:
            proxy[np.asarray(selected, dtype=np.int64)] = 0.0
        if not np.any(proxy != 0.0):
            halted = HaltReason.PROXY_ZERO
            break
        chosen = int(largest_indices(proxy, 1)[0])
        selected.append(chosen)
        support = np.sort(np.asarray(selected, dtype=np.int64))
        solution = _refit(
            op, support, u,
            tol=ls_tol, max_iter=ls_max_iter, method=ls_method,
            stage=f"omp iteration {iteration}",
        )
        estimate = embed(solution.coeffs, support, op.N)
        residual = u - op.forward_support(support, solution.coeffs)
        norm = float(np.linalg.norm(residual))
        residual_norms.append(norm)
        iterates.append(
            {
                "iteration": iteration,
                "selected": chosen,
                "support_size": len(selected),
                "residual_norm": norm,
                "ls_iterations": solution.iterations,
            }
        )
    if halted is None:
        halted = HaltReason.SPARSITY_REACHED

    return RecoveryResult(
        estimate=estimate,
        support=SupportSet.from_iterable(selected),
        iterations=len(iterates),
        residual_norms=residual_norms,
        matvec_count=op.matvec_count - start_count,
        halted_by=halted,
        iterates=iterates,
    )


def romp_regularize(proxy_values) -> SupportSet:
    """Pick the comparable-magnitude window with the most energy.

    Given the candidate proxy values, returns positions (into the input
    array) of a subset whose magnitudes are within a factor of two of
    each other and whose l2 energy is maximal among all such subsets.
    Scanning maximal windows of the magnitude-sorted order suffices: any
    comparable subset lives inside some maximal window, whose energy is
    at least as large.  Ties in energy go to the window whose largest
    entry has the lowest original position.
    """
    values = as_vector(proxy_values, name="proxy values")
    if values.size == 0:
        raise UsageError("regularization needs at least one candidate")
    if np.any(values == 0.0):
        raise UsageError("regularization candidates must be nonzero")

    order = np.argsort(-np.abs(values), kind="stable")
    mags = np.abs(values)[order]
    n = mags.size
    energy_prefix = np.concatenate(([0.0], np.cumsum(mags * mags)))

    best_energy = -1.0
    best_start = 0
    best_stop = 0
    stop = 0
    for start in range(n):
        if stop < start + 1:
            stop = start + 1
        while stop < n and mags[start] <= 2.0 * mags[stop]:
            stop += 1
        energy = float(energy_prefix[stop] - energy_prefix[start])
        better = energy > best_energy
        tied = energy == best_energy and order[start] < order[best_start]
        if better or tied:
            best_energy = energy
            best_start = start
            best_stop = stop
    return SupportSet.from_iterable(order[best_start:best_stop])


def romp(
    op,
    u,
    s: int,
    *,
    ls_tol: float = DEFAULT_LS_TOL,
    ls_max_iter: int = DEFAULT_LS_MAX_ITER,
    ls_method: str = "cg",
) -> RecoveryResult:
    """Regularized OMP: commit a comparable-magnitude batch per iteration.

    Each round takes the ``s`` largest nonzero proxy coordinates outside
    the current support, regularizes them down to the best window whose
    magnitudes are within a factor of two of each other, commits the
    whole window, and refits.  Runs at most ``s`` rounds, stopping early
    once the support holds ``2s`` coordinates, so the final support
    never exceeds ``3s`` entries.
    """
    u = _check_measurement(op, u)
    if s < 1:
        raise UsageError(f"sparsity must be at least 1, got {s}")
    if s > op.m:
        raise UsageError(f"sparsity {s} exceeds measurement count {op.m}")

    start_count = op.matvec_count
    support = np.empty(0, dtype=np.int64)
    estimate = np.zeros(op.N)
    residual = u.copy()
    residual_norms = [float(np.linalg.norm(residual))]
    iterates: List[dict] = []
    halted: Optional[HaltReason] = None

    for iteration in range(1, s + 1):
        if support.size >= 2 * s:
            halted = HaltReason.SPARSITY_REACHED
            break
        proxy = op.adjoint(residual)
        if support.size:
            proxy[support] = 0.0
        nonzero = int(np.count_nonzero(proxy))
        if nonzero == 0:
            halted = HaltReason.PROXY_ZERO
            break
        candidates = largest_indices(proxy, min(s, nonzero))
        candidates = candidates[proxy[candidates] != 0.0]
        window = romp_regularize(proxy[candidates])
        committed = np.sort(candidates[window.indices])
        if support.size + committed.size > op.m:
            halted = HaltReason.SUPPORT_CAP
            break
        support = np.union1d(support, committed).astype(np.int64)
        solution = _refit(
            op, support, u,
            tol=ls_tol, max_iter=ls_max_iter, method=ls_method,
            stage=f"romp iteration {iteration}",
        )
        estimate = embed(solution.coeffs, support, op.N)
        residual = u - op.forward_support(support, solution.coeffs)
        norm = float(np.linalg.norm(residual))
        residual_norms.append(norm)
        iterates.append(
            {
                "iteration": iteration,
                "candidates": candidates.tolist(),
                "candidate_values": proxy[candidates].tolist(),
                "committed": committed.tolist(),
                "committed_values": proxy[committed].tolist(),
                "support_size": int(support.size),
                "residual_norm": norm,
                "ls_iterations": solution.iterations,
            }
        )
        if norm == 0.0:
            halted = HaltReason.RESIDUAL_SMALL
            break
    if halted is None:
        if support.size >= 2 * s:
            halted = HaltReason.SPARSITY_REACHED
        else:
            halted = HaltReason.MAX_ITERATIONS

    return RecoveryResult(
        estimate=estimate,
        support=SupportSet(support),
        iterations=len(iterates),
        residual_norms=residual_norms,
        matvec_count=op.matvec_count - start_count,
        halted_by=halted,
        iterates=iterates,
    )


def cosamp(
    op,
    u,
    s: int,
    *,
    eta: float = 0.0,
    max_iter: int = DEFAULT_COSAMP_MAX_ITER,
    ls_tol: float = DEFAULT_LS_TOL,
    ls_max_iter: int = DEFAULT_LS_MAX_ITER,
    ls_method: str = "cg",
) -> RecoveryResult:
    """Compressive sampling matching pursuit with pruning.

    Each iteration merges the ``2s`` largest proxy coordinates with the
    current estimate's support, solves least squares on the merged set,
    prunes back to the ``s`` largest coefficients, and updates the
    residual.  Halts when the residual norm reaches ``eta``, when the
    support repeats without meaningful residual progress, or after
    ``max_iter`` iterations.
    """
    u = _check_measurement(op, u)
    if s < 1:
        raise UsageError(f"sparsity must be at least 1, got {s}")
    if 3 * s > op.m:
        raise UsageError(
            f"need 3*s <= m for the merged support to stay determined; "
            f"got s={s}, m={op.m}"
        )
    if eta < 0.0:
        raise UsageError("residual target eta must be non-negative")
    if max_iter < 1:
        raise UsageError("max_iter must be at least 1")

    start_count = op.matvec_count
    estimate = np.zeros(op.N)
    support = np.empty(0, dtype=np.int64)
    residual = u.copy()
    norm = float(np.linalg.norm(residual))
    residual_norms = [norm]
    iterates: List[dict] = []
    halted: Optional[HaltReason] = None

    if norm <= eta:
        halted = HaltReason.RESIDUAL_SMALL

    iteration = 0
    while halted is None and iteration < max_iter:
        iteration += 1
        proxy = op.adjoint(residual)
        picks = largest_indices(proxy, 2 * s)
        picks = picks[proxy[picks] != 0.0]
        merged = np.union1d(picks, support).astype(np.int64)
        if merged.size == 0:
            halted = HaltReason.PROXY_ZERO
            break
        solution = _refit(
            op, merged, u,
            tol=ls_tol, max_iter=ls_max_iter, method=ls_method,
            stage=f"cosamp iteration {iteration}",
        )
        keep = largest_indices(solution.coeffs, s)
        keep = keep[solution.coeffs[keep] != 0.0]
        new_support = np.sort(merged[keep])
        estimate = embed(solution.coeffs[keep], new_support, op.N)
        if new_support.size:
            residual = u - op.forward_support(new_support, estimate[new_support])
        else:
            residual = u.copy()
        previous_norm = norm
        norm = float(np.linalg.norm(residual))
        residual_norms.append(norm)
        iterates.append(
            {
                "iteration": iteration,
                "proxy_picks": picks.tolist(),
                "merged": merged.tolist(),
                "merged_size": int(merged.size),
                "merged_coeffs": solution.coeffs.tolist(),
                "support": new_support.tolist(),
                "residual_norm": norm,
                "ls_iterations": solution.iterations,
            }
        )
        if norm <= eta:
            halted = HaltReason.RESIDUAL_SMALL
        elif (
            new_support.size == support.size
            and np.array_equal(new_support, support)
            and previous_norm - norm < STALL_RELATIVE_DECREASE * previous_norm
        ):
            halted = HaltReason.SUPPORT_STALL
        support = new_support
    if halted is None:
        halted = HaltReason.MAX_ITERATIONS

    return RecoveryResult(
        estimate=estimate,
        support=SupportSet(support),
        iterations=len(iterates),
        residual_norms=residual_norms,
        matvec_count=op.matvec_count - start_count,
        halted_by=halted,
        iterates=iterates,
    )
