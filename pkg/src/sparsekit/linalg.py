"""Dense vector kernels and the restricted least-squares solve shared by
all pursuit algorithms.

The least-squares solve is matrix-free: it only touches the measurement
operator through ``forward_support`` / ``adjoint_support``, so its cost is
a fixed number of operator applications per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverFailure, UsageError

DEFAULT_LS_TOL = 1e-10
DEFAULT_LS_MAX_ITER = 100

_POWER_ITER_SEED_TAG = 0x524943
_POWER_ITERATIONS = 30


def as_vector(x, length=None, name="vector") -> np.ndarray:
    """Validate and return a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise UsageError(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise UsageError(f"{name} must have length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise UsageError(f"{name} contains NaN or Inf")
    return v


def dot(a, b) -> float:
    """Inner product of two equal-length vectors."""
    va = as_vector(a, name="a")
    vb = as_vector(b, len(va), name="b")
    return float(np.dot(va, vb))


def largest_indices(values, k: int) -> np.ndarray:
    """Positions of the ``k`` largest-magnitude entries, ascending.

    Ties are broken in favour of the lowest position (stable sort on
    descending magnitude), so the selection is deterministic.
    """
    v = np.asarray(values, dtype=np.float64)
    if k < 0:
        raise UsageError("k must be non-negative")
    k = min(k, v.shape[0])
    order = np.argsort(-np.abs(v), kind="stable")[:k]
    out = np.asarray(order, dtype=np.int64)
    out.sort()
    return out


def embed(coeffs, indices, length: int) -> np.ndarray:
    """Scatter ``coeffs`` onto positions ``indices`` of a zero length-``length`` vector."""
    out = np.zeros(length)
    out[np.asarray(indices, dtype=np.int64)] = coeffs
    return out


@dataclass(frozen=True)
class SupportSet:
    """Ordered set of column indices, strictly increasing, no duplicates."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).copy()
        if idx.ndim != 1:
            raise UsageError("support indices must be 1-D")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0):
            raise UsageError("support indices must be strictly increasing and non-negative")
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_iterable(cls, it) -> "SupportSet":
        """Build from any iterable; duplicates are rejected."""
        idx = np.asarray(sorted(int(i) for i in it), dtype=np.int64)
        return cls(idx)

    @classmethod
    def empty(cls) -> "SupportSet":
        return cls(np.empty(0, dtype=np.int64))

    def union(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(np.union1d(self.indices, other.indices))

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self):
        return iter(self.indices.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SupportSet):
            return NotImplemented
        return np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash(self.indices.tobytes())


@dataclass(frozen=True)
class RestrictedSystem:
    """Least-squares data: minimize ||rhs - Phi_T w|| over w.

    ``operator`` is anything exposing ``m``, ``N``, ``forward_support`` and
    ``adjoint_support`` (see ``sensing.SenseOperator``).
    """

    operator: object
    support: SupportSet
    rhs: np.ndarray

    def __post_init__(self):
        if len(self.support) > self.operator.m:
            raise UsageError(
                f"support size {len(self.support)} exceeds measurement count "
                f"{self.operator.m}: restricted system is underdetermined"
            )
        if len(self.support) and int(self.support.indices[-1]) >= self.operator.N:
            raise UsageError("support index out of range")
        object.__setattr__(
            self, "rhs", as_vector(self.rhs, self.operator.m, name="rhs")
        )


@dataclass
class LsSolution:
    """Solution of a restricted least-squares solve."""

    coeffs: np.ndarray
    iterations: int
    converged: bool
    stop_reason: str  # "converged" or "max_iterations"
    normal_residual: float
    applications: int = field(default=0)  # operator applications consumed


def restricted_least_squares(
    system: RestrictedSystem,
    tol: float = DEFAULT_LS_TOL,
    max_iter: int = DEFAULT_LS_MAX_ITER,
    method: str = "cg",
) -> LsSolution:
    """Minimize ``||rhs - Phi_T w||_2`` by iterating on the normal equations.

    Parameters
    ----------
    system : RestrictedSystem
        Operator, support ``T`` and right-hand side.
    tol : float
        Relative stopping tolerance: iterate until the normal-equation
        residual satisfies ``||Phi_T^*(rhs - Phi_T w)|| <= tol * ||Phi_T^* rhs||``.
    max_iter : int
        Iteration cap; hitting it is reported, not raised.
    method : str
        ``"cg"`` (conjugate gradient on the normal equations, default) or
        ``"richardson"`` (fixed-step iteration with step ``2/(lmin+lmax)``
        estimated by power iteration).

    Returns
    -------
    LsSolution
        Coefficients over ``T`` plus which stopping condition fired.

    Raises
    ------
    UsageError
        Empty support, bad tolerance, or unknown method.
    SolverFailure
        The residual grew 10x above its running minimum (divergence),
        naming the offending iteration.
    """
    if len(system.support) == 0:
        raise UsageError("restricted least squares needs a non-empty support")
    if tol <= 0:
        raise UsageError("tol must be positive")
    if max_iter < 1:
        raise UsageError("max_iter must be at least 1")
    if method not in ("cg", "richardson"):
        raise UsageError(f"unknown method {method!r}")

    op = system.operator
    support = system.support.indices
    k = support.size
    applications = 0

    def gram_apply(w):
        nonlocal applications
        applications += 2
        return op.adjoint_support(support, op.forward_support(support, w))

    applications += 1
    target = op.adjoint_support(support, system.rhs)
    target_norm = float(np.linalg.norm(target))
    if target_norm == 0.0:
        return LsSolution(
            coeffs=np.zeros(k),
            iterations=0,
            converged=True,
            stop_reason="converged",
            normal_residual=0.0,
            applications=applications,
        )
    threshold = tol * target_norm

    if method == "cg":
        coeffs, iters, resid_norm = _cg_normal(gram_apply, target, threshold, max_iter)
    else:
        coeffs, iters, resid_norm = _richardson_normal(
            gram_apply, target, threshold, max_iter, k
        )

    converged = resid_norm <= threshold
    return LsSolution(
        coeffs=coeffs,
        iterations=iters,
        converged=converged,
        stop_reason="converged" if converged else "max_iterations",
        normal_residual=resid_norm,
        applications=applications,
    )


def _cg_normal(gram_apply, target, threshold, max_iter):
    k = target.size
    coeffs = np.zeros(k)
    resid = target.copy()
    direction = resid.copy()
    rho = float(np.dot(resid, resid))
    resid_norm = float(np.sqrt(rho))
    min_norm = resid_norm
    if resid_norm <= threshold:
        return coeffs, 0, resid_norm
    for it in range(1, max_iter + 1):
        gram_dir = gram_apply(direction)
        denom = float(np.dot(direction, gram_dir))
        if denom <= 0.0 or not np.isfinite(denom):
            raise SolverFailure(
                f"normal-equation CG hit a non-positive curvature at iteration {it}"
            )
        step = rho / denom
        coeffs += step * direction
        resid -= step * gram_dir
        rho_next = float(np.dot(resid, resid))
        resid_norm = float(np.sqrt(rho_next))
        if resid_norm <= threshold:
            return coeffs, it, resid_norm
        if resid_norm > 10.0 * min_norm:
            raise SolverFailure(
                f"normal-equation CG diverged at iteration {it}: residual "
                f"{resid_norm:.3e} grew 10x above its minimum {min_norm:.3e}"
            )
        min_norm = min(min_norm, resid_norm)
        direction = resid + (rho_next / rho) * direction
        rho = rho_next
    return coeffs, max_iter, resid_norm


def _richardson_normal(gram_apply, target, threshold, max_iter, k):
    from .rng import SplitMix64, derive_seed

    # Deterministic power-iteration start vector keyed on the support size.
    probe_rng = SplitMix64(derive_seed(_POWER_ITER_SEED_TAG, k))
    probe = probe_rng.normal(k)
    probe /= np.linalg.norm(probe)
    lam_max = 0.0
    for _ in range(_POWER_ITERATIONS):
        image = gram_apply(probe)
        lam_max = float(np.dot(probe, image))
        nrm = float(np.linalg.norm(image))
        if nrm == 0.0:
            break
        probe = image / nrm
    lam_hi = 1.05 * lam_max if lam_max > 0 else 1.0

    # lmin via power iteration on the reflected operator lam_hi*I - G.
    probe = probe_rng.normal(k)
    probe /= np.linalg.norm(probe)
    reflected = 0.0
    for _ in range(_POWER_ITERATIONS):
        image = lam_hi * probe - gram_apply(probe)
        reflected = float(np.dot(probe, image))
        nrm = float(np.linalg.norm(image))
        if nrm == 0.0:
            break
        probe = image / nrm
    lam_min = max(lam_hi - reflected, 0.0)
    step = 2.0 / (lam_min + lam_hi)

    coeffs = np.zeros(k)
    resid = target.copy()
    resid_norm = float(np.linalg.norm(resid))
    min_norm = resid_norm
    if resid_norm <= threshold:
        return coeffs, 0, resid_norm
    for it in range(1, max_iter + 1):
        coeffs += step * resid
        resid -= step * gram_apply(resid)
        resid_norm = float(np.linalg.norm(resid))
        if resid_norm <= threshold:
            return coeffs, it, resid_norm
        if resid_norm > 10.0 * min_norm:
            raise SolverFailure(
                f"Richardson iteration diverged at iteration {it}: residual "
                f"{resid_norm:.3e} grew 10x above its minimum {min_norm:.3e}"
            )
        min_norm = min(min_norm, resid_norm)
    return coeffs, max_iter, resid_norm
