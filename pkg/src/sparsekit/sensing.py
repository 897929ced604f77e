"""Measurement ensembles with forward/adjoint application and an
empirical restricted-isometry probe.

Three ensembles are provided, normalized so every column has unit
expected squared norm (``E||Phi x||^2 = ||x||^2`` for fixed ``x``):

* ``gaussian``   - i.i.d. entries, mean 0, variance ``1/m``.
* ``bernoulli``  - i.i.d. entries ``+-1/sqrt(m)`` equiprobable.
* ``partial_dct`` - ``m`` distinct rows of the orthonormal type-II DCT
  matrix, drawn uniformly without replacement and scaled by
  ``sqrt(N/m)``.  Application uses an O(N log N) fast transform.

Operators are deterministic functions of ``(ensemble, m, N, seed)`` and
serialize to a JSON descriptor of exactly those fields; entries are never
stored on disk, always regenerated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .errors import UsageError
from .linalg import as_vector
from .rng import SplitMix64


class Ensemble(enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    PARTIAL_DCT = "partial_dct"


def _coerce_ensemble(ensemble) -> Ensemble:
    if isinstance(ensemble, Ensemble):
        return ensemble
    try:
        return Ensemble(str(ensemble))
    except ValueError:
        valid = ", ".join(e.value for e in Ensemble)
        raise UsageError(f"unknown ensemble {ensemble!r} (expected one of: {valid})")


class SenseOperator:
    """An m x N linear measurement map with forward and adjoint application.

    ``matvec_count`` counts operator applications (forward, adjoint, and
    their support-restricted variants each count as one).  Recovery calls
    are single-threaded; when running trials concurrently, give each trial
    its own operator so the counter needs no locking.
    """

    def __init__(self, ensemble: Ensemble, m: int, N: int, seed: int):
        if m < 1 or m > N:
            raise UsageError(f"need 1 <= m <= N, got m={m}, N={N}")
        self.ensemble = ensemble
        self.m = int(m)
        self.N = int(N)
        self.seed = int(seed)
        self.matvec_count = 0

    # -- application ----------------------------------------------------

    def forward(self, x) -> np.ndarray:
        """Apply the operator: measurements of a length-N vector."""
        x = as_vector(x, self.N, name="x")
        self.matvec_count += 1
        return self._forward(x)

    def adjoint(self, v) -> np.ndarray:
        """Apply the transpose: signal proxy of a length-m vector."""
        v = as_vector(v, self.m, name="v")
        self.matvec_count += 1
        return self._adjoint(v)

    def forward_support(self, indices, coeffs) -> np.ndarray:
        """Apply the operator restricted to columns ``indices``."""
        self.matvec_count += 1
        return self._forward_support(np.asarray(indices, dtype=np.int64), np.asarray(coeffs, dtype=np.float64))

    def adjoint_support(self, indices, v) -> np.ndarray:
        """Rows ``indices`` of the adjoint applied to ``v``."""
        self.matvec_count += 1
        return self._adjoint_support(np.asarray(indices, dtype=np.int64), np.asarray(v, dtype=np.float64))

    # -- serialization ---------------------------------------------------

    def descriptor(self) -> dict:
        """JSON-ready descriptor; entries are regenerated on load."""
        return {
            "ensemble": self.ensemble.value,
            "m": self.m,
            "N": self.N,
            "seed": self.seed,
        }

    # -- hooks ------------------------------------------------------------

    def _forward(self, x):
        raise NotImplementedError

    def _adjoint(self, v):
        raise NotImplementedError

    def _forward_support(self, indices, coeffs):
        full = np.zeros(self.N)
        full[indices] = coeffs
        return self._forward(full)

    def _adjoint_support(self, indices, v):
        return self._adjoint(v)[indices]

    def dense_matrix(self) -> np.ndarray:
        """Materialize the full m x N matrix (testing and small probes)."""
        raise NotImplementedError


class _DenseEnsembleOperator(SenseOperator):
    """Gaussian / Bernoulli operator backed by an explicit entry matrix."""

    def __init__(self, ensemble, m, N, seed):
        super().__init__(ensemble, m, N, seed)
        rng = SplitMix64(seed)
        scale = 1.0 / math.sqrt(m)
        if ensemble is Ensemble.GAUSSIAN:
            entries = rng.normal(m * N)
        else:
            entries = rng.signs(m * N)
        # Row-major fill order is part of the determinism contract.
        self._matrix = (entries * scale).reshape(m, N)

    def _forward(self, x):
        return self._matrix @ x

    def _adjoint(self, v):
        return self._matrix.T @ v

    def _forward_support(self, indices, coeffs):
        return self._matrix[:, indices] @ coeffs

    def _adjoint_support(self, indices, v):
        return self._matrix[:, indices].T @ v

    def dense_matrix(self):
        return self._matrix.copy()


class _PartialDctOperator(SenseOperator):
    """Random rows of the orthonormal DCT-II, applied via fast transforms."""

    def __init__(self, m, N, seed):
        super().__init__(Ensemble.PARTIAL_DCT, m, N, seed)
        rng = SplitMix64(seed)
        self.rows = rng.choose_without_replacement(N, m)
        self._scale = math.sqrt(N / m)

    def _forward(self, x):
        return self._scale * fft.dct(x, type=2, norm="ortho")[self.rows]

    def _adjoint(self, v):
        padded = np.zeros(self.N)
        padded[self.rows] = v
        return self._scale * fft.idct(padded, type=2, norm="ortho")

    def dense_matrix(self):
        # Closed-form cosine entries, independent of the fft fast path.
        k = self.rows[:, None].astype(np.float64)
        n = np.arange(self.N)[None, :].astype(np.float64)
        mat = math.sqrt(2.0 / self.N) * np.cos(math.pi * k * (2.0 * n + 1.0) / (2.0 * self.N))
        mat[self.rows == 0, :] /= math.sqrt(2.0)
        return self._scale * mat


def make_operator(ensemble, m: int, N: int, seed: int) -> SenseOperator:
    """Build a measurement operator; same parameters give identical entries."""
    kind = _coerce_ensemble(ensemble)
    if kind is Ensemble.PARTIAL_DCT:
        return _PartialDctOperator(m, N, seed)
    return _DenseEnsembleOperator(kind, m, N, seed)


def operator_from_descriptor(descriptor: dict) -> SenseOperator:
    """Rebuild an operator from its JSON descriptor."""
    expected = {"ensemble", "m", "N", "seed"}
    unknown = set(descriptor) - expected
    if unknown:
        raise UsageError(f"unknown descriptor keys: {sorted(unknown)}")
    missing = expected - set(descriptor)
    if missing:
        raise UsageError(f"descriptor missing keys: {sorted(missing)}")
    return make_operator(
        descriptor["ensemble"],
        int(descriptor["m"]),
        int(descriptor["N"]),
        int(descriptor["seed"]),
    )


@dataclass
class RicEstimate:
    """Empirical lower bound on the restricted-isometry constant.

    ``delta_lower`` is witnessed: ``witness`` is the sampled n-sparse unit
    vector achieving it, and re-evaluating ``||Phi witness||`` reproduces
    ``delta_lower`` exactly.  This is a lower bound on the true constant,
    not a certificate; the definition uses un-squared norms
    ``(1 - d)||v|| <= ||Phi v|| <= (1 + d)||v||`` (many texts state the
    squared form instead).
    """

    n: int
    delta_lower: float
    trials: int
    seed: int
    witness: np.ndarray

    def reevaluate(self, op: SenseOperator) -> float:
        """Deviation of ``||Phi witness||`` from 1; equals ``delta_lower``."""
        r = float(np.linalg.norm(op.forward(self.witness)))
        return max(1.0 - r, r - 1.0)


def empirical_ric(op: SenseOperator, n: int, trials: int, seed: int) -> RicEstimate:
    """Probe the operator with random n-sparse unit vectors.

    Each trial draws a uniform size-n support and Gaussian coefficients,
    normalizes, and measures ``r = ||Phi v||``; the estimate is the max of
    ``max(1 - r, r - 1)`` over trials.
    """
    if n < 1:
        raise UsageError("sparsity n must be at least 1")
    if n > op.m:
        raise UsageError(
            f"n={n} exceeds m={op.m}: restricted isometry cannot hold at this sparsity"
        )
    if trials < 1:
        raise UsageError("trials must be at least 1")

    rng = SplitMix64(seed)
    best = -1.0
    witness = None
    for _ in range(trials):
        support = rng.choose_without_replacement(op.N, n)
        coeffs = rng.normal(n)
        norm = float(np.linalg.norm(coeffs))
        while norm == 0.0:  # probability ~2**-53 per draw
            coeffs = rng.normal(n)
            norm = float(np.linalg.norm(coeffs))
        probe = np.zeros(op.N)
        probe[support] = coeffs / norm
        r = float(np.linalg.norm(op.forward(probe)))
        deviation = max(1.0 - r, r - 1.0)
        if deviation > best:
            best = deviation
            witness = probe
    return RicEstimate(n=n, delta_lower=best, trials=trials, seed=seed, witness=witness)
