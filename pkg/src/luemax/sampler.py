"""Monte-Carlo ground truth for extreme-eigenvalue laws.

This module samples the largest eigenvalue of the two matrix ensembles the
analytic side of the package describes, using sparse tridiagonal random
models whose eigenvalue joint density coincides with the unitary-ensemble
(beta = 2) density for the corresponding weight:

* ``LaguerreBeta2`` — weight ``x**alpha * exp(-x)`` on ``(0, inf)``.  The
  model is ``T = B B^T`` where ``B`` is lower bidiagonal with independent
  entries ``B[i, i]**2 ~ Gamma(alpha + n - i)`` and
  ``B[i+1, i]**2 ~ Gamma(n - 1 - i)`` (unit scale).  This is the standard
  bidiagonalization of an ``n x (n + alpha)`` complex Gaussian matrix
  ``X`` with ``T ~ X X*``; for real non-integer ``alpha > -1`` the Gamma
  shapes interpolate the construction and the eigenvalue density is the
  analytic continuation of the Wishart one.

* ``GaussianBeta2`` — weight ``exp(-x**2)`` on the real line.  The model is
  symmetric tridiagonal with diagonal entries ``N(0, 1/2)`` and off-diagonal
  entries ``chi_{2(n-1-i)} / 2``.

Only the largest eigenvalue is ever computed: a Sturm-sequence bisection
counts eigenvalues below a shift via the LDL^T recurrence, so storage and
work per sample are O(n) and no dense eigensolver is involved.

Randomness is counter-based (``numpy.random.Philox``).  Each logical stream
``s`` owns the generator keyed by ``(seed, s)``; every sample consumes a
fixed number of uniform deviates (one per matrix entry, mapped through the
exact inverse CDF of the entry's law), so the value of draw ``index``
within stream ``s`` depends only on ``(seed, stream, index)`` — not on the
batch size.  Growing ``N`` at a fixed stream count therefore extends each
stream's sample list without changing earlier entries; changing the stream
count reassigns quotas (per-stream sequences are unchanged, the merged set
differs).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .context import ComputationAlarm

__all__ = [
    "TridiagonalModel",
    "ECDF",
    "lue_model",
    "gue_model",
    "sample_lue_max",
    "sample_gue_max",
    "ks_statistic",
    "kolmogorov_survival",
    "write_samples_csv",
    "summary_dict",
    "write_summary_json",
]

_UINT64_MASK = (1 << 64) - 1

#: Absolute bisection tolerance for the extreme eigenvalue.
EIGEN_TOL = 1.0e-12


# ---------------------------------------------------------------------------
# Model descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TridiagonalModel:
    """Sparse random-matrix model with the beta = 2 eigenvalue law.

    ``diag_params`` / ``offdiag_params`` record the generator parameters in
    model order:

    * ``kind == "LaguerreBeta2"``: Gamma shape of the squared bidiagonal
      entry — ``diag_params[i]`` for ``B[i, i]**2`` and ``offdiag_params[i]``
      for ``B[i+1, i]**2`` (unit scale throughout).
    * ``kind == "GaussianBeta2"``: ``diag_params[i]`` is the standard
      deviation of the normal diagonal entry and ``offdiag_params[i]`` the
      chi degree-of-freedom count ``2 (n - 1 - i)`` of ``2 T[i, i+1]``.

    Invariant (not re-derivable from the fields, asserted by the Monte-Carlo
    test battery): the eigenvalue joint density of the materialized matrix
    equals ``prod_{i<j} (x_i - x_j)**2 * prod_i w(x_i)`` with the weight
    named above.
    """

    kind: str
    n: int
    alpha: float
    diag_params: Tuple[float, ...]
    offdiag_params: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("LaguerreBeta2", "GaussianBeta2"):
            raise ValueError(
                "kind must be 'LaguerreBeta2' or 'GaussianBeta2', got %r" % (self.kind,)
            )
        if self.n < 1:
            raise ValueError("matrix order n must be >= 1")
        if len(self.diag_params) != self.n or len(self.offdiag_params) != self.n - 1:
            raise ValueError("generator parameter lists must have lengths n and n - 1")


def lue_model(n: int, alpha: float) -> TridiagonalModel:
    """Bidiagonal model for the weight ``x**alpha * exp(-x)``.

    Requires ``n >= 1`` and ``alpha > -1`` (the nominal domain used by the
    analytic modules is ``alpha >= 0``; every Gamma shape stays positive for
    any real ``alpha > -1``).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = float(alpha)
    if not alpha > -1.0:
        raise ValueError("alpha must exceed -1 for the Gamma shapes to be positive")
    diag = tuple(alpha + n - i for i in range(n))
    off = tuple(float(n - 1 - i) for i in range(n - 1))
    return TridiagonalModel("LaguerreBeta2", n, alpha, diag, off)


def gue_model(n: int) -> TridiagonalModel:
    """Tridiagonal model for the weight ``exp(-x**2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    diag = tuple(math.sqrt(0.5) for _ in range(n))
    off = tuple(float(2 * (n - 1 - i)) for i in range(n - 1))
    return TridiagonalModel("GaussianBeta2", n, 0.0, diag, off)


# ---------------------------------------------------------------------------
# Empirical CDF
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ECDF:
    """Right-continuous empirical distribution function.

    ``samples`` is stored sorted ascending; ``value`` returns
    ``#{samples <= t} / N`` which is right-continuous with values in
    ``[0, 1]``.  Merging two ECDFs concatenates the sample multisets, so the
    merge is associative and commutative.
    """

    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("ECDF needs a one-dimensional, non-empty sample array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ECDF samples must be finite")
        if np.any(np.diff(arr) < 0):
            arr = np.sort(arr)
        object.__setattr__(self, "samples", arr)

    @property
    def N(self) -> int:
        return int(self.samples.size)

    def value(self, t):
        """Empirical CDF at ``t`` (scalar or array)."""
        counts = np.searchsorted(self.samples, t, side="right")
        return counts / self.N

    __call__ = value

    def merge(self, other: "ECDF") -> "ECDF":
        return ECDF(np.concatenate([self.samples, other.samples]))

    def moments(self) -> Dict[str, float]:
        """First sample moments: mean, population variance, skewness."""
        x = self.samples
        mean = float(np.mean(x))
        centred = x - mean
        m2 = float(np.mean(centred**2))
        m3 = float(np.mean(centred**3))
        skew = m3 / m2**1.5 if m2 > 0 else 0.0
        return {"mean": mean, "variance": m2, "skewness": skew}


# ---------------------------------------------------------------------------
# Sampling machinery
# ---------------------------------------------------------------------------


def _stream_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream)."""
    key = np.array([seed & _UINT64_MASK, stream & _UINT64_MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _materialize(
    model: TridiagonalModel, rng: np.random.Generator, count: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` matrices; return (diagonal, squared off-diagonal).

    Each sample consumes exactly ``2 n - 1`` uniform deviates — one per
    matrix entry, in a fixed row-major layout — which are then pushed
    through the exact inverse CDF of the entry's law (``gammaincinv`` for
    Gamma-distributed squares, ``ndtri`` for normal entries).  Fixed
    per-sample consumption is what makes draw ``index`` within a stream
    independent of the batch size, so the (seed, stream, index) contract
    holds exactly.
    """
    from scipy import special  # deferred: keeps import cost off the analytic path

    n = model.n
    width = 2 * n - 1
    U = rng.random(size=(count, width))
    if model.kind == "LaguerreBeta2":
        dsq = np.empty((count, n))
        for j in range(n):
            dsq[:, j] = special.gammaincinv(model.diag_params[j], U[:, j])
        diag = dsq.copy()
        if n > 1:
            osq = np.empty((count, n - 1))
            for j in range(n - 1):
                osq[:, j] = special.gammaincinv(model.offdiag_params[j], U[:, n + j])
            diag[:, 1:] += osq
            off2 = dsq[:, : n - 1] * osq
        else:
            off2 = np.zeros((count, 0))
        return diag, off2
    # GaussianBeta2: diagonal N(0, sigma); off-diagonal chi_{2k}/2, whose
    # square is chi2_{2k}/4 = Gamma(shape=k, scale=1/2).
    sigma = np.asarray(model.diag_params, dtype=float)
    diag = special.ndtri(np.clip(U[:, :n], 1e-300, None)) * sigma
    if n > 1:
        off2 = np.empty((count, n - 1))
        for j in range(n - 1):
            k = model.offdiag_params[j] / 2.0
            off2[:, j] = 0.5 * special.gammaincinv(k, U[:, n + j])
    else:
        off2 = np.zeros((count, 0))
    return diag, off2


def _count_below(diag: np.ndarray, off2: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below ``x`` for each matrix in the batch.

    Sturm count via the LDL^T recurrence ``q_0 = d_0 - x``,
    ``q_k = d_k - x - off2_{k-1} / q_{k-1}``: the eigenvalue count below
    ``x`` equals the number of negative ``q_k``.
    """
    n = diag.shape[1]
    tiny = np.finfo(float).tiny
    q = diag[:, 0] - x
    q = np.where(q == 0.0, -tiny, q)
    count = (q < 0).astype(np.int64)
    for k in range(1, n):
        q = diag[:, k] - x - off2[:, k - 1] / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0
    return count


def _largest_eigenvalue(
    diag: np.ndarray,
    off2: np.ndarray,
    tol: float = EIGEN_TOL,
    max_iter: int = 256,
) -> np.ndarray:
    """Largest eigenvalue of each tridiagonal matrix via Sturm bisection.

    Converges every entry of the batch to absolute width ``tol``; bisection
    inside floating-point Gershgorin brackets.  Raises
    ``ComputationAlarm("nonconvergence")`` only if the interval neither
    reaches ``tol`` nor becomes unsplittable (ULP-limited) within
    ``max_iter`` rounds.
    """
    count, n = diag.shape
    if n == 1:
        return diag[:, 0].copy()
    absoff = np.sqrt(off2)
    radius = np.zeros((count, n))
    radius[:, : n - 1] += absoff
    radius[:, 1:] += absoff
    ub = np.max(diag + radius, axis=1)
    lb = np.min(diag - radius, axis=1)
    for _ in range(max_iter):
        gap = ub - lb
        if not np.any(gap > tol):
            break
        mid = 0.5 * (lb + ub)
        # ULP-limited intervals cannot be split further; freeze them.
        stuck = (mid <= lb) | (mid >= ub)
        below = _count_below(diag, off2, mid)
        all_below = below >= n
        new_ub = np.where(all_below, mid, ub)
        new_lb = np.where(all_below, lb, mid)
        ub = np.where(stuck, ub, new_ub)
        lb = np.where(stuck, lb, new_lb)
        if np.all(stuck | (ub - lb <= tol)):
            break
    else:
        gap = ub - lb
        mid = 0.5 * (lb + ub)
        stuck = (mid <= lb) | (mid >= ub)
        if np.any((gap > tol) & ~stuck):
            worst = float(np.max(gap))
            raise ComputationAlarm(
                "nonconvergence",
                "Sturm bisection failed to reach the absolute tolerance",
                tolerance=tol,
                worst_gap=worst,
            )
    return 0.5 * (lb + ub)


def _quotas(N: int, streams: int) -> Sequence[int]:
    base, extra = divmod(N, streams)
    return [base + (1 if s < extra else 0) for s in range(streams)]


def _sample_max(
    model: TridiagonalModel,
    N: int,
    seed: int,
    streams: int,
    threads: int,
) -> np.ndarray:
    if N < 1000:
        raise ValueError("sample size N must be at least 1000")
    if streams < 1 or threads < 1:
        raise ValueError("streams and threads must be >= 1")
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")

    def run_stream(s: int, quota: int) -> np.ndarray:
        if quota == 0:
            return np.zeros(0)
        rng = _stream_generator(seed, s)
        diag, off2 = _materialize(model, rng, quota)
        return _largest_eigenvalue(diag, off2)

    quotas = _quotas(N, streams)
    if threads > 1 and streams > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_stream, range(streams), quotas))
    else:
        parts = [run_stream(s, q) for s, q in enumerate(quotas)]
    return np.sort(np.concatenate(parts))


def sample_lue_max(
    n: int,
    alpha: float,
    N: int,
    seed: int,
    *,
    streams: int = 1,
    threads: int = 1,
) -> ECDF:
    """``N`` independent draws of the largest eigenvalue, weight ``x**alpha e^-x``.

    Returns the empirical CDF of the draws.  Reproducible: the result is a
    deterministic function of ``(n, alpha, N, seed, streams)``.
    """
    model = lue_model(n, alpha)
    return ECDF(_sample_max(model, N, seed, streams, threads))


def sample_gue_max(
    n: int,
    N: int,
    seed: int,
    *,
    streams: int = 1,
    threads: int = 1,
) -> ECDF:
    """``N`` independent draws of the largest eigenvalue, weight ``e^{-x^2}``."""
    model = gue_model(n)
    return ECDF(_sample_max(model, N, seed, streams, threads))


# ---------------------------------------------------------------------------
# Goodness of fit
# ---------------------------------------------------------------------------


def _eval_cdf(cdf_fn: Callable, x: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(cdf_fn(x), dtype=float)
        if values.shape != x.shape:
            raise TypeError
    except Exception:
        values = np.asarray([float(cdf_fn(float(v))) for v in x])
    return values


def ks_statistic(ecdf: ECDF, cdf_fn: Callable) -> float:
    """Kolmogorov–Smirnov sup-distance between ``ecdf`` and a model CDF.

    ``cdf_fn`` must be a (weakly) monotone CDF; it may be scalar or
    vectorized.  Uses the order-statistic formula
    ``D = max_i max(i/N - F(x_(i)), F(x_(i)) - (i-1)/N)``.
    """
    x = ecdf.samples
    F = _eval_cdf(cdf_fn, x)
    if np.any(np.diff(F) < -1e-12):
        raise ValueError("cdf_fn is not monotone on the sample points")
    N = ecdf.N
    i = np.arange(1, N + 1)
    d_plus = np.max(i / N - F)
    d_minus = np.max(F - (i - 1) / N)
    return float(max(d_plus, d_minus, 0.0))


def kolmogorov_survival(x: float) -> float:
    """Asymptotic Kolmogorov survival function ``P(sup |B| > x)``.

    ``Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)``; used to turn
    ``sqrt(N) * D`` into an approximate p-value.
    """
    if x <= 0.0:
        return 1.0
    if x < 0.2:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * x * x)
        total += term
        if abs(term) < 1e-18:
            break
    return min(1.0, max(0.0, 2.0 * total))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def write_samples_csv(ecdf: ECDF, path: str) -> None:
    """Dump the sorted samples, one decimal value per line (binary-free)."""
    with open(path, "w", encoding="ascii") as handle:
        for v in ecdf.samples:
            handle.write(f"{v:.17e}\n")


def summary_dict(
    ecdf: ECDF,
    *,
    seed: int,
    model: Optional[TridiagonalModel] = None,
    ks: Optional[float] = None,
    reference: Optional[str] = None,
) -> Dict:
    """JSON-ready summary: sample size, seed, moments, optional KS result."""
    out: Dict = {
        "N": ecdf.N,
        "seed": int(seed),
        "moments": ecdf.moments(),
    }
    if model is not None:
        out["model"] = {"kind": model.kind, "n": model.n, "alpha": model.alpha}
    if ks is not None:
        out["ks"] = {"statistic": float(ks), "reference": reference or "unspecified"}
    return out


def write_summary_json(path: str, summary: Dict) -> None:
    with open(path, "w", encoding="ascii") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
