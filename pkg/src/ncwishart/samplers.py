"""Monte Carlo machinery: Gaussian-sum draws, importance weights, rank counts.

For integer shape n the law NCW(n, w, sigma) is realized exactly as
Y_1 Y_1^T + ... + Y_n Y_n^T with independent Gaussian columns Y_i of
covariance sigma whose means satisfy sum_i m_i m_i^T = 2 w (the factor 2
matches the Laplace-transform parametrization used across the package, under
which E[X] = n sigma + 2 w).  The canonical measures m(n, k, d) are not
probability laws, but integrals against them are estimated by reweighting
NCW(n, 2 I(k,d), I_d) draws with the positive density ratio

    2^(dn/2) * e^(2k) * e^(tr x / 2),

and the rank-(d-1) singular component of m(d-1, d, d) by pushing weighted
m(d-1, d-1, d-1) draws through (x, u) |-> u [x 0; 0 0] u^T with u Haar
orthogonal.  The experiment functions at the bottom turn the support
statements behind the existence classifier into direct rank counts.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .measures import SHAPE_INTEGER_TOL, DomainError, MeasureSpec, NcwParams
from .symcore import default_rank_tol, haar_orthogonal_batch, sym_entries
from .zonal import McEstimate

__all__ = [
    "RANK_EVENT_TOL",
    "MeanDecomposition",
    "RankExceedsShapeError",
    "RankHistogram",
    "WeightedSample",
    "convolution_support_experiment",
    "decompose_w",
    "empirical_laplace",
    "m_measure_sample",
    "ncw_sample",
    "rank_additivity_experiment",
    "singular_r_sample",
    "subspace_intersection_experiment",
    "weighted_laplace_estimate",
]

# Eigenvalues and singular values below this (relative) threshold count as
# zero in the rank experiments.
RANK_EVENT_TOL = 1e-8

# sigma with condition number beyond this is treated as singular rather
# than regularized; positive definiteness of the scale is a model
# assumption, not something to patch numerically.
_MAX_SIGMA_CONDITION = 1e12


class RankExceedsShapeError(ValueError):
    """No n-term mean decomposition exists: rank(w) > n.

    This is the same obstruction the existence classifier reports for
    integer shapes below d - 1.
    """


@dataclasses.dataclass(frozen=True, eq=False)
class MeanDecomposition:
    """Rows m_1, ..., m_n with sum_i m_i m_i^T equal to the decomposed matrix."""

    means: np.ndarray

    def __post_init__(self) -> None:
        means = np.asarray(self.means, dtype=float)
        if means.ndim != 2:
            raise ValueError("means must be a 2-D array, one vector per row")
        if not np.all(np.isfinite(means)):
            raise ValueError("means must be finite")
        object.__setattr__(self, "means", means)

    @property
    def count(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def assemble(self) -> np.ndarray:
        """Reassemble sum_i m_i m_i^T for residual checks."""
        return self.means.T @ self.means


def decompose_w(w, n: int, tol: float | None = None) -> MeanDecomposition:
    """Split a positive semidefinite matrix into n rank-one mean terms.

    Eigendecomposition-based: the eigenpairs above the rank tolerance give
    m_i = sqrt(lambda_i) v_i in ascending eigenvalue order, padded with
    zero vectors to length n.  The signs of the m_i are those of the
    computed eigenvectors (the decomposition is only ever unique up to
    sign).

    Raises RankExceedsShapeError when rank(w) > n.
    """
    a = sym_entries(w, "w")
    d = a.shape[0]
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    vals, vecs = np.linalg.eigh(a)
    if tol is None:
        tol = default_rank_tol(vals, d)
    if vals[0] < -tol:
        raise DomainError("w must be positive semidefinite")
    keep = vals > tol
    rank = int(np.count_nonzero(keep))
    if rank > n:
        raise RankExceedsShapeError(f"rank(w) = {rank} exceeds n = {n}")
    means = np.zeros((n, d))
    means[:rank] = np.sqrt(vals[keep])[:, None] * vecs[:, keep].T
    return MeanDecomposition(means)


def _integer_shape(shape: float) -> int:
    n = int(round(float(shape)))
    if abs(float(shape) - n) > SHAPE_INTEGER_TOL or n < 1:
        raise DomainError(
            f"Gaussian-sum sampling needs a positive integer shape, got {shape}"
        )
    return n


def ncw_sample(params: NcwParams, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws from NCW(n, w, sigma) for integer shape n, stacked (n_draws, d, d).

    Each draw is sum_{i<=n} Y_i Y_i^T with independent Gaussian columns
    Y_i ~ N(m_i, sigma) and sum_i m_i m_i^T = 2 w.  Draws are exactly
    symmetric and positive semidefinite; rank is min(n, d) almost surely.
    Empirical means converge to n sigma + 2 w.
    """
    n = _integer_shape(params.shape)
    d = params.dim
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    means = decompose_w(2.0 * params.w, n).means
    sig_vals = np.linalg.eigvalsh(params.sigma)
    if sig_vals[0] <= 0.0 or sig_vals[-1] > _MAX_SIGMA_CONDITION * sig_vals[0]:
        raise DomainError("sigma is numerically singular (condition > 1e12)")
    chol = np.linalg.cholesky(params.sigma)
    y = rng.standard_normal((n_draws, n, d)) @ chol.T + means[None, :, :]
    draws = np.einsum("bni,bnj->bij", y, y)
    return 0.5 * (draws + np.transpose(draws, (0, 2, 1)))


@dataclasses.dataclass(frozen=True, eq=False)
class WeightedSample:
    """Stack of cone-valued draws with positive importance weights.

    Weights are held in log form; they stay finite there even when the
    density ratio overflows a double.  Expectations under the target
    measure are estimated by mean(weights * h(draws)).
    """

    draws: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self) -> None:
        draws = np.asarray(self.draws, dtype=float)
        log_w = np.asarray(self.log_weights, dtype=float)
        if draws.ndim != 3 or draws.shape[1] != draws.shape[2]:
            raise ValueError("draws must be stacked symmetric matrices (N, d, d)")
        if log_w.shape != (draws.shape[0],):
            raise ValueError("need exactly one log-weight per draw")
        if not np.all(np.isfinite(log_w)):
            raise ValueError("log-weights must be finite")
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "log_weights", log_w)

    def __len__(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def m_measure_sample(
    spec: MeasureSpec | Sequence, n_draws: int, rng: np.random.Generator
) -> WeightedSample:
    """Importance sample for m(n, k, d) with integer shape n and k <= n.

    Proposal law NCW(n, 2 I(k,d), I_d); per-draw log-weight

        (d n / 2) log 2 + 2 k + tr(x) / 2.

    k <= n is required by the construction.  n <= d is not: the identity
    behind the weight holds for any integer shape, and the existence
    classifier already guards the k > n cases that would fail it below
    d - 1.  Laplace-transform estimates from the weights are only
    finite-variance for s > I_d / 2; weighted_laplace_estimate enforces
    that domain.
    """
    spec = MeasureSpec.of(spec)
    n = _integer_shape(spec.shape)
    k, d = spec.rank, spec.dim
    if k > n:
        raise DomainError(f"rank index k = {k} exceeds the integer shape n = {n}")
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    params = NcwParams(float(n), 2.0 * spec.indicator())
    draws = ncw_sample(params, n_draws, rng)
    traces = np.trace(draws, axis1=1, axis2=2)
    log_w = 0.5 * d * n * math.log(2.0) + 2.0 * k + 0.5 * traces
    return WeightedSample(draws, log_w)


def singular_r_sample(d: int, n_draws: int, rng: np.random.Generator) -> WeightedSample:
    """Weighted draws from the rank-(d-1) component of m(d-1, d, d).

    Push-forward construction: x weighted-sampled from m(d-1, d-1, d-1) in
    dimension d - 1, u Haar orthogonal in dimension d, draw u [x 0; 0 0] u^T
    with the weight multiplied by (pi det x)^(1/2) / Gamma(d/2).  Every draw
    has rank exactly d - 1 almost surely.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    inner = m_measure_sample(MeasureSpec(float(d - 1), d - 1, d - 1), n_draws, rng)
    sign, logdet = np.linalg.slogdet(inner.draws)
    if np.any(sign <= 0):
        # x is full rank almost surely; a nonpositive determinant means a
        # degenerate draw slipped through, not a usable sample.
        raise RuntimeError("inner draw with nonpositive determinant")
    u = haar_orthogonal_batch(d, n_draws, rng)
    embedded = np.zeros((n_draws, d, d))
    embedded[:, : d - 1, : d - 1] = inner.draws
    draws = np.einsum("bij,bjk,blk->bil", u, embedded, u)
    draws = 0.5 * (draws + np.transpose(draws, (0, 2, 1)))
    log_w = (
        inner.log_weights
        + 0.5 * (math.log(math.pi) + logdet)
        - math.lgamma(d / 2.0)
    )
    return WeightedSample(draws, log_w)


def _trace_pairing(draws: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.einsum("bij,ji->b", draws, s)


def _mc_mean(values: np.ndarray) -> McEstimate:
    n = values.size
    if n < 2:
        raise ValueError("need at least two draws for a standard error")
    return McEstimate(
        float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)), n
    )


def empirical_laplace(draws: np.ndarray, s) -> McEstimate:
    """Plain Monte Carlo estimate of E[exp(-tr(s X))] over stacked draws."""
    s = sym_entries(s, "s")
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 3 or draws.shape[1:] != s.shape:
        raise ValueError("draws must be stacked (N, d, d) matching s")
    return _mc_mean(np.exp(-_trace_pairing(draws, s)))


def weighted_laplace_estimate(
    sample: WeightedSample, s, allow_unsafe: bool = False
) -> McEstimate:
    """Importance estimate of the integral of exp(-tr(s x)) against the target.

    The m(n, k, d) weights grow like e^(tr x / 2), so the estimator has
    finite variance only for s > I_d / 2; outside that domain the call is
    refused.  allow_unsafe=True skips the check for exploratory use (the
    returned standard error is then untrustworthy).
    """
    s = sym_entries(s, "s")
    if s.shape[0] != sample.dim:
        raise ValueError("s dimension does not match the sample")
    if not allow_unsafe:
        gap = np.linalg.eigvalsh(s - 0.5 * np.eye(sample.dim))
        if gap[0] <= 0.0:
            raise DomainError(
                "weighted Laplace estimates need s > I/2; "
                "pass allow_unsafe=True to override"
            )
    vals = np.exp(sample.log_weights - _trace_pairing(sample.draws, s))
    return _mc_mean(vals)


# ---------------------------------------------------------------------------
# Rank-support experiments


@dataclasses.dataclass(frozen=True, eq=False)
class RankHistogram:
    """Tolerance-based rank counts with auditable spectra.

    quantiles holds the [min, 25%, 50%, 75%, max] of each eigenvalue
    position (ascending) across trials, so a borderline rank call can be
    checked against the actual spectral gap rather than trusted blindly.
    """

    counts: dict[int, int]
    quantiles: np.ndarray
    tol: float

    @property
    def trials(self) -> int:
        return sum(self.counts.values())

    def off_target(self, rank: int) -> int:
        """Number of trials whose rank differs from the expected one."""
        return sum(c for r, c in self.counts.items() if r != rank)


def _rank_histogram(draws: np.ndarray, tol: float) -> RankHistogram:
    eigs = np.linalg.eigvalsh(draws)
    thresh = tol * np.maximum(1.0, eigs[:, -1])[:, None]
    ranks = np.count_nonzero(eigs > thresh, axis=1)
    values, counts = np.unique(ranks, return_counts=True)
    quantiles = np.quantile(eigs, [0.0, 0.25, 0.5, 0.75, 1.0], axis=0)
    return RankHistogram(
        {int(r): int(c) for r, c in zip(values, counts)}, quantiles, tol
    )


def subspace_intersection_experiment(
    d: int,
    n: int,
    k: int,
    trials: int,
    rng: np.random.Generator,
    degenerate_control: bool = False,
    tol: float = RANK_EVENT_TOL,
) -> float:
    """Estimated probability that a Gaussian k-plane meets a fixed n-plane.

    F is the span of the first n coordinates; G is spanned by k independent
    standard Gaussian vectors.  A hit means dim(F + G) < n + k, detected by
    the smallest singular value of the stacked basis falling below tol
    (relative to the largest).  For k <= d - n the hit probability is 0.
    degenerate_control=True zeroes the Gaussian components outside F, which
    forces every trial to hit.
    """
    if not 1 <= n < d:
        raise ValueError("need 1 <= n < d")
    if not 1 <= k <= d - n:
        raise DomainError(f"k must satisfy 1 <= k <= d - n = {d - n}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    g = rng.standard_normal((trials, k, d))
    if degenerate_control:
        g[:, :, n:] = 0.0
    stacked = np.concatenate(
        [np.broadcast_to(np.eye(d)[:n], (trials, n, d)), g], axis=1
    )
    svals = np.linalg.svd(stacked, compute_uv=False)
    cutoff = tol * np.maximum(1.0, svals[:, 0])
    hits = int(np.count_nonzero(svals[:, n + k - 1] <= cutoff))
    return hits / trials


def _closed_cone_entries(m, name: str) -> np.ndarray:
    a = sym_entries(m, name)
    vals = np.linalg.eigvalsh(a)
    if vals[0] < -default_rank_tol(vals, a.shape[0]):
        raise DomainError(f"{name} must be positive semidefinite")
    return a


def rank_additivity_experiment(
    x0,
    y0,
    trials: int,
    rng: np.random.Generator,
    tol: float = RANK_EVENT_TOL,
) -> RankHistogram:
    """Rank histogram of x0 + u y0 u^T over Haar-random orthogonal u.

    For x0 of rank a and y0 of rank b in the closed cone, all mass should
    land on min(a + b, d).
    """
    a = _closed_cone_entries(x0, "x0")
    b = _closed_cone_entries(y0, "y0")
    d = a.shape[0]
    if b.shape[0] != d:
        raise ValueError("x0 and y0 dimensions differ")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    u = haar_orthogonal_batch(d, trials, rng)
    rotated = np.einsum("bij,jk,blk->bil", u, b, u)
    sums = a[None, :, :] + 0.5 * (rotated + rotated.transpose(0, 2, 1))
    return _rank_histogram(sums, tol)


def convolution_support_experiment(
    spec_a: MeasureSpec | Sequence,
    b: int,
    trials: int,
    rng: np.random.Generator,
    tol: float = RANK_EVENT_TOL,
) -> RankHistogram:
    """Rank histogram of X + Z with X drawn for m(spec_a), Z central of shape b.

    X uses the m(n, k, d) proposal draws; their importance weights are
    strictly positive, so the rank support of the weighted measure equals
    that of the proposal and unweighted counts suffice here.  Z is a
    central Wishart draw of integer shape b (b = 0 contributes the zero
    matrix).  All mass should land on min(a + b, d).
    """
    spec_a = MeasureSpec.of(spec_a)
    if int(b) != b or b < 0:
        raise ValueError("b must be a nonnegative integer")
    b = int(b)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = spec_a.dim
    total = m_measure_sample(spec_a, trials, rng).draws
    if b > 0:
        total = total + ncw_sample(
            NcwParams(float(b), np.zeros((d, d))), trials, rng
        )
    return _rank_histogram(total, tol)
