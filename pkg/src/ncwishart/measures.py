"""Existence, Laplace transforms, and densities of the matrix measure family.

Two families live here.  NCW(n, w, sigma) is the non-central Wishart law on
d x d symmetric matrices with shape n (any admissible positive real),
positive semidefinite non-centrality w, and positive definite scale sigma;
its Laplace transform at s is

    det(I + 2 sigma s)^(-n/2) * exp(-tr(2 s (I + 2 sigma s)^(-1) w)).

m(n, k, d) is the canonical cone measure of shape n and rank index k whose
Laplace transform on the open cone is

    (det s)^(-n/2) * exp(tr(s^(-1) I(k, d))),    I(k, d) = diag(0,...,0,1,...,1)

with k trailing ones.  Both exist exactly when the shape lies in the
half-integer ladder {1, ..., d-2} with rank at most the shape, or in the
continuous range [d-1, infinity).  The module provides the existence
classifier, both transforms, the reduction of NCW parameters to canonical
(k, q) form, the absolutely continuous densities (full-rank series and the
critical-shape boundary density f_d), the rank-(d-1) remainder transform,
the explicit d = 2 critical-shape formulas in cone-of-revolution
coordinates, and the derivative identities behind them.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import rgamma

from .symcore import ConePoint2, default_rank_tol, rank_psd, sym_entries
from .zonal import (
    Partition,
    c_kappa_identity,
    monomial_symmetric,
    multivariate_gamma,
    zonal_table,
)

__all__ = [
    "DomainError",
    "TruncationError",
    "TruncationMode",
    "TruncationPolicy",
    "VerdictReason",
    "ExistenceVerdict",
    "MeasureSpec",
    "NcwParams",
    "CanonicalReduction",
    "exists_m",
    "exists_ncw",
    "laplace_ncw",
    "laplace_m",
    "reduce_to_canonical",
    "density_m_fullrank",
    "density_fd",
    "lt_fd_series",
    "singular_r_laplace",
    "m122_laplace_cone",
    "m122_singular_density",
    "m122_ac_density",
    "m111_density",
    "FaaDiBrunoCheck",
    "faa_di_bruno_check",
]

# Shapes this close to an integer are treated as that integer when testing
# membership in the discrete ladder {1, ..., d-2}.
SHAPE_INTEGER_TOL = 1e-9


class DomainError(ValueError):
    """Evaluation point or parameter outside the mathematical domain."""


class TruncationError(RuntimeError):
    """Adaptive series failed to meet its tolerance within the weight cap."""

    def __init__(self, message: str, partial_value: float, max_weight: int, last_rel_change: float) -> None:
        super().__init__(message)
        self.partial_value = partial_value
        self.max_weight = max_weight
        self.last_rel_change = last_rel_change


class TruncationMode(enum.Enum):
    ADAPTIVE = "adaptive"
    FIXED = "fixed"


@dataclasses.dataclass(frozen=True)
class TruncationPolicy:
    """How far to sum a zonal series over partition weights.

    ADAPTIVE stops after two consecutive weight layers fall below rel_tol
    relative to the running total and raises TruncationError at max_weight
    otherwise; FIXED sums every layer through max_weight unconditionally.
    """

    mode: TruncationMode = TruncationMode.ADAPTIVE
    rel_tol: float = 1e-10
    max_weight: int = 64

    def __post_init__(self) -> None:
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.max_weight < 0:
            raise ValueError("max_weight must be >= 0")


def _sum_weight_layers(layer: Callable[[int], float], policy: TruncationPolicy, start: int = 0) -> float:
    total = 0.0
    small_run = 0
    last_rel = math.inf
    for w in range(start, policy.max_weight + 1):
        value = layer(w)
        total += value
        if policy.mode is TruncationMode.FIXED:
            continue
        if total == 0.0:
            # leading layers can vanish identically (gamma poles); convergence
            # counting starts once the series has any mass
            continue
        last_rel = abs(value) / abs(total)
        if last_rel <= policy.rel_tol:
            small_run += 1
            if small_run >= 2:
                return total
        else:
            small_run = 0
    if policy.mode is TruncationMode.FIXED:
        return total
    raise TruncationError(
        f"series not converged by weight {policy.max_weight} (last layer ratio {last_rel:.3e})",
        partial_value=total,
        max_weight=policy.max_weight,
        last_rel_change=last_rel,
    )


# ---------------------------------------------------------------------------
# Existence


class VerdictReason(enum.Enum):
    OK_CONTINUOUS_SHAPE = "ok_continuous_shape"
    OK_INTEGER_SHAPE = "ok_integer_shape"
    SHAPE_NOT_IN_LAMBDA = "shape_not_in_lambda"
    RANK_EXCEEDS_SHAPE = "rank_exceeds_shape"


@dataclasses.dataclass(frozen=True)
class ExistenceVerdict:
    """Outcome of the existence test with the clause that decided it."""

    exists: bool
    reason: VerdictReason
    clause: str
    shape: float
    rank: int
    dim: int

    def __bool__(self) -> bool:
        return self.exists


def exists_m(shape: float, rank: int, dim: int) -> ExistenceVerdict:
    """Does the measure with the given shape, rank index, and dimension exist?

    The admissible set: shape >= dim - 1 with any rank 0..dim, or shape a
    positive integer n <= dim - 2 (within SHAPE_INTEGER_TOL) with
    rank <= n.  Everything else is excluded.
    """
    shape = float(shape)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not (0 <= rank <= dim):
        raise ValueError(f"rank must be in 0..{dim}, got {rank}")
    if not math.isfinite(shape) or shape <= 0:
        return ExistenceVerdict(
            False, VerdictReason.SHAPE_NOT_IN_LAMBDA, f"shape {shape} is not positive", shape, rank, dim
        )
    if shape >= dim - 1 - SHAPE_INTEGER_TOL:
        return ExistenceVerdict(
            True,
            VerdictReason.OK_CONTINUOUS_SHAPE,
            f"shape {shape} >= d-1 = {dim - 1}: continuous range, any rank 0..{dim} admissible",
            shape,
            rank,
            dim,
        )
    nearest = round(shape)
    if abs(shape - nearest) <= SHAPE_INTEGER_TOL and 1 <= nearest <= dim - 2:
        if rank <= nearest:
            return ExistenceVerdict(
                True,
                VerdictReason.OK_INTEGER_SHAPE,
                f"shape = {nearest} is an integer in 1..d-2 = 1..{dim - 2} and rank {rank} <= {nearest}",
                shape,
                rank,
                dim,
            )
        return ExistenceVerdict(
            False,
            VerdictReason.RANK_EXCEEDS_SHAPE,
            f"shape = {nearest} is an integer in 1..d-2 but rank {rank} > {nearest}",
            shape,
            rank,
            dim,
        )
    return ExistenceVerdict(
        False,
        VerdictReason.SHAPE_NOT_IN_LAMBDA,
        f"shape {shape} is below d-1 = {dim - 1} and is not an integer in 1..{dim - 2}",
        shape,
        rank,
        dim,
    )


@dataclasses.dataclass(frozen=True)
class MeasureSpec:
    """Canonical measure parameters: shape n, rank index k, dimension d."""

    shape: float
    rank: int
    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (0 <= self.rank <= self.dim):
            raise ValueError(f"rank must be in 0..{self.dim}")
        if not (float(self.shape) > 0):
            raise ValueError("shape must be positive")

    @classmethod
    def of(cls, spec: "MeasureSpec | Sequence") -> "MeasureSpec":
        if isinstance(spec, MeasureSpec):
            return spec
        shape, rank, dim = spec
        return cls(float(shape), int(rank), int(dim))

    def indicator(self) -> np.ndarray:
        """I(k, d): zeros then k trailing ones on the diagonal."""
        return np.diag(np.concatenate([np.zeros(self.dim - self.rank), np.ones(self.rank)]))

    def existence(self) -> ExistenceVerdict:
        return exists_m(self.shape, self.rank, self.dim)


@dataclasses.dataclass(frozen=True, eq=False)
class NcwParams:
    """Non-central Wishart parameters (shape n, non-centrality w, scale sigma).

    w must be positive semidefinite and sigma positive definite; sigma
    defaults to the identity.  The mean of the law is n*sigma + 2*w.
    """

    shape: float
    w: np.ndarray
    sigma: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (float(self.shape) > 0):
            raise ValueError("shape must be positive")
        w = sym_entries(self.w, "w")
        d = w.shape[0]
        sigma = np.eye(d) if self.sigma is None else sym_entries(self.sigma, "sigma")
        if sigma.shape[0] != d:
            raise ValueError("w and sigma dimensions differ")
        w_eigs = np.linalg.eigvalsh(w)
        if w_eigs[0] < -default_rank_tol(w_eigs, d):
            raise ValueError("w must be positive semidefinite")
        sigma_eigs = np.linalg.eigvalsh(sigma)
        if sigma_eigs[0] <= default_rank_tol(sigma_eigs, d):
            raise ValueError("sigma must be positive definite")
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def mean(self) -> np.ndarray:
        return self.shape * self.sigma + 2.0 * self.w

    def existence(self, tol: float | None = None) -> ExistenceVerdict:
        return exists_ncw(self, tol)


def exists_ncw(params: NcwParams, tol: float | None = None) -> ExistenceVerdict:
    """Existence test for NCW(n, w, sigma): rank of w plays the rank index."""
    return exists_m(params.shape, rank_psd(params.w, tol), params.dim)


# ---------------------------------------------------------------------------
# Laplace transforms


def laplace_ncw(s, params: NcwParams) -> float:
    """Laplace transform of NCW(n, w, sigma) at the symmetric matrix s.

    Requires I + 2 sigma s to be positive definite (always true for s in
    the closed cone); raises DomainError otherwise.
    """
    s = sym_entries(s, "s")
    d = params.dim
    if s.shape[0] != d:
        raise ValueError("s has wrong dimension")
    sig_vals, sig_vecs = np.linalg.eigh(params.sigma)
    half = sig_vecs @ np.diag(np.sqrt(sig_vals)) @ sig_vecs.T
    b = np.eye(d) + 2.0 * half @ s @ half
    b_eigs = np.linalg.eigvalsh((b + b.T) / 2.0)
    if b_eigs[0] <= 0:
        raise DomainError("I + 2*sigma*s is not positive definite at this s")
    logdet = float(np.sum(np.log(b_eigs)))
    a = np.eye(d) + 2.0 * params.sigma @ s
    x = np.linalg.solve(a, params.w)
    trace_term = 2.0 * float(np.trace(s @ x))
    return math.exp(-(params.shape / 2.0) * logdet - trace_term)


def laplace_m(s, spec: MeasureSpec | Sequence) -> float:
    """Laplace transform of m(n, k, d) at a positive definite s.

    (det s)^(-n/2) * exp(sum of the k trailing diagonal entries of s^(-1)).
    """
    spec = MeasureSpec.of(spec)
    s = sym_entries(s, "s")
    d = spec.dim
    if s.shape[0] != d:
        raise ValueError(f"s must be {d}x{d}")
    eigs = np.linalg.eigvalsh(s)
    if eigs[0] <= 0:
        raise DomainError("s must be positive definite")
    logdet = float(np.sum(np.log(eigs)))
    inv = np.linalg.inv(s)
    trace_term = float(np.trace(inv[d - spec.rank :, d - spec.rank :])) if spec.rank else 0.0
    return math.exp(-(spec.shape / 2.0) * logdet + trace_term)


@dataclasses.dataclass(frozen=True, eq=False)
class CanonicalReduction:
    """Change of variable taking NCW parameters to canonical form.

    q satisfies q M q^T = I(k, d) for M = (1/2) sigma^(-1) w sigma^(-1),
    and the transform identity

        laplace_ncw(s) = laplace_m(q (s + b) q^T) / laplace_m(q b q^T),
        b = (2 sigma)^(-1),

    holds with the measure triple (shape, rank, dim) recorded here.
    """

    q: np.ndarray
    rank: int
    shape: float
    dim: int
    m_eigenvalues: tuple[float, ...]
    warning: str | None = None

    def spec(self) -> MeasureSpec:
        return MeasureSpec(self.shape, self.rank, self.dim)


def reduce_to_canonical(params: NcwParams, tol: float | None = None) -> CanonicalReduction:
    """Diagonalize M = (1/2) sigma^(-1) w sigma^(-1) into canonical (q, k).

    Eigenvalues of M sit in ascending order, zeros first; the trailing k
    positive ones lambda_i^2 define q = diag(1,...,1, 1/lambda) u^T.  A
    warning is set when the zero/nonzero split is numerically ambiguous.
    """
    sigma_inv_w = np.linalg.solve(params.sigma, params.w)
    m = 0.5 * np.linalg.solve(params.sigma, sigma_inv_w.T).T
    m = (m + m.T) / 2.0
    vals, vecs = np.linalg.eigh(m)
    d = params.dim
    if tol is None:
        tol = default_rank_tol(vals, d)
    k = int(np.count_nonzero(vals > tol))
    scale = np.ones(d)
    if k:
        scale[d - k :] = 1.0 / np.sqrt(vals[d - k :])
    q = scale[:, None] * vecs.T
    warning = None
    if 0 < k < d:
        discarded = max(vals[d - k - 1], 0.0)
        kept = vals[d - k]
        if discarded > 1e-6 * kept:
            warning = (
                f"rank split is ill-conditioned: discarded eigenvalue {discarded:.3e} "
                f"vs smallest kept {kept:.3e}"
            )
    return CanonicalReduction(
        q=q,
        rank=k,
        shape=params.shape,
        dim=d,
        m_eigenvalues=tuple(float(v) for v in vals),
        warning=warning,
    )


# ---------------------------------------------------------------------------
# Zonal series: densities and partial transforms


def _pd_eigenvalues(x, name: str) -> np.ndarray:
    a = sym_entries(x, name)
    eigs = np.linalg.eigvalsh(a)
    if eigs[0] <= 0:
        raise DomainError(f"{name} must be positive definite")
    return eigs


def _zonal_value(eigs: np.ndarray, parts: tuple[int, ...], memo: dict) -> float:
    if not parts:
        return 1.0
    weight = sum(parts)
    row = zonal_table(weight, min(eigs.size, weight))[parts]
    total = 0.0
    for lam, c in row.items():
        v = memo.get(lam)
        if v is None:
            v = monomial_symmetric(eigs, Partition(lam))
            memo[lam] = v
        total += float(c) * v
    return total


def _inv_multivariate_gamma(z: float, d: int, parts: tuple[int, ...]) -> float:
    """Reciprocal of Gamma_d(z + kappa); exactly 0 at the gamma poles."""
    padded = parts + (0,) * (d - len(parts))
    out = math.pi ** (-d * (d - 1) / 4.0)
    for j in range(1, d + 1):
        out *= float(rgamma(z + padded[j - 1] - (j - 1) / 2.0))
    return out


def density_m_fullrank(x, shape: float, policy: TruncationPolicy | None = None) -> float:
    """Density of m(n, d, d) at PD x, against the isometric Lebesgue measure.

        2^(-d(d-1)/4) * (det x)^(n/2 - (d+1)/2)
                      * sum_kappa C_kappa(x) / (|kappa|! Gamma_d(kappa + n/2))

    The reference measure is the one carried by the coordinates of
    ``lebesgue_coords`` (off-diagonals scaled by sqrt(2)); the leading
    power of two converts from the entrywise Lebesgue measure that the
    gamma-function integrals are classically stated for.  Defined for
    shape >= d - 1 (the full-rank existence range).  At the critical shape
    n = d - 1 the gamma factors of partitions shorter than d hit poles and
    drop out; what remains is (det x)^(-1) times the interior density of
    the boundary decomposition, see :func:`density_fd`.
    """
    policy = policy or TruncationPolicy()
    eigs = _pd_eigenvalues(x, "x")
    d = eigs.size
    shape = float(shape)
    if shape < d - 1 - SHAPE_INTEGER_TOL:
        raise DomainError(f"full-rank density requires shape >= d-1 = {d - 1}, got {shape}")
    p = shape / 2.0
    memo: dict = {}

    def layer(w: int) -> float:
        tab = zonal_table(w, min(d, w))
        total = 0.0
        for kappa in tab:
            inv_gamma = _inv_multivariate_gamma(p, d, kappa)
            if inv_gamma == 0.0:
                continue
            total += _zonal_value(eigs, kappa, memo) * inv_gamma
        return total / math.factorial(w)

    series = _sum_weight_layers(layer, policy)
    log_det = float(np.sum(np.log(eigs)))
    return 2.0 ** (-d * (d - 1) / 4.0) * math.exp((p - (d + 1) / 2.0) * log_det) * series


def density_fd(t, policy: TruncationPolicy | None = None, stable: bool = True) -> float:
    """Interior density f_d at PD t for the critical shape n = d - 1.

        f_d(t) = 2^(-d(d-1)/4) * (det t)^(-1) * sum over full-length kappa of
                 C_kappa(t) / (|kappa|! Gamma_d(kappa + (d-1)/2))

    against the same isometric Lebesgue measure as
    :func:`density_m_fullrank`.  The stable route rewrites each term
    through the minor-shift identity
    C_kappa(t) (det t)^(-1) = [C_kappa(I)/C_{kappa-1}(I)] C_{kappa-1}(t)
    with kappa-1 the partition lowered by one in every row, avoiding the
    explicit determinant power; stable=False evaluates the raw series via
    :func:`density_m_fullrank` at shape d - 1 for cross-checking.
    """
    policy = policy or TruncationPolicy()
    eigs = _pd_eigenvalues(t, "t")
    d = eigs.size
    if d < 2:
        raise DomainError("the boundary decomposition needs d >= 2")
    if not stable:
        return density_m_fullrank(t, float(d - 1), policy)
    z = (d - 1) / 2.0
    memo: dict = {}

    def layer(w: int) -> float:
        if w < d:
            return 0.0
        tab = zonal_table(w, d)
        total = 0.0
        for kappa in tab:
            if len(kappa) != d:
                continue
            lowered = tuple(p - 1 for p in kappa if p > 1)
            ratio = c_kappa_identity(kappa, d) / c_kappa_identity(lowered, d)
            log_gamma = multivariate_gamma(z, d, Partition(kappa), log=True)
            total += float(ratio) * _zonal_value(eigs, lowered, memo) * math.exp(-log_gamma)
        return total / math.factorial(w)

    return 2.0 ** (-d * (d - 1) / 4.0) * _sum_weight_layers(layer, policy, start=d)


def _split_series_at_inverse(s, dim: int) -> tuple[np.ndarray, float]:
    spec_eigs = _pd_eigenvalues(s, "s")
    if spec_eigs.size != dim:
        raise ValueError(f"s must be {dim}x{dim}")
    inv_eigs = 1.0 / spec_eigs[::-1]
    log_det = float(np.sum(np.log(spec_eigs)))
    prefactor = math.exp(-(dim - 1) / 2.0 * log_det)
    return inv_eigs, prefactor


def lt_fd_series(s, dim: int, policy: TruncationPolicy | None = None) -> float:
    """Laplace transform of f_d * (normalized Lebesgue on the cone) at PD s.

        (det s)^(-(d-1)/2) * sum over full-length kappa of C_kappa(s^(-1)) / |kappa|!
    """
    policy = policy or TruncationPolicy()
    inv_eigs, prefactor = _split_series_at_inverse(s, dim)
    memo: dict = {}

    def layer(w: int) -> float:
        if w < dim:
            return 0.0
        tab = zonal_table(w, dim)
        total = sum(_zonal_value(inv_eigs, kappa, memo) for kappa in tab if len(kappa) == dim)
        return total / math.factorial(w)

    return prefactor * _sum_weight_layers(layer, policy, start=dim)


def singular_r_laplace(s, dim: int, policy: TruncationPolicy | None = None) -> float:
    """Laplace transform at PD s of the rank-deficient remainder r.

    r is the singular part of the critical-shape measure m(d-1, d, d);
    its transform sums the complementary partitions:

        (det s)^(-(d-1)/2) * sum over kappa of length <= d-1 of C_kappa(s^(-1)) / |kappa|!

    so that singular_r_laplace + lt_fd_series reproduces laplace_m exactly
    (the two partition classes partition the exponential-of-trace series).
    """
    policy = policy or TruncationPolicy()
    inv_eigs, prefactor = _split_series_at_inverse(s, dim)
    memo: dict = {}

    def layer(w: int) -> float:
        tab = zonal_table(w, min(dim, w))
        total = sum(_zonal_value(inv_eigs, kappa, memo) for kappa in tab if len(kappa) < dim)
        return total / math.factorial(w)

    return prefactor * _sum_weight_layers(layer, policy)


# ---------------------------------------------------------------------------
# Explicit d = 2 critical shape and d = 1 formulas


def m122_laplace_cone(a: float, b: float, c: float) -> float:
    """Closed-form transform of m(1, 2, 2) at s = [[a+b, c], [c, a-b]].

    Equals (a^2-b^2-c^2)^(-1/2) * exp(2a / (a^2-b^2-c^2)); (a, b, c) must
    lie in the open cone a > sqrt(b^2 + c^2).
    """
    quad = a * a - b * b - c * c
    if a <= 0 or quad <= 0:
        raise DomainError("need a > sqrt(b^2 + c^2) for a positive definite s")
    return quad**-0.5 * math.exp(2.0 * a / quad)


def m122_singular_density(y: float, z: float) -> float:
    """Density of the singular part of m(1, 2, 2) on its boundary sheet.

    The rank-one part lives on the sheet x = sqrt(y^2 + z^2); in the chart
    (y, z) its density against dy dz is g(2 rho) with rho = sqrt(y^2+z^2)
    and g(u) = (2 / (pi u)) cosh(2 sqrt(u)).  Integrable but divergent at
    the apex, which is excluded.
    """
    rho = math.hypot(y, z)
    if rho <= 0:
        raise DomainError("the sheet chart density diverges at the apex (y, z) = (0, 0)")
    u = 2.0 * rho
    return (2.0 / (math.pi * u)) * math.cosh(2.0 * math.sqrt(u))


def m122_ac_density(p, y: float | None = None, z: float | None = None, rel_tol: float = 1e-12) -> float:
    """Interior density of m(1, 2, 2) in cone coordinates, against dx dy dz.

    Accepts a ConePoint2 or three coordinates.  With q = x^2 - y^2 - z^2
    the density is the double series

        (2 / sqrt(pi)) sum_{k>=0} q^k / (k! (k+1)!)
                       sum_{m>=0} (2x)^m / (m! Gamma(m + 2k + 5/2)),

    equal to 2*sqrt(2) times f_2 at [[x+y, z], [z, x-y]] (the constant is
    the volume ratio between dx dy dz and the isometric Lebesgue measure).
    On the boundary sheet the k = 0 terms survive, so the value there is
    the continuous extension; outside the closed cone the call is refused.
    """
    if y is None:
        x, y, z = p.x, p.y, p.z
    else:
        x = float(p)
    quad = x * x - y * y - z * z
    if x < 0 or quad < 0:
        raise DomainError("(x, y, z) lies outside the closed cone x >= sqrt(y^2 + z^2)")
    total = 0.0
    q_term = 1.0  # q^k / (k! (k+1)!)
    for k in range(200):
        inner = 0.0
        m_term = float(rgamma(2 * k + 2.5))  # (2x)^m / (m! Gamma(m + 2k + 5/2))
        for m in range(2000):
            inner += m_term
            if m_term <= rel_tol * inner:
                break
            m_term *= 2.0 * x / ((m + 1) * (m + 2 * k + 2.5))
        else:
            raise RuntimeError("inner series did not converge")
        total += q_term * inner
        if q_term * inner <= rel_tol * total:
            break
        q_term *= quad / ((k + 1) * (k + 2))
    else:
        raise RuntimeError("outer series did not converge")
    return 2.0 / math.sqrt(math.pi) * total


def m111_density(lam: float) -> float:
    """Density of m(1, 1, 1) on (0, infinity): cosh(2 sqrt(lam)) / sqrt(pi lam)."""
    if lam <= 0:
        raise DomainError("the density lives on lam > 0")
    return math.cosh(2.0 * math.sqrt(lam)) / math.sqrt(math.pi * lam)


# ---------------------------------------------------------------------------
# Derivative identities behind the d = 2 interior density


def _as_fraction(v: int | float | Fraction) -> Fraction:
    # Fraction(float) is the exact binary value, so the identity checks stay exact.
    return v if isinstance(v, Fraction) else Fraction(v)


def _poly_derivative_direct(power: int, n: int, x: Fraction, offset: Fraction) -> Fraction:
    """Exact n-th derivative of (x^2 - offset)^power via binomial expansion."""
    total = Fraction(0)
    for j in range(power + 1):
        e = 2 * j
        if e < n:
            continue
        total += math.comb(power, j) * (-offset) ** (power - j) * math.perm(e, n) * x ** (e - n)
    return total


def _faa_closed_full(n: int, x: Fraction, offset: Fraction) -> Fraction:
    q = x * x - offset
    total = Fraction(0)
    for k2 in range(n // 2 + 1):
        total += (
            Fraction(1, math.factorial(k2))
            * q**k2
            / math.factorial(k2)
            * (2 * x) ** (n - 2 * k2)
            / math.factorial(n - 2 * k2)
        )
    return math.factorial(n) ** 2 * total


def _faa_closed_reduced(n: int, x: Fraction, offset: Fraction) -> Fraction:
    q = x * x - offset
    total = Fraction(0)
    for k2 in range(1, n // 2 + 1):
        total += (
            Fraction(1, math.factorial(k2 - 1))
            * q ** (k2 - 1)
            / math.factorial(k2)
            * (2 * x) ** (n - 2 * k2)
            / math.factorial(n - 2 * k2)
        )
    return math.factorial(n) * math.factorial(n - 1) * total


def _fd_stencil_weights(n: int) -> list[Fraction]:
    """Exact rational weights for the n-th derivative on offsets -n, ..., n.

    2n+1 interpolation points reproduce any polynomial of degree <= 2n
    exactly, so for the polynomials differentiated here the finite
    difference has no truncation error, only roundoff.
    """
    pts = list(range(-n, n + 1))
    fact_n = math.factorial(n)
    out = []
    for j in pts:
        coeffs = [Fraction(1)]
        denom = 1
        for i in pts:
            if i == j:
                continue
            denom *= j - i
            new = [Fraction(0)] * (len(coeffs) + 1)
            for t, c in enumerate(coeffs):
                new[t + 1] += c
                new[t] -= i * c
            coeffs = new
        out.append(Fraction(fact_n) * coeffs[n] / denom)
    return out


def _fd_nth_derivative(power: int, n: int, x: float, offset: float, h: float) -> float:
    """Float n-th derivative of (x^2 - offset)^power by the exact-weight stencil."""
    total = 0.0
    for j, wj in zip(range(-n, n + 1), _fd_stencil_weights(n)):
        t = x + j * h
        total += float(wj) * (t * t - offset) ** power
    return total / h**n


@dataclasses.dataclass(frozen=True)
class FaaDiBrunoCheck:
    """Closed-form versus direct n-th derivatives of (x^2 - offset)^n and ^(n-1)."""

    n: int
    x: Fraction
    offset: Fraction
    closed_full: Fraction
    direct_full: Fraction
    closed_reduced: Fraction
    direct_reduced: Fraction
    fd_rel_error: float

    @property
    def matches(self) -> bool:
        return self.closed_full == self.direct_full and self.closed_reduced == self.direct_reduced


def faa_di_bruno_check(n: int, point: ConePoint2 | Sequence, fd_step: float = 0.25) -> FaaDiBrunoCheck:
    """Compare the composite-derivative closed forms against exact expansion.

    For q(x) = x^2 - offset the n-th x-derivatives of q^n and q^(n-1)
    collapse to single sums over the second-derivative count k2:

        d^n/dx^n q^n     = n!^2  sum_{k2=0}^{floor(n/2)} q^k2 (2x)^(n-2k2) / (k2!^2 (n-2k2)!)
        d^n/dx^n q^(n-1) = n!(n-1)! sum_{k2=1}^{floor(n/2)} q^(k2-1) (2x)^(n-2k2) / ((k2-1)! k2! (n-2k2)!)

    Both are evaluated in exact rational arithmetic alongside a binomial
    differentiation of the same polynomials; `matches` is exact equality.
    The same derivatives are also taken by a (2n+1)-point finite-difference
    stencil in floating point, and fd_rel_error reports the larger of the
    two relative deviations.

    point is a ConePoint2 or an (x, y, z) triple; the derivatives are in x
    with q = x^2 - y^2 - z^2.
    """
    if not 1 <= n <= 10:
        raise ValueError("n must be in 1..10")
    if isinstance(point, ConePoint2):
        x, y, z = point.x, point.y, point.z
    else:
        x, y, z = point
    xf = _as_fraction(x)
    off = _as_fraction(y) ** 2 + _as_fraction(z) ** 2
    closed_full = _faa_closed_full(n, xf, off)
    closed_reduced = _faa_closed_reduced(n, xf, off)
    fd_errs = []
    for power, closed in ((n, closed_full), (n - 1, closed_reduced)):
        fd = _fd_nth_derivative(power, n, float(xf), float(off), fd_step)
        scale = max(abs(float(closed)), 1.0)
        fd_errs.append(abs(fd - float(closed)) / scale)
    return FaaDiBrunoCheck(
        n=n,
        x=xf,
        offset=off,
        closed_full=closed_full,
        direct_full=_poly_derivative_direct(n, n, xf, off),
        closed_reduced=closed_reduced,
        direct_reduced=_poly_derivative_direct(n - 1, n, xf, off),
        fd_rel_error=max(fd_errs),
    )
