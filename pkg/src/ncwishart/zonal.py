"""Zonal polynomials and orthogonal-group averages.

The C-normalized zonal polynomial C_kappa is the symmetric eigenfunction
family indexed by integer partitions that satisfies, for every k,

    sum over |kappa| = k of C_kappa(x) = (tr x)^k.

This module builds exact monomial-basis coefficient tables for C_kappa
(rational arithmetic up to ``FRACTION_MAX_WEIGHT``, floating point beyond),
evaluates C_kappa at symmetric matrices or eigenvalue vectors, computes the
closed-form value at the identity, and provides the power-product
Delta_kappa of leading principal minors together with its Haar-orthogonal
average Phi_kappa estimated by Monte Carlo.  The multivariate gamma
function and partitional Pochhammer symbol live here as well since every
series built on C_kappa needs them.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
import os
import tempfile
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .symcore import SymMatrix, haar_orthogonal_batch, sym_entries

__all__ = [
    "FRACTION_MAX_WEIGHT",
    "CACHE_ENV_VAR",
    "Partition",
    "partitions_of_weight",
    "partitions_up_to",
    "monomial_symmetric",
    "zonal_table",
    "zonal_monomial_coeffs",
    "zonal_C",
    "zonal_C_at_identity",
    "c_kappa_identity",
    "multivariate_gamma",
    "pochhammer_kappa",
    "exp_trace_partial_sum",
    "delta_kappa",
    "McEstimate",
    "phi_kappa_mc",
    "LemmaCheck",
    "zonal_lemma_checks",
]

# Coefficient tables use Fraction arithmetic up to this partition weight and
# float arithmetic beyond it.  The recurrence has positive terms only, so
# the float tables are forward stable.
FRACTION_MAX_WEIGHT = 20

# Directory for persisted coefficient tables; unset means in-memory only.
CACHE_ENV_VAR = "NCWISHART_CACHE_DIR"
_CACHE_FORMAT = 1


@dataclasses.dataclass(frozen=True, order=True)
class Partition:
    """Integer partition: a nonincreasing tuple of positive parts.

    Ordering is lexicographic on the parts tuple, which within a fixed
    weight is a linear extension of the dominance order.
    """

    parts: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        parts = tuple(int(p) for p in self.parts)
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        if any(p <= 0 for p in parts):
            raise ValueError(f"parts must be positive, got {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts must be nonincreasing, got {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, obj: "Partition | Iterable[int]") -> "Partition":
        if isinstance(obj, Partition):
            return obj
        return cls(tuple(obj))

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def padded(self, d: int) -> tuple[int, ...]:
        if len(self.parts) > d:
            raise ValueError(f"partition {self.parts} is longer than d={d}")
        return self.parts + (0,) * (d - len(self.parts))

    def dominates(self, other: "Partition") -> bool:
        """Partial sums of self majorize those of *other* (equal weights)."""
        other = Partition.of(other)
        if self.weight != other.weight:
            return False
        return _dominated_by(other.parts, self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __getitem__(self, i: int) -> int:
        return self.parts[i]

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"


def _dominated_by(lam: Sequence[int], kappa: Sequence[int]) -> bool:
    s_l = 0
    s_k = 0
    for r in range(max(len(lam), len(kappa))):
        s_l += lam[r] if r < len(lam) else 0
        s_k += kappa[r] if r < len(kappa) else 0
        if s_l > s_k:
            return False
    return True


def _gen_parts(remaining: int, max_part: int, slots: int) -> Iterator[tuple[int, ...]]:
    if remaining == 0:
        yield ()
        return
    if slots == 0:
        return
    for first in range(min(max_part, remaining), 0, -1):
        for rest in _gen_parts(remaining - first, first, slots - 1):
            yield (first,) + rest


def partitions_of_weight(weight: int, max_length: int | None = None) -> list[Partition]:
    """Partitions of *weight* with at most *max_length* parts, lex descending."""
    if weight < 0:
        raise ValueError("weight must be >= 0")
    slots = weight if max_length is None else min(max_length, weight)
    return [Partition(p) for p in _gen_parts(weight, weight, slots)]


def partitions_up_to(weight: int, max_length: int | None = None) -> list[Partition]:
    """All partitions of weight 0..*weight*, weight-major, lex descending within weight."""
    out: list[Partition] = []
    for w in range(weight + 1):
        out.extend(partitions_of_weight(w, max_length))
    return out


# ---------------------------------------------------------------------------
# Coefficient tables: C_kappa = n_kappa * (m_kappa + sum_{lam < kappa} c_{kappa lam} m_lam)


def _rho(parts: Sequence[int]) -> int:
    # Eigenvalue of the generating differential operator; strictly
    # increasing along the dominance order, so comparable pairs never tie.
    return sum(m * (m - i) for i, m in enumerate(parts, start=1))


def _phat_rows(weight: int, max_length: int, exact: bool) -> dict[tuple, dict[tuple, Fraction | float]]:
    """Eigenfunction coefficients with unit leading term, one row per kappa.

    Row entries follow the pipe recurrence: for lam < kappa,

        c_{kappa lam} = [sum over single-pair transfers lam -> mu of
                         (l_i - l_j + 2t) * c_{kappa mu}] / (rho_kappa - rho_lam),

    where the transfer moves t units from part j up to part i < j and the
    result is re-sorted with zeros dropped.  Distinct transfers landing on
    the same mu contribute once each.
    """
    parts_list = [p.parts for p in partitions_of_weight(weight, max_length)]
    one: Fraction | float = Fraction(1) if exact else 1.0
    zero: Fraction | float = Fraction(0) if exact else 0.0
    rows: dict[tuple, dict[tuple, Fraction | float]] = {}
    for ki, kappa in enumerate(parts_list):
        rho_k = _rho(kappa)
        row: dict[tuple, Fraction | float] = {kappa: one}
        for lam in parts_list[ki + 1 :]:
            if not _dominated_by(lam, kappa):
                continue
            acc = zero
            n = len(lam)
            for i in range(n):
                for j in range(i + 1, n):
                    lj = lam[j]
                    for t in range(1, lj + 1):
                        mu = list(lam)
                        mu[i] += t
                        mu[j] -= t
                        mu_t = tuple(sorted((m for m in mu if m > 0), reverse=True))
                        c = row.get(mu_t)
                        if c is not None:
                            acc = acc + (lam[i] - lj + 2 * t) * c
            denom = rho_k - _rho(lam)
            assert denom > 0, (kappa, lam)
            val = acc / denom if exact else acc / float(denom)
            if val:
                row[lam] = val
        rows[kappa] = row
    return rows


def _multinomial(weight: int, parts: Sequence[int], exact: bool) -> Fraction | float:
    den = math.prod(math.factorial(p) for p in parts)
    if exact:
        return Fraction(math.factorial(weight), den)
    return math.factorial(weight) / den


def _build_table(weight: int, max_length: int) -> dict[tuple, dict[tuple, Fraction | float]]:
    """Monomial coefficients of C_kappa for all kappa of this weight.

    The normalization n_kappa is the unique solution of the triangular
    system sum_{kappa >= lam} n_kappa c_{kappa lam} = weight!/prod(lam_i!),
    which is the sum rule stated in the module docstring written in the
    monomial basis.
    """
    exact = weight <= FRACTION_MAX_WEIGHT
    rows = _phat_rows(weight, max_length, exact)
    parts_list = [p.parts for p in partitions_of_weight(weight, max_length)]
    n_coeff: dict[tuple, Fraction | float] = {}
    for lam in parts_list:
        acc = _multinomial(weight, lam, exact)
        for kp in parts_list:
            if kp == lam:
                break
            c = rows[kp].get(lam)
            if c is not None:
                acc = acc - n_coeff[kp] * c
        n_coeff[lam] = acc
    return {k: {lam: n_coeff[k] * c for lam, c in row.items()} for k, row in rows.items()}


_TABLES: dict[tuple[int, int], dict[tuple, dict[tuple, Fraction | float]]] = {}


def _parts_key(parts: Sequence[int]) -> str:
    return ",".join(map(str, parts))


def _parse_parts_key(s: str) -> tuple[int, ...]:
    return tuple(int(p) for p in s.split(",")) if s else ()


def _cache_path(weight: int, max_length: int) -> str | None:
    base = os.environ.get(CACHE_ENV_VAR)
    if not base:
        return None
    return os.path.join(base, f"zonal_c_w{weight:02d}_l{max_length:02d}.json")


def _load_table(weight: int, max_length: int) -> dict | None:
    path = _cache_path(weight, max_length)
    if path is None or not os.path.exists(path):
        return None
    exact = weight <= FRACTION_MAX_WEIGHT
    try:
        with open(path, "r", encoding="ascii") as fh:
            payload = json.load(fh)
        if payload["format"] != _CACHE_FORMAT or payload["weight"] != weight:
            return None
        if payload["max_length"] != max_length or payload["exact"] != exact:
            return None
        table: dict[tuple, dict[tuple, Fraction | float]] = {}
        for kstr, row in payload["table"].items():
            table[_parse_parts_key(kstr)] = {
                _parse_parts_key(lstr): Fraction(v) if exact else float.fromhex(v)
                for lstr, v in row.items()
            }
        return table
    except (OSError, ValueError, KeyError, TypeError):
        # Unreadable or stale cache entries are recomputed, never trusted.
        return None


def _store_table(weight: int, max_length: int, table: Mapping[tuple, Mapping[tuple, Fraction | float]]) -> None:
    path = _cache_path(weight, max_length)
    if path is None:
        return
    exact = weight <= FRACTION_MAX_WEIGHT
    payload = {
        "format": _CACHE_FORMAT,
        "weight": weight,
        "max_length": max_length,
        "exact": exact,
        "table": {
            _parts_key(k): {
                _parts_key(lam): (str(v) if exact else float(v).hex()) for lam, v in row.items()
            }
            for k, row in table.items()
        },
    }
    try:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            json.dump(payload, fh, sort_keys=True)
        os.replace(tmp, path)
    except OSError:
        pass  # caching is best effort


def zonal_table(weight: int, max_length: int) -> dict[tuple, dict[tuple, Fraction | float]]:
    """Coefficient table {kappa: {lam: coeff}} with C_kappa = sum coeff * m_lam.

    Both kappa and lam range over partitions of *weight* with at most
    *max_length* parts.  Restricting the length is loss-free for evaluation
    in dimension d = max_length because monomials longer than d vanish
    there, and the coefficients themselves do not depend on the
    restriction.  Tables are memoized in-process and, when the directory
    named by ``NCWISHART_CACHE_DIR`` is set, persisted to disk.
    """
    if weight < 0:
        raise ValueError("weight must be >= 0")
    L = max(0, min(max_length, weight))
    key = (weight, L)
    tab = _TABLES.get(key)
    if tab is not None:
        return tab
    for (w, lw), wide in list(_TABLES.items()):
        if w == weight and lw > L:
            tab = {
                k: {lam: v for lam, v in row.items() if len(lam) <= L}
                for k, row in wide.items()
                if len(k) <= L
            }
            _TABLES[key] = tab
            return tab
    tab = _load_table(weight, L)
    if tab is None:
        tab = _build_table(weight, L)
        _store_table(weight, L, tab)
    _TABLES[key] = tab
    return tab


def zonal_monomial_coeffs(kappa: Partition | Iterable[int]) -> dict[tuple[int, ...], Fraction | float]:
    """Unrestricted monomial coefficients of C_kappa, as a fresh dict."""
    kap = Partition.of(kappa)
    tab = zonal_table(kap.weight, kap.weight)
    return dict(tab[kap.parts])


# ---------------------------------------------------------------------------
# Evaluation


def _eigenvalues_of(x) -> np.ndarray:
    if isinstance(x, SymMatrix):
        return np.linalg.eigvalsh(x.entries)
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        return a.reshape(1)
    if a.ndim == 1:
        return a
    return np.linalg.eigvalsh(sym_entries(a))


def monomial_symmetric(values: Sequence[float], lam: Partition | Iterable[int]) -> float:
    """Monomial symmetric polynomial m_lam at the given coordinates.

    Sum of prod(values[i]^a_i) over all distinct placements of the parts of
    lam into the coordinate slots; zero when lam has more parts than there
    are coordinates.
    """
    vals = np.asarray(values, dtype=float)
    parts = Partition.of(lam).parts
    d = vals.size
    if not parts:
        return 1.0
    if len(parts) > d:
        return 0.0
    groups = [(p, len(list(g))) for p, g in itertools.groupby(parts)]
    powers = {p: vals**p for p, _ in groups}

    def rec(remaining: tuple[int, ...], gi: int) -> float:
        if gi == len(groups):
            return 1.0
        part, count = groups[gi]
        pw = powers[part]
        total = 0.0
        for chosen in itertools.combinations(remaining, count):
            prod = 1.0
            for i in chosen:
                prod *= pw[i]
            rest = tuple(i for i in remaining if i not in chosen)
            total += prod * rec(rest, gi + 1)
        return total

    return rec(tuple(range(d)), 0)


def zonal_C(x, kappa: Partition | Iterable[int]) -> float:
    """C_kappa evaluated at a symmetric matrix or an eigenvalue vector."""
    kap = Partition.of(kappa)
    eigs = _eigenvalues_of(x)
    d = eigs.size
    if kap.length > d:
        return 0.0
    if kap.weight == 0:
        return 1.0
    row = zonal_table(kap.weight, min(d, kap.weight))[kap.parts]
    return float(sum(float(c) * monomial_symmetric(eigs, Partition(lam)) for lam, c in row.items()))


def zonal_C_at_identity(kappa: Partition | Iterable[int], d: int) -> Fraction | float:
    """C_kappa(I_d) summed from the coefficient table.

    Exact for weights within the Fraction range.  Independent of
    :func:`c_kappa_identity`, which evaluates the closed-form product; the
    two must agree.
    """
    kap = Partition.of(kappa)
    if d < 1:
        raise ValueError("d must be >= 1")
    if kap.length > d:
        return Fraction(0) if kap.weight <= FRACTION_MAX_WEIGHT else 0.0
    if kap.weight == 0:
        return Fraction(1)
    row = zonal_table(kap.weight, min(d, kap.weight))[kap.parts]
    total: Fraction | float = Fraction(0) if kap.weight <= FRACTION_MAX_WEIGHT else 0.0
    for lam, c in row.items():
        l = len(lam)
        if l > d:
            continue
        # m_lam(1,...,1) counts distinct placements of the parts in d slots.
        count = math.factorial(d) // math.factorial(d - l)
        for _, g in itertools.groupby(lam):
            count //= math.factorial(len(tuple(g)))
        total = total + c * count
    return total


def _rising(base, m: int):
    out = base * 0 + 1  # one in the arithmetic of *base*
    for t in range(m):
        out = out * (base + t)
    return out


def pochhammer_kappa(p, kappa: Partition | Iterable[int], d: int | None = None, allow_outside_domain: bool = False):
    """Partitional Pochhammer symbol (p)_kappa = prod_j (p - (j-1)/2)_{m_j}.

    Fraction inputs stay exact.  When *d* is given, p > (d-1)/2 is enforced
    unless *allow_outside_domain*; outside that half-line the product is
    still a polynomial in p but no longer a gamma-function ratio.
    """
    kap = Partition.of(kappa)
    if d is not None and kap.length > d:
        raise ValueError(f"partition longer than d={d}")
    if d is not None and not allow_outside_domain:
        threshold = Fraction(d - 1, 2) if isinstance(p, Fraction) else (d - 1) / 2.0
        if not p > threshold:
            raise ValueError(f"p must exceed (d-1)/2 = {threshold}")
    result = p * 0 + 1
    for j, m in enumerate(kap.parts, start=1):
        half = Fraction(j - 1, 2) if isinstance(p, Fraction) else (j - 1) / 2.0
        result = result * _rising(p - half, m)
    return result


def c_kappa_identity(kappa: Partition | Iterable[int], d: int) -> Fraction:
    """Closed-form C_kappa(I_d), exact.

    For a partition of weight k with length l and parts m_1 >= ... >= m_l:

        C_kappa(I_d) = 2^{2k} k! (d/2)_kappa
                       * prod_{i<j<=l} (2m_i - 2m_j - i + j)
                       / prod_{i<=l} (2m_i + l - i)!

    Zero when l > d (a factor of (d/2)_kappa vanishes).
    """
    kap = Partition.of(kappa)
    if d < 1:
        raise ValueError("d must be >= 1")
    if kap.length > d:
        return Fraction(0)
    k = kap.weight
    if k == 0:
        return Fraction(1)
    m = kap.parts
    l = len(m)
    num = Fraction(4) ** k * math.factorial(k)
    num *= pochhammer_kappa(Fraction(d, 2), kap, allow_outside_domain=True)
    for i in range(l):
        for j in range(i + 1, l):
            num *= 2 * m[i] - 2 * m[j] - (i + 1) + (j + 1)
    den = math.prod(math.factorial(2 * m[i] + l - (i + 1)) for i in range(l))
    return num / den


def multivariate_gamma(z, d: int, kappa: Partition | Iterable[int] | None = None, log: bool = False) -> float:
    """Multivariate gamma Gamma_d(z + kappa), optionally its logarithm.

        Gamma_d(z + kappa) = pi^{d(d-1)/4} prod_{j=1}^{d} Gamma(z + m_j - (j-1)/2)

    with kappa padded by zeros.  Every gamma argument must be positive;
    arguments at or below zero raise ValueError since the cone integrals
    this normalizes diverge there.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    parts = Partition.of(kappa).padded(d) if kappa is not None else (0,) * d
    logval = d * (d - 1) / 4.0 * math.log(math.pi)
    for j in range(1, d + 1):
        arg = float(z) + parts[j - 1] - (j - 1) / 2.0
        if arg <= 0.0:
            raise ValueError(f"gamma argument {arg} <= 0 at position {j} (z={z}, kappa={tuple(parts)})")
        logval += math.lgamma(arg)
    return logval if log else math.exp(logval)


def exp_trace_partial_sum(x, weight_cutoff: int) -> float:
    """Partial sum through *weight_cutoff* of sum_kappa C_kappa(x)/|kappa|!.

    Converges to exp(tr x); each weight layer sums honestly over its
    partitions rather than collapsing through the power-sum identity, so
    the value exercises the coefficient tables.
    """
    if weight_cutoff < 0:
        raise ValueError("weight_cutoff must be >= 0")
    eigs = _eigenvalues_of(x)
    d = eigs.size
    mono: dict[tuple, float] = {}
    total = 0.0
    for w in range(weight_cutoff + 1):
        tab = zonal_table(w, min(d, w))
        layer = 0.0
        for row in tab.values():
            for lam, c in row.items():
                mv = mono.get(lam)
                if mv is None:
                    mv = monomial_symmetric(eigs, Partition(lam))
                    mono[lam] = mv
                layer += float(c) * mv
        total += layer / math.factorial(w)
    return total


# ---------------------------------------------------------------------------
# Minor power products and their Haar averages


def _minor_exponents(kappa, d: int) -> np.ndarray:
    """Exponent of each leading principal minor in Delta_kappa, length d.

    Accepts real nonincreasing-or-not sequences; only the padded
    differences matter.  Raises if kappa has more than d entries.
    """
    parts = tuple(float(p) for p in (kappa.parts if isinstance(kappa, Partition) else tuple(kappa)))
    if len(parts) > d:
        raise ValueError(f"kappa has {len(parts)} entries but d={d}")
    padded = np.zeros(d + 1)
    padded[: len(parts)] = parts
    return padded[:d] - padded[1:]


def _delta_from_chol(chol: np.ndarray, exps: np.ndarray) -> np.ndarray:
    diag = np.diagonal(chol, axis1=-2, axis2=-1)
    logminors = 2.0 * np.cumsum(np.log(diag), axis=-1)
    return np.exp(logminors @ exps)


def _delta_minors_general(a: np.ndarray, exps: np.ndarray) -> float:
    d = a.shape[0]
    sign_total = 1.0
    log_total = 0.0
    for k in range(d):
        e = exps[k]
        if e == 0.0:
            continue
        sign, logabs = np.linalg.slogdet(a[: k + 1, : k + 1])
        if sign == 0.0:
            if e > 0.0:
                return 0.0
            raise ValueError(f"leading minor {k + 1} is singular with negative exponent {e}")
        if sign < 0.0:
            if abs(e - round(e)) > 1e-12:
                raise ValueError(f"leading minor {k + 1} is negative with non-integer exponent {e}")
            if round(e) % 2:
                sign_total = -sign_total
        log_total += e * logabs
    return sign_total * math.exp(log_total)


def delta_kappa(x, kappa: Partition | Iterable[int] | Sequence[float]) -> float:
    """Power product Delta_kappa(x) of leading principal minors.

    Delta_kappa(x) = prod_k minor_k(x)^{m_k - m_{k+1}} with kappa padded by
    zeros to the dimension of x.  Real (including negative) exponents are
    allowed; positive definite x goes through a Cholesky factorization in
    log scale, anything else falls back to explicit minors and requires
    each minor raised to a non-integer power to be positive.
    """
    a = sym_entries(x)
    exps = _minor_exponents(kappa, a.shape[0])
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return _delta_minors_general(a, exps)
    return float(_delta_from_chol(chol, exps))


def _delta_batch(ys: np.ndarray, exps: np.ndarray) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(ys)
    except np.linalg.LinAlgError:
        return np.array([_delta_minors_general(y, exps) for y in ys])
    return _delta_from_chol(chol, exps)


@dataclasses.dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate with its standard error."""

    estimate: float
    std_error: float
    n_samples: int


def phi_kappa_mc(
    x,
    kappa: Partition | Iterable[int] | Sequence[float],
    n_samples: int,
    rng: np.random.Generator,
    batch_size: int = 1024,
) -> McEstimate:
    """Haar average Phi_kappa(x) = E[Delta_kappa(u x u^T)], u Haar on O(d).

    Plain Monte Carlo over QR-generated Haar rotations, processed in
    batches.  Returns the sample mean with its standard error.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    a = sym_entries(x)
    d = a.shape[0]
    exps = _minor_exponents(kappa, d)
    vals = np.empty(n_samples)
    done = 0
    while done < n_samples:
        b = min(batch_size, n_samples - done)
        u = haar_orthogonal_batch(d, b, rng)
        y = u @ a @ np.swapaxes(u, -1, -2)
        vals[done : done + b] = _delta_batch(y, exps)
        done += b
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_samples))
    return McEstimate(estimate=est, std_error=se, n_samples=n_samples)


@dataclasses.dataclass(frozen=True)
class LemmaCheck:
    """One identity check: value should match expected within std_error."""

    name: str
    value: float
    expected: float
    std_error: float


def zonal_lemma_checks(
    x,
    kappa: Partition | Iterable[int],
    n_samples: int,
    rng: np.random.Generator,
    power: float = 1.0,
) -> list[LemmaCheck]:
    """Structural identities of Delta_kappa and Phi_kappa, checked numerically.

    For positive definite x and a partition kappa of length <= d:

    * ``minor_power_shift``: Delta_{kappa + power}(y) = Delta_kappa(y) det(y)^power,
      pointwise on a batch of Haar conjugations y = u x u^T.  Reported as
      the maximum relative deviation against 0.
    * ``inverse_reversal``: Delta_kappa(y^{-1}) = Delta_{(-m_d,...,-m_1)}(J y J)
      with J the index-reversing permutation, pointwise on the same kind of
      batch; averaging either side over Haar u gives the matching
      Phi identities.  Reported as maximum relative deviation.
    * ``trailing_part_reduction`` (d >= 2 only): the Haar average satisfies
      Phi_kappa(x) = det(x)^{m_d} E[Phi_{(m_1-m_d,...,m_{d-1}-m_d)}(z_u)]
      where z_u is the leading (d-1) x (d-1) block of u x u^T.  Checked by
      nested Monte Carlo against a direct Phi_kappa estimate; the reported
      std_error combines both estimators.
    """
    kap = Partition.of(kappa)
    a = sym_entries(x)
    d = a.shape[0]
    parts = kap.padded(d)
    checks: list[LemmaCheck] = []

    n_point = min(n_samples, 256)
    u = haar_orthogonal_batch(d, n_point, rng)
    ys = u @ a @ np.swapaxes(u, -1, -2)

    shifted = np.array(parts, dtype=float) + power
    lhs = _delta_batch(ys, _minor_exponents(shifted, d))
    rhs = _delta_batch(ys, _minor_exponents(parts, d)) * np.linalg.det(ys) ** power
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    dev = float(np.max(np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)))
    checks.append(LemmaCheck("minor_power_shift", dev, 0.0, 0.0))

    rev = tuple(-p for p in reversed(parts))
    flip = np.eye(d)[::-1]
    lhs = _delta_batch(np.linalg.inv(ys), _minor_exponents(parts, d))
    rhs = _delta_batch(flip @ ys @ flip, _minor_exponents(rev, d))
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    dev = float(np.max(np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)))
    checks.append(LemmaCheck("inverse_reversal", dev, 0.0, 0.0))

    if d >= 2:
        direct = phi_kappa_mc(a, kap, n_samples, rng)
        m_last = parts[-1]
        inner = tuple(p - m_last for p in parts[:-1])
        u = haar_orthogonal_batch(d, n_samples, rng)
        z = (u @ a @ np.swapaxes(u, -1, -2))[:, : d - 1, : d - 1]
        v = haar_orthogonal_batch(d - 1, n_samples, rng)
        w = v @ z @ np.swapaxes(v, -1, -2)
        det_pow = float(np.linalg.det(a)) ** m_last
        vals = det_pow * _delta_batch(w, _minor_exponents(inner, d - 1))
        nested = float(np.mean(vals))
        nested_se = float(np.std(vals, ddof=1) / math.sqrt(n_samples))
        se = math.hypot(nested_se, direct.std_error)
        checks.append(LemmaCheck("trailing_part_reduction", nested, direct.estimate, se))

    return checks
