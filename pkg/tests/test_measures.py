import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from ncwishart import (
    ConePoint2,
    DomainError,
    MeasureSpec,
    NcwParams,
    TruncationError,
    TruncationMode,
    TruncationPolicy,
    VerdictReason,
    density_fd,
    density_m_fullrank,
    exists_m,
    exists_ncw,
    faa_di_bruno_check,
    laplace_m,
    laplace_ncw,
    lt_fd_series,
    m111_density,
    m122_ac_density,
    m122_laplace_cone,
    m122_singular_density,
    phi2,
    reduce_to_canonical,
    singular_r_laplace,
)


def spd(rng, d, lo=0.5, hi=2.5):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q @ np.diag(rng.uniform(lo, hi, d)) @ q.T


# ---------------------------------------------------------------------------
# Existence


@pytest.mark.parametrize(
    "shape,k,d,expected",
    [
        (1.0, 2, 3, False),  # integer ladder: rank above the shape
        (1.0, 1, 3, True),
        (1.0, 0, 3, True),
        (2.0, 2, 4, True),
        (2.0, 3, 4, False),
        (4.5, 5, 5, True),
        (4.5, 0, 5, True),
        (1.0, 2, 2, True),  # d = 2: everything from shape 1 up
        (0.5, 0, 2, False),
        (1.5, 1, 3, False),  # non-integer below d-1
        (0.25, 0, 1, True),  # d = 1: every positive shape
        (3.0, 3, 3, True),
    ],
)
def test_existence_table(shape, k, d, expected):
    assert bool(exists_m(shape, k, d)) is expected


def test_existence_verdict_carries_reason_and_clause():
    verdict = exists_m(1.0, 2, 3)
    assert not verdict
    assert verdict.reason is VerdictReason.RANK_EXCEEDS_SHAPE
    assert "rank 2" in verdict.clause

    ok = exists_m(4.5, 3, 5)
    assert ok.reason is VerdictReason.OK_CONTINUOUS_SHAPE

    ladder = exists_m(2.0, 1, 4)
    assert ladder.reason is VerdictReason.OK_INTEGER_SHAPE

    assert not exists_m(-1.0, 0, 3)
    with pytest.raises(ValueError):
        exists_m(1.0, 4, 3)
    with pytest.raises(ValueError):
        exists_m(1.0, 0, 0)


@given(
    shape=st.floats(min_value=0.1, max_value=8.0),
    k=st.integers(min_value=1, max_value=4),
    d=st.integers(min_value=1, max_value=4),
)
def test_existence_monotone_in_rank(shape, k, d):
    """Shrinking the rank never destroys existence."""
    k = min(k, d)
    if exists_m(shape, k, d):
        for smaller in range(k):
            assert exists_m(shape, smaller, d)
    if shape >= d - 1:
        assert exists_m(shape, k, d)


def test_exists_ncw_uses_rank_of_w():
    w = np.zeros((3, 3))
    w[2, 2] = 1.0
    assert exists_ncw(NcwParams(1.0, w))
    w[1, 1] = 1.0
    assert not exists_ncw(NcwParams(1.0, w))


def test_ncw_params_validation():
    with pytest.raises(ValueError):
        NcwParams(0.0, np.eye(2))
    with pytest.raises(ValueError):
        NcwParams(1.0, np.diag([1.0, -0.2]))
    with pytest.raises(ValueError):
        NcwParams(1.0, np.eye(2), np.diag([1.0, 0.0]))
    p = NcwParams(2.0, 0.5 * np.eye(2))
    assert np.allclose(p.mean(), 2.0 * np.eye(2) + np.eye(2))


# ---------------------------------------------------------------------------
# Laplace transforms


def test_laplace_m_reference_points():
    assert laplace_m(2.0 * np.eye(2), (1.0, 2, 2)) == pytest.approx(math.e / 2, rel=1e-14)
    for d in (1, 2, 3):
        for k in range(d + 1):
            assert laplace_m(np.eye(d), (2.0, k, d)) == pytest.approx(math.exp(k), rel=1e-13)
            n = 1.5
            expected = 2.0 ** (-d * n / 2) * math.exp(k / 2)
            assert laplace_m(2.0 * np.eye(d), (n, k, d)) == pytest.approx(expected, rel=1e-13)


def test_laplace_m_input_checks():
    with pytest.raises(DomainError):
        laplace_m(np.diag([1.0, -1.0]), (2.0, 1, 2))
    with pytest.raises(ValueError):
        laplace_m(np.eye(3), (2.0, 1, 2))


def test_laplace_ncw_scalar_case():
    # d = 1: (1 + 2 sigma s)^(-p) exp(-2 s w / (1 + 2 sigma s))
    n, w, sigma = 1.5, 0.7, 1.3
    for s in (0.2, 1.0, 3.0):
        val = laplace_ncw(np.array([[s]]), NcwParams(n, [[w]], [[sigma]]))
        expected = (1 + 2 * sigma * s) ** (-n / 2) * math.exp(-2 * s * w / (1 + 2 * sigma * s))
        assert val == pytest.approx(expected, rel=1e-13)


def test_laplace_ncw_semigroup_in_shape_and_noncentrality(rng):
    d = 3
    sigma = spd(rng, d)
    w1 = 0.4 * spd(rng, d, 0.1, 1.0)
    w2 = np.zeros((d, d))
    w2[0, 0] = 0.8
    s = spd(rng, d, 0.05, 0.6)
    lhs = laplace_ncw(s, NcwParams(1.0, w1, sigma)) * laplace_ncw(s, NcwParams(2.5, w2, sigma))
    rhs = laplace_ncw(s, NcwParams(3.5, w1 + w2, sigma))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_laplace_ncw_orthogonal_equivariance(rng):
    d = 3
    params = NcwParams(2.0, 0.3 * spd(rng, d, 0.1, 1.0), spd(rng, d))
    u, _ = np.linalg.qr(rng.standard_normal((d, d)))
    rotated = NcwParams(2.0, u @ params.w @ u.T, u @ params.sigma @ u.T)
    for _ in range(3):
        s = spd(rng, d, 0.05, 0.8)
        assert laplace_ncw(s, rotated) == pytest.approx(
            laplace_ncw(u.T @ s @ u, params), rel=1e-11
        )


def test_laplace_ncw_domain_error():
    params = NcwParams(2.0, np.zeros((2, 2)))
    with pytest.raises(DomainError):
        laplace_ncw(np.diag([-0.6, 0.1]), params)


def test_reduce_to_canonical_normalizes_and_preserves_transform(rng):
    d = 3
    vecs = rng.standard_normal((2, d))
    params = NcwParams(3.2, 0.5 * vecs.T @ vecs, spd(rng, d))
    red = reduce_to_canonical(params)
    assert red.rank == 2
    m = 0.5 * np.linalg.solve(params.sigma, np.linalg.solve(params.sigma, params.w).T).T
    target = np.diag([0.0] * (d - red.rank) + [1.0] * red.rank)
    assert np.allclose(red.q @ m @ red.q.T, target, atol=1e-10)

    b = np.linalg.inv(2.0 * params.sigma)
    spec = red.spec()
    for _ in range(3):
        s = spd(rng, d, 0.05, 0.7)
        direct = laplace_ncw(s, params)
        via_m = laplace_m(red.q @ (s + b) @ red.q.T, spec) / laplace_m(red.q @ b @ red.q.T, spec)
        assert direct == pytest.approx(via_m, rel=1e-10)


def test_reduce_to_canonical_flags_ambiguous_split():
    # discarded eigenvalue 5e-6 is above 1e-6 of the kept 0.5: ambiguous
    w = np.diag([1e-5, 1.0])
    red = reduce_to_canonical(NcwParams(1.0, w), tol=1e-5)
    assert red.rank == 1
    assert red.warning is not None and "ill-conditioned" in red.warning
    clean = reduce_to_canonical(NcwParams(1.0, np.diag([0.0, 1.0])))
    assert clean.rank == 1 and clean.warning is None


# ---------------------------------------------------------------------------
# Series densities and the critical-shape split


def test_density_d1_matches_bessel_closed_form():
    # at d = 1 the series is x^(n/4 - 1/2) I_{n/2-1}(2 sqrt(x))
    for n in (1.0, 2.0, 3.5):
        for x in (0.3, 1.0, 4.2):
            val = density_m_fullrank(np.array([[x]]), n)
            expected = x ** (n / 4 - 0.5) * special.iv(n / 2 - 1, 2 * math.sqrt(x))
            assert val == pytest.approx(expected, rel=1e-10)
    assert m111_density(0.8) == pytest.approx(density_m_fullrank([[0.8]], 1.0), rel=1e-10)


def test_density_fullrank_domain():
    with pytest.raises(DomainError):
        density_m_fullrank(np.eye(3), 1.5)  # below the critical shape
    with pytest.raises(DomainError):
        density_m_fullrank(np.diag([1.0, 0.0]), 3.0)


def test_density_fd_stable_route_matches_raw_series(rng):
    for d in (2, 3):
        for _ in range(3):
            t = spd(rng, d, 0.4, 2.0)
            stable = density_fd(t)
            raw = density_fd(t, stable=False)
            assert stable == pytest.approx(raw, rel=1e-9)
    with pytest.raises(DomainError):
        density_fd(np.array([[1.0]]))


def test_split_transform_reassembles_laplace_m(rng):
    for d in (2, 3):
        for _ in range(5):
            s = spd(rng, d, 0.8, 2.5)
            whole = laplace_m(s, (float(d - 1), d, d))
            split = singular_r_laplace(s, d) + lt_fd_series(s, d)
            assert split == pytest.approx(whole, rel=1e-10)


def test_adaptive_truncation_reports_divergence():
    tight = TruncationPolicy(rel_tol=1e-10, max_weight=6)
    with pytest.raises(TruncationError) as err:
        lt_fd_series(0.25 * np.eye(3), 3, tight)
    assert err.value.max_weight == 6
    assert err.value.partial_value > 0
    # FIXED mode returns the partial sum without complaint
    fixed = TruncationPolicy(TruncationMode.FIXED, max_weight=6)
    partial = lt_fd_series(0.25 * np.eye(3), 3, fixed)
    full = lt_fd_series(0.25 * np.eye(3), 3, TruncationPolicy(max_weight=80))
    assert 0 < partial < full


def test_truncation_policy_validation():
    with pytest.raises(ValueError):
        TruncationPolicy(rel_tol=0.0)
    with pytest.raises(ValueError):
        TruncationPolicy(max_weight=-1)


# ---------------------------------------------------------------------------
# Explicit d = 2 critical-shape formulas


def test_m122_laplace_cone_values():
    assert m122_laplace_cone(2.0, 0.0, 0.0) == pytest.approx(math.e / 2, rel=1e-14)
    with pytest.raises(DomainError):
        m122_laplace_cone(1.0, 1.0, 0.2)
    with pytest.raises(DomainError):
        m122_laplace_cone(-2.0, 0.0, 0.0)


def test_m122_laplace_cone_matches_laplace_m(rng):
    for _ in range(5):
        b, c = rng.uniform(-0.8, 0.8, 2)
        a = math.hypot(b, c) + rng.uniform(0.2, 1.5)
        s = phi2((a, b, c))
        assert m122_laplace_cone(a, b, c) == pytest.approx(
            laplace_m(s, (1.0, 2, 2)), rel=1e-12
        )


def test_m122_singular_density_chart():
    # g(u) = (2 / (pi u)) cosh(2 sqrt(u)) at u = 2 rho
    assert m122_singular_density(0.5, 0.0) == pytest.approx(
        2.0 / math.pi * math.cosh(2.0), rel=1e-14
    )
    assert m122_singular_density(0.3, 0.4) == pytest.approx(
        m122_singular_density(0.5, 0.0), rel=1e-14
    )
    with pytest.raises(DomainError):
        m122_singular_density(0.0, 0.0)


def test_m122_ac_density_is_scaled_fd_density(rng):
    """The cone-coordinate density is 2*sqrt(2) times f_2 composed with the chart."""
    scale = 2.0 * math.sqrt(2.0)
    for _ in range(4):
        y, z = rng.uniform(-0.7, 0.7, 2)
        x = math.hypot(y, z) + rng.uniform(0.1, 1.5)
        direct = m122_ac_density(x, y, z)
        via_fd = scale * density_fd(phi2((x, y, z)))
        assert direct == pytest.approx(via_fd, rel=1e-9)


def test_m122_ac_density_boundary_and_domain():
    inside = m122_ac_density(1.0 + 1e-10, 1.0, 0.0)
    on_sheet = m122_ac_density(1.0, 1.0, 0.0)
    assert on_sheet == pytest.approx(inside, rel=1e-6)
    assert on_sheet > 0
    accepts_point = m122_ac_density(ConePoint2(1.5, 0.3, -0.2))
    assert accepts_point == pytest.approx(m122_ac_density(1.5, 0.3, -0.2), rel=1e-14)
    with pytest.raises(DomainError):
        m122_ac_density(1.0, 1.1, 0.0)
    with pytest.raises(DomainError):
        m122_ac_density(-1.0, 0.0, 0.0)


def test_m111_density_values():
    assert m111_density(1.0) == pytest.approx(math.cosh(2.0) / math.sqrt(math.pi), rel=1e-14)
    with pytest.raises(DomainError):
        m111_density(0.0)


# ---------------------------------------------------------------------------
# Composite derivative identities


def test_faa_di_bruno_exact_through_ten():
    for n in range(1, 11):
        for point in ((1.5, 0.5, 0.5), (0.8, 0.3, -0.2), (2.0, 1.0, 0.0)):
            check = faa_di_bruno_check(n, point)
            assert check.matches, (n, point)
            assert check.closed_full == check.direct_full
            assert check.closed_reduced == check.direct_reduced


def test_faa_di_bruno_finite_difference_accuracy():
    worst = max(
        faa_di_bruno_check(n, (1.5, 0.5, 0.5)).fd_rel_error for n in range(1, 9)
    )
    assert worst < 1e-6


def test_faa_di_bruno_accepts_cone_point_and_validates_n():
    check = faa_di_bruno_check(3, ConePoint2(1.2, 0.4, 0.1))
    assert check.matches
    with pytest.raises(ValueError):
        faa_di_bruno_check(0, (1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        faa_di_bruno_check(11, (1.0, 0.0, 0.0))
