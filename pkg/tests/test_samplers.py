import math

import numpy as np
import pytest

from ncwishart import (
    DomainError,
    MeasureSpec,
    NcwParams,
    RankExceedsShapeError,
    convolution_support_experiment,
    decompose_w,
    empirical_laplace,
    laplace_m,
    laplace_ncw,
    m_measure_sample,
    ncw_sample,
    rank_additivity_experiment,
    singular_r_laplace,
    singular_r_sample,
    subspace_intersection_experiment,
    weighted_laplace_estimate,
)
from ncwishart.samplers import RANK_EVENT_TOL

N_MC = 30_000


def spd(rng, d, lo=0.5, hi=2.0):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q @ np.diag(rng.uniform(lo, hi, d)) @ q.T


# ---------------------------------------------------------------------------
# Mean decomposition


def test_decompose_w_reconstructs_exactly(rng):
    vecs = rng.standard_normal((2, 4))
    w = vecs.T @ vecs
    dec = decompose_w(w, 3)
    assert dec.count == 3 and dec.dim == 4
    assert np.allclose(dec.assemble(), w, atol=1e-12)
    # rows beyond the rank are zero padding
    assert np.all(dec.means[2] == 0.0)


def test_decompose_w_zero_and_errors(rng):
    assert np.all(decompose_w(np.zeros((3, 3)), 2).means == 0.0)
    vecs = rng.standard_normal((3, 3))
    with pytest.raises(RankExceedsShapeError):
        decompose_w(vecs.T @ vecs + np.eye(3), 2)
    with pytest.raises(DomainError):
        decompose_w(np.diag([1.0, -0.5]), 2)


# ---------------------------------------------------------------------------
# Direct sampler


def test_ncw_sample_shape_symmetry_reproducibility():
    params = NcwParams(2.0, np.zeros((3, 3)))
    draws = ncw_sample(params, 100, np.random.default_rng(9))
    assert draws.shape == (100, 3, 3)
    assert np.array_equal(draws, np.swapaxes(draws, 1, 2))
    again = ncw_sample(params, 100, np.random.default_rng(9))
    assert np.array_equal(draws, again)
    # every draw is a Gram matrix of 2 vectors: rank <= 2 < 3
    eigs = np.linalg.eigvalsh(draws)
    assert np.all(eigs[:, 0] > -1e-10)
    assert np.all(eigs[:, 0] < 1e-10)


def test_ncw_sample_first_moment(rng):
    d = 2
    m = np.array([1.0, -0.5])
    w = 0.5 * np.outer(m, m)
    sigma = np.array([[1.0, 0.3], [0.3, 0.8]])
    params = NcwParams(3.0, w, sigma)
    draws = ncw_sample(params, N_MC, rng)
    sample_mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / math.sqrt(N_MC)
    assert np.all(np.abs(sample_mean - params.mean()) < 4.0 * se)


def test_ncw_sample_laplace_agreement(rng):
    d = 2
    vec = np.array([0.8, 0.2])
    params = NcwParams(2.0, 0.5 * np.outer(vec, vec), spd(rng, d))
    draws = ncw_sample(params, N_MC, rng)
    s = spd(rng, d, 0.05, 0.4)
    est = empirical_laplace(draws, s)
    closed = laplace_ncw(s, params)
    assert abs(est.estimate - closed) < 4.0 * est.std_error


def test_ncw_sample_orthogonal_invariance(rng):
    # for w = 0, sigma = I the law is conjugation invariant, so the
    # empirical transform at s and at u^T s u estimate the same number
    params = NcwParams(3.0, np.zeros((3, 3)))
    draws = ncw_sample(params, N_MC, rng)
    u, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    s = spd(rng, 3, 0.05, 0.5)
    closed = laplace_ncw(s, params)
    assert laplace_ncw(u.T @ s @ u, params) == pytest.approx(closed, rel=1e-12)
    for arg in (s, u.T @ s @ u):
        est = empirical_laplace(draws, arg)
        assert abs(est.estimate - closed) < 4.0 * est.std_error


def test_ncw_sample_rejects_bad_shape_or_rank(rng):
    with pytest.raises(DomainError):
        ncw_sample(NcwParams(1.5, np.zeros((2, 2))), 10, rng)
    vecs = rng.standard_normal((2, 2))
    with pytest.raises(RankExceedsShapeError):
        ncw_sample(NcwParams(1.0, vecs.T @ vecs + 0.1 * np.eye(2), np.eye(2)), 10, rng)


# ---------------------------------------------------------------------------
# Weighted samplers


def test_m_measure_weighted_laplace_agreement(rng):
    for spec in (MeasureSpec(2.0, 1, 2), MeasureSpec(3.0, 2, 3)):
        sample = m_measure_sample(spec, N_MC, rng)
        assert len(sample) == N_MC and sample.dim == spec.dim
        assert np.all(np.isfinite(sample.log_weights))
        s = 0.6 * np.eye(spec.dim) + np.diag(rng.uniform(0.05, 0.3, spec.dim))
        est = weighted_laplace_estimate(sample, s)
        closed = laplace_m(s, spec)
        assert abs(est.estimate - closed) < 4.0 * est.std_error


def test_m_measure_sample_validates_inputs(rng):
    with pytest.raises(DomainError):
        m_measure_sample(MeasureSpec(1.0, 2, 3), 10, rng)  # rank above shape
    with pytest.raises(DomainError):
        m_measure_sample(MeasureSpec(2.5, 1, 3), 10, rng)  # non-integer shape


def test_weighted_estimator_variance_guard(rng):
    sample = m_measure_sample(MeasureSpec(2.0, 1, 2), 2000, rng)
    risky = 0.4 * np.eye(2)
    with pytest.raises(DomainError):
        weighted_laplace_estimate(sample, risky)
    est = weighted_laplace_estimate(sample, risky, allow_unsafe=True)
    assert math.isfinite(est.estimate) and est.std_error > 0


def test_m_measure_seed_reproducibility():
    spec = MeasureSpec(2.0, 2, 2)
    a = m_measure_sample(spec, 50, np.random.default_rng(4))
    b = m_measure_sample(spec, 50, np.random.default_rng(4))
    assert np.array_equal(a.draws, b.draws)
    assert np.array_equal(a.log_weights, b.log_weights)


# ---------------------------------------------------------------------------
# Rank-deficient remainder sampler


def test_singular_r_rank_and_weighted_mass(rng):
    for d in (2, 3):
        sample = singular_r_sample(d, 20_000, rng)
        eigs = np.linalg.eigvalsh(sample.draws)
        thresh = RANK_EVENT_TOL * np.maximum(1.0, eigs[:, -1])[:, None]
        ranks = np.count_nonzero(eigs > thresh, axis=1)
        # the zero eigenvalue is structural: no draw can reach full rank
        assert int(np.sum(ranks == d)) == 0
        assert float(np.max(np.abs(eigs[:, 0]))) < 1e-12
        # mass below rank d-1 is a tolerance artifact; the sqrt-det weight
        # sends it to zero much faster than the raw event count
        weights = sample.weights
        off_mass = float(weights[ranks < d - 1].sum() / weights.sum())
        assert off_mass <= 1e-8


def test_singular_r_laplace_agreement(rng):
    for d in (2, 3):
        sample = singular_r_sample(d, N_MC, rng)
        s = 0.7 * np.eye(d) + np.diag(rng.uniform(0.0, 0.3, d))
        est = weighted_laplace_estimate(sample, s)
        series = singular_r_laplace(s, d)
        assert abs(est.estimate - series) < 4.0 * est.std_error


def test_singular_r_rejects_dimension_one(rng):
    with pytest.raises(ValueError):
        singular_r_sample(1, 10, rng)


# ---------------------------------------------------------------------------
# Support experiments


def test_subspace_intersection_never_hits(rng):
    assert subspace_intersection_experiment(4, 2, 2, 3000, rng) == 0.0
    assert subspace_intersection_experiment(5, 2, 3, 3000, rng) == 0.0
    # forcing G inside F flips the probability to one
    assert subspace_intersection_experiment(4, 2, 2, 500, rng, degenerate_control=True) == 1.0
    with pytest.raises(DomainError):
        subspace_intersection_experiment(4, 2, 3, 10, rng)


def test_rank_additivity_experiment(rng):
    hist = rank_additivity_experiment(
        np.diag([1.0, 0.0, 0.0, 0.0]), np.diag([1.0, 1.0, 0.0, 0.0]), 3000, rng
    )
    assert hist.trials == 3000
    assert hist.off_target(3) == 0
    assert hist.quantiles.shape == (5, 4)
    zero = rank_additivity_experiment(np.diag([1.0, 1.0, 0.0]), np.zeros((3, 3)), 500, rng)
    assert zero.off_target(2) == 0


def test_convolution_support_adds_ranks(rng):
    hist = convolution_support_experiment(MeasureSpec(1.0, 1, 3), 1, 3000, rng)
    assert hist.off_target(2) == 0
    central_only = convolution_support_experiment(MeasureSpec(1.0, 1, 3), 0, 500, rng)
    assert central_only.off_target(1) == 0


def test_convolution_square_corner_boundary_mass(rng):
    # ranks add to exactly d here, and the limiting density blows up like
    # det^(-1/2) at the cone boundary, so a small raw count of draws below
    # the eigenvalue tolerance is genuine boundary mass, not a rank defect
    hist = convolution_support_experiment(MeasureSpec(2.0, 1, 3), 1, 20_000, rng)
    assert hist.off_target(3) / hist.trials <= 2e-3
    assert all(r <= 3 for r in hist.counts)
