import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncwishart import (
    ConePoint2,
    ConeTag,
    SymMatrix,
    cone_classify,
    coords_to_matrix,
    gram,
    haar_orthogonal,
    haar_orthogonal_batch,
    lebesgue_coords,
    phi2,
    phi2_inverse,
    rank_psd,
)

finite_reals = st.floats(min_value=-50, max_value=50, allow_nan=False)


def test_symmatrix_enforces_symmetry_and_is_immutable():
    m = SymMatrix([[1.0, 2.0], [2.0, 3.0]])
    assert m.dim == 2
    with pytest.raises(ValueError):
        m.entries[0, 0] = 5.0
    assert SymMatrix.identity(3) == SymMatrix(np.eye(3))
    assert hash(SymMatrix.diagonal([1, 2])) == hash(SymMatrix(np.diag([1.0, 2.0])))


def test_symmatrix_rejects_bad_input():
    with pytest.raises(ValueError):
        SymMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        SymMatrix([[1.0, 2.0], [0.0, 1.0]])  # asymmetric beyond tolerance
    with pytest.raises(ValueError):
        SymMatrix([[np.nan, 0.0], [0.0, 1.0]])


def test_cone_classify_three_ways():
    pd = cone_classify(np.diag([1.0, 2.0]))
    assert pd.tag is ConeTag.POSITIVE_DEFINITE and pd.rank == 2

    boundary = cone_classify(np.diag([1.0, 0.0]))
    assert boundary.tag is ConeTag.BOUNDARY_RANK and boundary.rank == 1
    assert boundary.in_closed_cone

    outside = cone_classify(np.diag([1.0, -1.0]))
    assert outside.tag is ConeTag.NOT_IN_CONE
    assert not outside.in_closed_cone
    assert outside.eigenvalues[0] == pytest.approx(-1.0)


def test_cone_classify_explicit_tolerance():
    m = np.diag([1.0, 1e-6])
    assert cone_classify(m).rank == 2
    assert cone_classify(m, tol=1e-3).rank == 1
    with pytest.raises(ValueError):
        cone_classify(m, tol=-1.0)


def test_rank_psd_refuses_outside_cone():
    assert rank_psd(np.diag([3.0, 0.0, 1.0])) == 2
    with pytest.raises(ValueError, match="outside the closed cone"):
        rank_psd(np.diag([1.0, -0.5]))


@given(
    d=st.integers(min_value=1, max_value=5),
    data=st.data(),
)
def test_lebesgue_coords_roundtrip_and_isometry(d, data):
    """coords_to_matrix inverts lebesgue_coords, and the map preserves norms."""
    n = d * (d + 1) // 2
    v = np.array(data.draw(st.lists(finite_reals, min_size=n, max_size=n)))
    m = coords_to_matrix(v, d)
    assert np.array_equal(m, m.T)
    back = lebesgue_coords(m)
    assert np.allclose(back, v, atol=1e-12)
    assert math.isclose(
        float(np.linalg.norm(v)) ** 2, float(np.trace(m @ m)), rel_tol=1e-12, abs_tol=1e-12
    )


def test_coords_to_matrix_rejects_wrong_length():
    with pytest.raises(ValueError):
        coords_to_matrix([1.0, 2.0], 2)


@given(x=finite_reals, y=finite_reals, z=finite_reals)
def test_phi2_roundtrip_det_and_pairing(x, y, z):
    m = phi2((x, y, z))
    p = phi2_inverse(m)
    assert (p.x, p.y, p.z) == pytest.approx((x, y, z), abs=1e-12)
    assert float(np.linalg.det(m)) == pytest.approx(x * x - y * y - z * z, abs=1e-8)
    # trace pairing: tr(phi2(a) phi2(p)) = 2 <a, p>
    a, b, c = 0.7, -0.3, 1.1
    lhs = float(np.trace(phi2((a, b, c)) @ m))
    assert lhs == pytest.approx(2 * (a * x + b * y + c * z), abs=1e-9)


def test_phi2_inverse_needs_2x2():
    with pytest.raises(ValueError):
        phi2_inverse(np.eye(3))


def test_cone_point_membership():
    on_boundary = ConePoint2(1.0, 0.6, 0.8)
    assert on_boundary.radius() == pytest.approx(1.0)
    assert on_boundary.in_cone()
    assert not on_boundary.in_interior()
    assert ConePoint2(2.0, 0.6, 0.8).in_interior()
    assert not ConePoint2(0.5, 0.6, 0.8).in_cone()
    # tolerance loosens membership, not interiority
    assert ConePoint2(0.99, 0.6, 0.8).in_cone(tol=0.02)


def test_haar_orthogonal_is_orthogonal(rng):
    for d in (1, 2, 5):
        u = haar_orthogonal(d, rng)
        assert np.allclose(u @ u.T, np.eye(d), atol=1e-12)
        assert abs(float(np.linalg.det(u))) == pytest.approx(1.0, abs=1e-12)


def test_haar_batch_shape_and_reproducibility():
    batch = haar_orthogonal_batch(3, 7, np.random.default_rng(5))
    assert batch.shape == (7, 3, 3)
    again = haar_orthogonal_batch(3, 7, np.random.default_rng(5))
    assert np.array_equal(batch, again)
    assert haar_orthogonal_batch(3, 0, np.random.default_rng(5)).shape == (0, 3, 3)


def test_haar_first_moment_vanishes(rng):
    # E[u] = 0 on O(d); a loose 5-sigma band on the entry means
    n = 4000
    batch = haar_orthogonal_batch(3, n, rng)
    means = batch.mean(axis=0)
    assert float(np.max(np.abs(means))) < 5.0 / math.sqrt(3 * n)


def test_gram_basics():
    g = gram([[1.0, 0.0, 2.0], [0.0, 3.0, 1.0]])
    assert g.shape == (2, 2)
    assert np.array_equal(g, g.T)
    assert np.all(np.linalg.eigvalsh(g) >= -1e-12)
    # five vectors of length two: Gram is 5x5 with rank at most 2
    vs = [[1.0, float(i)] for i in range(5)]
    assert rank_psd(gram(vs)) <= 2
    with pytest.raises(ValueError):
        gram([])
    with pytest.raises(ValueError):
        gram([[1.0, 2.0], [1.0]])
