import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snowdyn.polyroots import (
    Polynomial,
    backward_error,
    cluster_roots,
    find_roots,
    poly_derivative,
    poly_eval,
    poly_from_factors,
)
from snowdyn.sphere import INF, chordal_distance


def as_multiset(rs):
    return sorted((round(r.location.real, 8), round(r.location.imag, 8), r.multiplicity) for r in rs.roots)


def test_polynomial_basics():
    p = Polynomial([1, 2, 0, 0])
    assert p.degree == 1
    assert p(3) == 7
    with pytest.raises(ValueError):
        Polynomial([0, 0])
    assert poly_derivative(Polynomial([5, 0, 3])) == Polynomial([0, 6])
    assert poly_eval(Polynomial([1, 0, 1]), INF) == INF
    assert chordal_distance(poly_eval(Polynomial([1, 0, 1]), 2j), -3) < 1e-15


def test_multiple_roots_recovered():
    p = poly_from_factors([(1, 3), (-2, 2), (0.5j, 1)])
    rs = find_roots(p)
    assert as_multiset(rs) == sorted([(1.0, 0.0, 3), (-2.0, 0.0, 2), (0.0, 0.5, 1)])
    assert rs.degree == 6


def test_zero_roots_split_off():
    rs = find_roots(Polynomial([0, 0, 0, 1, 1]))
    assert as_multiset(rs) == [(-1.0, 0.0, 1), (0.0, 0.0, 3)]


def test_high_multiplicity_cluster():
    # the five-fold zero of the degree-29 example lies far from 1
    p = poly_from_factors([(9.00678, 5), (-1.0, 4), (0.3, 1)])
    rs = find_roots(p)
    mult = {round(r.location.real, 5): r.multiplicity for r in rs.roots}
    assert mult == {9.00678: 5, -1.0: 4, 0.3: 1}


def test_close_distinct_roots_not_merged():
    p = poly_from_factors([(1.0, 1), (1.001, 1), (-3, 2)])
    rs = find_roots(p)
    assert sorted(rs.multiplicities()) == [1, 1, 2]


def test_backward_error_small_at_roots():
    c = poly_from_factors([(2, 1), (1e3, 1)]).coefficients
    assert backward_error(c, 2) < 1e-15
    assert backward_error(c, 1e3) < 1e-15
    assert backward_error(c, 5) > 0.1
    assert backward_error(np.array([0, 2.0]), 0) == 0.0


def test_cluster_rejects_far_group():
    c = poly_from_factors([(1, 1), (1.04, 1)]).coefficients
    out = cluster_roots(c, [1.0, 1.04])
    assert sorted(m for _, m in out) == [1, 1]


roots = st.lists(
    st.tuples(
        st.floats(-10, 10, allow_nan=False), st.floats(-10, 10, allow_nan=False), st.integers(1, 3)
    ),
    min_size=1,
    max_size=5,
)


@settings(max_examples=60, deadline=None)
@given(roots)
def test_roots_recovered_with_multiplicity(spec):
    pts = []
    for x, y, m in spec:
        z = complex(round(x, 1), round(y, 1))
        if all(abs(z - w) > 0.5 for w, _ in pts):
            pts.append((z, m))
    p = poly_from_factors(pts)
    rs = find_roots(p)
    assert rs.degree == p.degree
    for z, m in pts:
        near = [r for r in rs.roots if abs(r.location - z) < 1e-4 * max(1, abs(z))]
        assert len(near) == 1 and near[0].multiplicity == m
