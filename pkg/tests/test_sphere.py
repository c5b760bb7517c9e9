import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snowdyn.polyroots import Polynomial, poly_add, poly_mul, poly_pow, poly_scale
from snowdyn.ratmap import RationalMap, evaluate
from snowdyn.sphere import (
    INF,
    ONE,
    ZERO,
    RngStream,
    ZeroPoint,
    as_point,
    chordal_distance,
    chordal_distance_array,
    normalize,
    sample_sphere,
    sample_unit_square,
    spherical_derivative,
)

finite = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def test_normalize_is_canonical():
    p = normalize(3 + 4j, 0)
    assert p == INF
    assert normalize(0, 5) == ZERO
    assert normalize(2, 2) == ONE  # ties divide by b
    assert normalize(1, 1e-20).is_infinity
    with pytest.raises(ZeroPoint):
        normalize(0, 0)
    with pytest.raises(ZeroPoint):
        normalize(float("nan"), 1)


@given(finite, finite)
def test_normalize_scale_invariant(a, b):
    if a == 0 and b == 0:
        return
    p = normalize(a, b)
    q = normalize(2.5j * a, 2.5j * b)
    assert max(abs(p.a), abs(p.b)) == 1
    assert chordal_distance(p, q) < 1e-12


def test_known_distances():
    assert chordal_distance(0, INF) == 2.0
    assert math.isclose(chordal_distance(0, 1), math.sqrt(2))
    assert math.isclose(chordal_distance(1, -1), 2.0)
    assert math.isclose(chordal_distance(1j, INF), math.sqrt(2))


@given(finite, finite, finite)
def test_metric_axioms(x, y, z):
    dxy = chordal_distance(x, y)
    assert 0 <= dxy <= 2
    assert dxy == chordal_distance(y, x)
    assert chordal_distance(x, z) <= dxy + chordal_distance(y, z) + 1e-12


@given(finite, finite)
def test_inversion_is_an_isometry(x, y):
    if x == 0 or y == 0:
        return
    d1 = chordal_distance(x, y)
    d2 = chordal_distance(1 / x, 1 / y)
    assert abs(d1 - d2) <= 1e-9 * max(1.0, d1)


def test_distance_array_matches_scalar():
    gen = np.random.default_rng(0)
    p = sample_sphere(gen, 50)
    q = sample_sphere(gen, 50)
    arr = chordal_distance_array(p, q)
    for k in range(50):
        assert math.isclose(arr[k], chordal_distance(normalize(*p[k]), normalize(*q[k])), rel_tol=1e-12)


def test_sphere_sampling_is_uniform():
    # fraction within chordal distance r of 0 is r^2 / 4
    gen = np.random.default_rng(1)
    pts = sample_sphere(gen, 200_000)
    d = chordal_distance_array(pts, np.array([[0, 1]], dtype=complex))
    assert abs(np.mean(d < 1.0) - 0.25) < 0.005
    assert np.allclose(np.maximum(np.abs(pts[:, 0]), np.abs(pts[:, 1])), 1.0, rtol=0, atol=1e-15)


def test_rng_stream_reproducible():
    a = RngStream(42).generator().random(5)
    b = RngStream(42).generator().random(5)
    c = RngStream(42, 1).generator().random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert RngStream(7).child(3) == RngStream(7).child(3)
    assert RngStream(7).child(3) != RngStream(7).child(4)
    z = sample_unit_square(RngStream(3)).to_complex()
    assert 0 <= z.real <= 1 and 0 <= z.imag <= 1


def _compose(r: RationalMap, s: RationalMap) -> RationalMap:
    d = r.degree
    num = den = None
    for k in range(d + 1):
        term = poly_mul(poly_pow(Polynomial(s.num_h), k), poly_pow(Polynomial(s.den_h), d - k))
        if r.num_h[k] != 0:
            t = poly_scale(term, r.num_h[k])
            num = t if num is None else poly_add(num, t)
        if r.den_h[k] != 0:
            t = poly_scale(term, r.den_h[k])
            den = t if den is None else poly_add(den, t)
    return RationalMap(num, den, f"{r.label}o{s.label}")


def test_spherical_derivative_chain_rule(lattes):
    quad = RationalMap(Polynomial([-1, 0, 1]), Polynomial([1]), "quad")
    mob = RationalMap(Polynomial([0.3 + 0.1j, 2]), Polynomial([1, 0.5j]), "mob")
    gen = np.random.default_rng(5)
    for r, s in ((lattes, quad), (quad, mob), (mob, lattes)):
        rs = _compose(r, s)
        pts = sample_sphere(gen, 1000)
        for a, b in pts:
            z = normalize(a, b)
            lhs = spherical_derivative(rs, z)
            rhs = spherical_derivative(r, evaluate(s, z)) * spherical_derivative(s, z)
            if rhs < 1e-6:  # next to a critical point of the composition
                continue
            assert abs(lhs - rhs) <= 1e-9 * rhs


def test_spherical_derivative_closed_forms():
    sq = RationalMap(Polynomial([0, 0, 1]), Polynomial([1]), "sq")
    for z in (0.3, 2 + 1j, -0.7j):
        expect = 2 * abs(z) * (1 + abs(z) ** 2) / (1 + abs(z) ** 4)
        assert math.isclose(spherical_derivative(sq, z), expect, rel_tol=1e-13)
    assert spherical_derivative(sq, INF) == 0.0
    inv = RationalMap(Polynomial([1]), Polynomial([0, 1]), "inv")
    for z in (0, INF, 1 + 1j, cmath.rect(3, 1)):
        assert math.isclose(spherical_derivative(inv, as_point(z)), 1.0, rel_tol=1e-13)
