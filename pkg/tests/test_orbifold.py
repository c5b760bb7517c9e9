import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from snowdyn import builtin, catalog_names
from snowdyn import orbifold as orb
from snowdyn.ratmap import cached_portrait, point_label, portrait


@pytest.mark.parametrize("sig", orb.PARABOLIC_SIGNATURES)
def test_parabolic_list(sig):
    s = orb.OrbifoldSignature(sig)
    assert s.euler_characteristic == 0
    assert orb.classify(s) == "parabolic"


def test_euler_characteristic_exact():
    assert orb.euler_characteristic((2, 60, 60)) == Fraction(-7, 15)
    assert orb.euler_characteristic(()) == 2
    assert orb.classify(orb.OrbifoldSignature((2, 3, 7))) == "hyperbolic"


@pytest.mark.parametrize("bad", [(1, 2), (2, 0), (2.0, 3), (True, 2), (2, float("inf"))])
def test_signature_rejects_non_integers(bad):
    with pytest.raises(ValueError):
        orb.OrbifoldSignature(bad)


@given(st.lists(st.integers(2, 100), min_size=1, max_size=6))
def test_any_entry_at_least_12_is_hyperbolic_with_three_or_more(vals):
    if len(vals) >= 3 and max(vals) >= 12:
        assert orb.classify(orb.OrbifoldSignature(tuple(vals))) == "hyperbolic"


def test_rhat_signature(rhat):
    port = cached_portrait(rhat)
    nu = orb.ramification_function(port)
    by_label = {point_label(port.points[p], 3): v for p, v in nu.items()}
    assert by_label == {"1": 60, "-1": 60, "inf": 2}
    sig = orb.signature(port)
    assert sig.values == (2, 60, 60)
    assert orb.classify(sig) == "hyperbolic"
    md = {point_label(port.points[p], 3): v for p, v in orb.maxdeg_table(port).items()}
    assert md == {"1": 5, "-1": 5, "inf": 2}


def test_lattes_signature(lattes):
    port = portrait(lattes)
    sig = orb.signature(port)
    assert sig.values == (2, 2, 2, 2) and orb.classify(sig) == "parabolic"
    assert set(orb.maxdeg_table(port).values()) == {2}


def test_critical_cycle_diverges():
    with pytest.raises(orb.Diverges):
        orb.ramification_function(portrait(builtin("squaring")))


@pytest.mark.parametrize("name", ["rhat", "rhat_sym", "lattes_2222"])
def test_divisibility_and_minimality(name):
    port = cached_portrait(builtin(name))
    nu = orb.ramification_function(port)
    assert orb.divisibility_violations(port, nu) == []
    for p, v in nu.items():
        for d in range(1, v):
            if v % d == 0:
                smaller = dict(nu)
                smaller[p] = d
                assert orb.divisibility_violations(port, smaller), (p, d)
    assert orb.euler_characteristic(orb.signature(port)) <= 0
