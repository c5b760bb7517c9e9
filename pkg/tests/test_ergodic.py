import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from snowdyn import RngStream, builtin
from snowdyn import ergodic as erg
from snowdyn.polyroots import Polynomial
from snowdyn.ratmap import RationalMap
from snowdyn.sphere import chordal_distance, normalize


@given(st.floats(0.05, 5), st.integers(2, 9), st.integers(4, 100))
def test_formula_identities(chi, N, deg):
    assert math.isclose(erg.alpha_exponent(chi, N) * erg.dim_mu(chi, N), 2.0, rel_tol=1e-12)
    gap = erg.jensen_gap(chi, deg)
    assert math.isclose(gap, math.log(deg) - math.log(N) * erg.dim_mu(chi, N), abs_tol=1e-12)


def test_formula_guards():
    with pytest.raises(erg.NonPositiveChi):
        erg.dim_mu(0.0, 5)
    assert math.isclose(erg.hausdorff_dimension(29, 5), math.log(29) / math.log(5))


def test_lattes_single_orbit(lattes):
    run = erg.birkhoff_lyapunov(lattes, 0.3 + 0.4j, 10_000)
    assert abs(run.chi - math.log(2)) < 0.005
    assert run.perturbations == 0


def test_critical_hit_is_perturbed(lattes):
    run = erg.birkhoff_lyapunov(lattes, 1j, 100)
    assert run.perturbations >= 1 and math.isfinite(run.chi)


def test_superattracting_orbit_degenerates():
    with pytest.raises(erg.DegenerateOrbit):
        erg.birkhoff_lyapunov(builtin("squaring"), 0.5, 1000)
    with pytest.raises(erg.ExperimentFailed) as info:
        erg.dimension_experiment(builtin("squaring"), 2, 10, 500, RngStream(1))
    assert len(info.value.report.excluded) > 1


def test_experiment_deterministic(rhat):
    a = erg.dimension_experiment(rhat, 5, 6, 1000, RngStream(9))
    b = erg.dimension_experiment(rhat, 5, 6, 1000, RngStream(9))
    c = erg.dimension_experiment(rhat, 5, 6, 1000, RngStream(10))
    assert a == b and a.chis != c.chis
    assert a.seeds == 6 and len(a.dims) == 6


def test_birkhoff_convergence(rhat):
    a = erg.dimension_experiment(rhat, 5, 100, 5000, RngStream(42))
    b = erg.dimension_experiment(rhat, 5, 100, 10_000, RngStream(42))
    assert abs(a.mean_chi - b.mean_chi) < 0.005


@pytest.mark.parametrize("name", ["rhat", "rhat_sym", "lattes_2222"])
def test_jensen_bound(name):
    m = builtin(name)
    rep = erg.dimension_experiment(m, m.provenance["expansion"], 20, 5000, RngStream(3))
    assert 2 * rep.mean_chi <= math.log(m.degree) + 0.02


def test_lattes_equality_case(lattes):
    rep = erg.dimension_experiment(lattes, 2, 30, 10_000, RngStream(4))
    assert abs(rep.mean_dim - 2) < 0.01
    assert abs(2 * rep.mean_chi - math.log(4)) < 0.01


def test_itinerary_symbols(rhat):
    it = erg.itinerary(rhat, 0.3 + 0.2j, 6)
    assert it[0] == erg.UPPER and len(it) == 6
    assert erg.itinerary(rhat, 0.3 - 0.2j, 1) == [erg.LOWER]
    assert erg.itinerary(rhat, 0.4, 3) == [erg.BOUNDARY] * 3  # the real line is invariant


def test_non_real_postcritical_rejected():
    m = RationalMap(Polynomial([1j, 0, 1]), Polynomial([1]), "z2+i")
    with pytest.raises(erg.NotRealPostcritical):
        erg.itinerary(m, 0.1 + 0.1j, 3)


def test_snow_metric_examples(rhat):
    x = normalize(0.2 + 0.3j, 1)
    same = erg.snow_metric_estimate(rhat, x, x, 5, 30)
    assert same.saturated and same.value == 5.0**-30
    far = erg.snow_metric_estimate(rhat, 0.2 + 0.3j, 0.2 - 0.3j, 5, 30)
    assert far.level == 0 and far.value == 1.0


def _ranks(v):
    order = np.argsort(v, kind="stable")
    r = np.empty(len(v))
    r[order] = np.arange(len(v))
    # average ranks over ties
    vals, inv = np.unique(v, return_inverse=True)
    sums = np.bincount(inv, weights=r)
    return (sums / np.bincount(inv))[inv]


def test_snow_metric_tracks_chordal_distance(rhat):
    gen = np.random.default_rng(8)
    est, dist = [], []
    for _ in range(500):
        x = complex(*gen.random(2))
        r = 10 ** (-gen.uniform(1, 10))
        y = x + r * np.exp(2j * np.pi * gen.random())
        px, py = normalize(x, 1), normalize(y, 1)
        est.append(erg.snow_metric_estimate(rhat, px, py, 5, 60).value)
        dist.append(chordal_distance(px, py))
    rho = np.corrcoef(_ranks(np.array(est)), _ranks(np.array(dist)))[0, 1]
    assert rho > 0.9


def test_holder_probe_excludes_coincident_pairs(lattes):
    tab = erg.holder_probe(lattes, 2, math.log(2), 20, [0.0, 1e-4], RngStream(5), jmax=60)
    zero = [r for r in tab.rows if r.radius == 0.0][0]
    assert zero.used == 0 and zero.excluded == 20 and math.isnan(zero.median_ratio)
    assert tab.smallest is zero
    assert math.isclose(tab.alpha, 1.0)
