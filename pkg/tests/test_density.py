import math

import numpy as np
import pytest

from snowdyn import RngStream
from snowdyn import density as dens
from snowdyn.polyroots import Polynomial
from snowdyn.ratmap import RationalMap
from snowdyn.sphere import INF, SpherePoint, normalize, sample_sphere


def pts_away(rmap, n, seed, margin=1e-2):
    p = sample_sphere(np.random.default_rng(seed), 4 * n)
    return p[dens.postcritical_distance(rmap, p) > margin][:n]


def test_kappa_zero_is_one(rhat):
    assert dens.kappa_j(rhat, 0.3 + 0.1j, 0) == 1.0


def test_fiber_audit_and_caps(rhat, lattes):
    assert dens.j_cap(rhat) == 3 and dens.j_cap(lattes) == 7
    with pytest.raises(ValueError):
        dens.kappa_j(rhat, 0.3, 4)
    f = dens.kappa_field(rhat, pts_away(rhat, 5, 0), 2)
    assert np.all(f.fiber_count == 29**2)


def test_too_close_to_postcritical(rhat):
    with pytest.raises(dens.TooClosePostcritical):
        dens.kappa_j(rhat, 1 + 1e-5, 1)
    assert dens.kappa_j(rhat, 1 + 1e-5, 1, exclusion=None) > 0


def test_degree_one_rotation_preserves_lebesgue():
    rot = RationalMap(Polynomial([0, 1j]), Polynomial([1]), "rot")
    for z in (0.2, 3 + 1j, INF):
        assert math.isclose(dens.kappa_j(rot, z, 3, exclusion=None), 1.0, rel_tol=1e-13)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_recursion(lattes, rhat, j):
    for m, n in ((lattes, 20), (rhat, 5 if j == 3 else 10)):
        for a, b in pts_away(m, n, j):
            z = SpherePoint(complex(a), complex(b))
            x = dens.kappa_j(m, z, j)
            y = dens.kappa_recursive(m, z, j)
            assert abs(x - y) <= 1e-6 * x


def test_kappa_one_has_unit_mass(lattes):
    res = dens.normalization_check(lattes, 1, 200_000, RngStream(1))
    assert abs(res.total - 1) < 4 * res.stderr + 1e-3
    assert 0 < res.excluded_mass < 1e-3


def test_pushforward_identity(lattes):
    bumps = dens.default_bumps(lattes, count=3)
    rows = dens.pushforward_check(lattes, 2, bumps + [dens.constant_one], 50_000, RngStream(2))
    for r in rows:
        assert abs(r.deviation) < 5 * r.stderr + 2e-3, r


def test_inadmissible_test_function(lattes):
    with pytest.raises(ValueError):
        dens.pushforward_check(lattes, 1, [dens.Bump(normalize(1, 1), 0.2)], 10, RngStream(0))


def test_blowup_at_lattes_points(lattes):
    for p in (0, 1, -1, INF):
        fit = dens.blowup_fit(lattes, p, 3)
        assert fit.maxdeg == 2 and fit.predicted == -1.0
        assert abs(fit.slope + 1.0) < 0.05


def test_blowup_needs_two_decades(lattes):
    with pytest.raises(ValueError):
        dens.blowup_fit(lattes, 1, 2, radii=(1e-3, 5e-4, 2e-4, 1e-4))


def test_blowup_rhat_at_one(rhat):
    fit = dens.blowup_fit(rhat, 1, 2)
    assert fit.maxdeg == 5 and math.isclose(fit.predicted, -1.6)
    assert abs(fit.slope - fit.predicted) < 0.2


def test_jacobian_lattes(lattes):
    # the measure of maximal entropy is invariant with constant Jacobian deg R
    for a, b in pts_away(lattes, 5, 11):
        z = SpherePoint(complex(a), complex(b))
        assert abs(dens.jacobian_estimate(lattes, z, 4) - 4) < 0.1


def test_rohlin_lattes(lattes):
    res = dens.rohlin_entropy(lattes, 1000, 3, RngStream(5))
    assert res.relative_gap < 0.05
    assert abs(res.h - math.log(4)) < 0.05


def test_oscillation_shrinks(lattes):
    centres = np.array([normalize(z, 1).pair() for z in (0.5 + 0.5j, -0.4 + 1.3j, 2 - 1j)])
    worst = []
    for delta in (0.1, 0.03, 0.01):
        worst.append(max(dens.oscillation(lattes, j, delta, centres) for j in (1, 2, 3)))
    assert worst[0] > worst[1] > worst[2]
