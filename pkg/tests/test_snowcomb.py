import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snowdyn import snowcomb as sc


def grid(N, skip=()):
    return [((x, y, 0), "xy") for y in range(N) for x in range(N) if (x, y) not in skip]


def cap(c, top=True):
    faces = [((c, c, 0), "yz"), ((c + 1, c, 0), "yz"), ((c, c, 0), "xz"), ((c, c + 1, 0), "xz")]
    return faces + ([((c, c, 1), "xy")] if top else [])


def corner_bumps(N):
    """Boxes raised over the four corner squares: two faces meet each corner."""
    faces = grid(N, {(0, 0), (N - 1, 0), (0, N - 1), (N - 1, N - 1)})
    for x, y in ((0, 0), (N - 1, 0), (0, N - 1), (N - 1, N - 1)):
        faces += [((x, y, 1), "xy"), ((x, y, 0), "yz"), ((x + 1, y, 0), "yz"),
                  ((x, y, 0), "xz"), ((x, y + 1, 0), "xz")]
    return faces


def spec(N, faces, name="t"):
    return sc.GeneratorSpec(N, tuple(faces), name)


ADVERSARIAL = {
    "grid": spec(5, grid(5)[:-1] + [((4.5, 4, 0), "xy")]),
    "boundary": spec(5, grid(5, {(2, 2)})),  # open hole in the middle
    "disk": spec(5, grid(5) + cap(2)),  # closed box on a full square: pinched edges
    "symmetry": spec(5, grid(5, {(1, 2)}) + [((1, 2, 0), "yz"), ((2, 2, 0), "yz"), ((1, 2, 0), "xz"),
                                             ((1, 3, 0), "xz"), ((1, 2, 1), "xy")]),
    "corner": spec(5, corner_bumps(5)),
}


@pytest.mark.parametrize("clause", sc.CLAUSES)
def test_adversarial_corpus(clause):
    with pytest.raises(sc.ValidationFailure) as info:
        sc.build_generator(ADVERSARIAL[clause])
    assert info.value.clause == clause


def test_other_grid_failures():
    for bad in (spec(1, [((0, 0, 0), "xy")]), spec(2, [((0, 0, 0), "zz")]), spec(2, grid(2) + grid(2)[:1])):
        with pytest.raises(sc.ValidationFailure) as info:
            sc.build_generator(bad)
        assert info.value.clause == "grid"


def test_bundled_generators():
    g = {n: sc.build_generator(sc.load_generator_spec(n)) for n in sc.bundled_generators()}
    assert set(g) == {"trivial_5", "main_29", "cube3_13"}
    assert (g["trivial_5"].M, g["trivial_5"].embeddable) == (25, True)
    assert (g["main_29"].M, g["main_29"].N, g["main_29"].embeddable) == (29, 5, True)
    assert (g["cube3_13"].M, g["cube3_13"].N) == (13, 3)
    # the cap's top corners touch the pyramid faces when N = 3
    assert not g["cube3_13"].embeddable
    assert g["main_29"].edge_count == 68


def test_hausdorff_dimensions(main29):
    assert math.isclose(sc.snowsphere_hausdorff_dim(main29), math.log(29) / math.log(5))
    assert round(sc.snowsphere_hausdorff_dim(main29), 4) == 2.0922
    triv = sc.build_generator(sc.load_generator_spec("trivial_5"))
    assert math.isclose(sc.snowsphere_hausdorff_dim(triv), 2.0)
    assert round(sc.snowsphere_hausdorff_dim((13, 3)), 3) == 2.335


def test_cube_level_zero(main29):
    cx = sc.subdivide(main29, 0)
    assert cx.count(0) == 6
    indptr, indices = cx.adjacency(0)
    for f in range(6):
        nbrs = set(indices[indptr[f] : indptr[f + 1]].tolist())
        opposite = f ^ 1
        assert nbrs == set(range(6)) - {f, opposite}
    assert sc.chain_distance(cx, sc.PointAddress(0), sc.PointAddress(1), 0) == 3.0


def test_counts_and_parents(main29_complex):
    cx = main29_complex
    for j in range(4):
        assert cx.count(j) == 6 * 29**j
    gen = np.random.default_rng(0)
    for i in gen.integers(0, cx.count(3), 50):
        a = cx.address(int(i), 3)
        assert cx.index(a) == i
        assert cx.index(a.prefix(2)) == cx.parent(int(i))
        assert str(sc.PointAddress.parse(str(a))) == str(a)
    # every child lies inside its parent: corners shared with the parent are its corners
    for i in gen.integers(0, cx.count(2), 20):
        kids = cx.quads[3][i * 29 : (i + 1) * 29]
        corners = set(cx.quads[2][i].tolist())
        assert all(len(corners & set(k.tolist())) <= 1 for k in kids)
        assert sum(bool(corners & set(k.tolist())) for k in kids) == 4


def test_single_face_base(main29):
    cx = sc.subdivide(main29, 1, base="single-face")
    assert cx.count(1) == 29


def test_adjacency_symmetric(main29_complex):
    for j in range(3):
        indptr, indices = main29_complex.adjacency(j)
        n = len(indptr) - 1
        src = np.repeat(np.arange(n), np.diff(indptr))
        fwd = set(zip(src.tolist(), indices.tolist()))
        assert all((v, u) in fwd for u, v in fwd)
        assert all(u != v for u, v in fwd)


def test_vertex_touching_counts(main29_complex):
    # a flat interior child touches 8 others, as in a square grid
    cx = main29_complex
    indptr, _ = cx.adjacency(1)
    assert np.diff(indptr).max() >= 8


def test_chain_distance_basics(main29_complex):
    cx = main29_complex
    x = sc.PointAddress(2, (3, 17, 5))
    for j in range(4):
        assert cx.index(x, j) == cx.index(x.prefix(j))
        assert sc.chain_distance(cx, x, x, j) == 5.0**-j


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_chain_metric_axioms(main29_complex, seed):
    cx = main29_complex
    gen = np.random.default_rng(seed)
    x, y, z = (sc.random_address(cx, 3, gen) for _ in range(3))
    for j in range(4):
        dxy = sc.chain_distance(cx, x, y, j)
        assert dxy == sc.chain_distance(cx, y, x, j)
        # concatenated chains share an endpoint cylinder
        assert sc.chain_distance(cx, x, z, j) <= dxy + sc.chain_distance(cx, y, z, j)


@pytest.mark.parametrize("name", ["trivial_5", "main_29", "cube3_13"])
def test_annulus_crossing(name):
    g = sc.build_generator(sc.load_generator_spec(name))
    cx = sc.subdivide(g, 2)
    mins = [sc.annulus_crossing_min(cx, j) for j in (0, 1)]
    assert min(mins) >= g.N
    if name == "trivial_5":
        assert mins == [5, 5]


def test_annulus_needs_next_level(main29):
    cx = sc.subdivide(main29, 1)
    with pytest.raises(sc.BudgetExceeded):
        sc.annulus_crossing_min(cx, 1)


def test_budget(main29):
    with pytest.raises(sc.BudgetExceeded):
        sc.subdivide(main29, 5)
    assert sc.default_levels(main29) == 4


def test_metric_probe_monotone_and_bounded(main29, main29_complex):
    cx = main29_complex
    gen = np.random.default_rng(4)
    for _ in range(50):
        x, y = sc.random_address(cx, 3, gen), sc.random_address(cx, 3, gen)
        p = sc.metric_probe(cx, x, y, 3)
        assert p.monotone and p.within_bound
        if p.first_disjoint is not None:
            m = p.first_disjoint
            lo, hi = sc.separation_bounds(main29, m)
            assert p.distances[m] >= 3 * 5.0**-m
            assert all(lo <= d <= hi for d in p.distances[m:])


def test_metric_probe_identical_points(main29_complex):
    x = sc.PointAddress(1, (0, 4, 28))
    p = sc.metric_probe(main29_complex, x, x, 3)
    assert p.distances == tuple(5.0**-j for j in range(4))
    assert p.first_disjoint is None


def test_equivalent_addresses(main29_complex):
    cx = main29_complex
    gen = np.random.default_rng(6)
    for level in (0, 1, 2):
        for _ in range(10):
            a, b = sc.equivalent_pair(cx, 3, gen, level)
            for j in range(4):
                assert sc.chain_distance(cx, a, b, j) <= 2 * 5.0**-j
            y = sc.random_address(cx, 3, gen)
            for j in range(4):
                diff = abs(sc.chain_distance(cx, a, y, j) - sc.chain_distance(cx, b, y, j))
                assert diff <= 2 * 5.0**-j + 1e-15


def _graph(cx, j):
    g = nx.Graph()
    g.add_nodes_from(range(cx.count(j)))
    g.add_edges_from(sc.adjacency_edges(cx, j))
    return g


@pytest.mark.parametrize("name", ["main_29", "cube3_13"])
def test_orientation_independence(name):
    g = sc.build_generator(sc.load_generator_spec(name))
    canon = sc.subdivide(g, 2)
    for seed in (1, 2):
        rolled = sc.subdivide(g, 2, orientation_rng=np.random.default_rng(seed))
        assert rolled.vertex_count == canon.vertex_count
        assert nx.is_isomorphic(_graph(canon, 1), _graph(rolled, 1))
        h1 = nx.weisfeiler_lehman_graph_hash(_graph(canon, 2), iterations=4)
        h2 = nx.weisfeiler_lehman_graph_hash(_graph(rolled, 2), iterations=4)
        assert h1 == h2
        assert sc.annulus_crossing_min(rolled, 1) == sc.annulus_crossing_min(canon, 1)
