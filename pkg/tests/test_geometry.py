import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import Point
from shapely.geometry import Polygon as SPoly

from torsionlab.errors import InvalidArgument, MeshingFailure, NotConvex
from torsionlab.geometry import (
    CuspProfile,
    Polygon,
    TriMesh,
    chebyshev_center,
    convex_descriptors,
    domain_from_json,
    make_curvilinear_triangle,
    make_cusp_domain,
    make_disk,
    make_rectangle,
    make_regular_polygon,
    make_sector,
    max_admissible_radius,
    min_enclosing_ball,
    polygon_distance,
    triangulate,
    triangulate_graph,
)

L_SHAPE = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]


def test_polygon_orientation_and_measures():
    p = Polygon(L_SHAPE[::-1])
    assert p.area == pytest.approx(3.0)
    assert np.array_equal(p.vertices, np.asarray(L_SHAPE, float))  # clockwise input is reversed
    assert p.perimeter == pytest.approx(8.0)
    assert p.diameter == pytest.approx(np.sqrt(8))
    assert np.sort(p.interior_angles) == pytest.approx(sorted([np.pi / 2] * 5 + [1.5 * np.pi]))
    assert not p.is_convex()


@pytest.mark.parametrize(
    "verts",
    [
        [[0, 0], [1, 0]],
        [[0, 0], [1, 0], [2, 0]],
        [[0, 0], [1, 1], [1, 0], [0, 1]],
        [[0, 0], [1, 0], [1, 0], [0, 1]],
        [[0, 0], [np.nan, 0], [0, 1]],
    ],
)
def test_polygon_rejects_invalid(verts):
    with pytest.raises(InvalidArgument):
        Polygon(verts)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=5, max_size=30))
def test_polygon_area_matches_shapely_hull(pts):
    hull = SPoly(pts).convex_hull
    if hull.geom_type != "Polygon" or hull.area < 1e-3:
        return
    coords = np.asarray(hull.exterior.coords)[:-1]
    try:
        p = Polygon(coords)
    except InvalidArgument:
        return
    assert p.area == pytest.approx(hull.area, rel=1e-12)
    assert p.is_convex(tol=1e-9)


def test_contains_matches_shapely():
    p = Polygon(L_SHAPE)
    sp = SPoly(L_SHAPE)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-0.5, 2.5, (2000, 2))
    ref = np.array([sp.contains(Point(*q)) for q in pts])
    assert np.array_equal(p.contains(pts), ref)


def test_polygon_distance_matches_shapely():
    p = Polygon(L_SHAPE)
    ring = SPoly(L_SHAPE).exterior
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1, 3, (500, 2))
    ref = np.array([ring.distance(Point(*q)) for q in pts])
    assert polygon_distance(p, pts) == pytest.approx(ref, abs=1e-13)


def test_regular_polygon_inradius():
    for N in (4, 7, 64):
        p = make_regular_polygon(N, 2.0)
        _, rin = chebyshev_center(p)
        assert rin == pytest.approx(2.0, rel=1e-9)
        assert p.area == pytest.approx(N * 4.0 * np.tan(np.pi / N))


def test_sector_closures():
    s = make_sector(np.pi / 6, 2.0, "chord")
    assert len(s) == 3
    assert s.area == pytest.approx(0.5 * 4 * np.sin(np.pi / 3))
    arc = make_sector(np.pi / 2, 1.0, "arc", 128)
    assert np.all(np.linalg.norm(arc.vertices[1:], axis=1) == pytest.approx(1.0))
    assert arc.area < np.pi / 2
    with pytest.raises(InvalidArgument):
        make_sector(np.pi / 2, 1.0, "chord")


def test_curvilinear_and_cusp_domains():
    c = make_curvilinear_triangle(0.75, 0.5, 64)
    assert len(c) == 66
    # area of {0<y<eps x^2} is eps/3; sampling error is small
    assert c.area == pytest.approx(0.5 / 3, rel=2e-3)
    prof = CuspProfile(epsilon=0.5, eta=1.0, p=2.0)
    d = make_cusp_domain(prof)
    assert d.contains([[0.0, 0.5]])[0]
    assert not d.contains([[0.2, 0.5]])[0]
    body = make_rectangle(2.0, 2.0, center=(0.0, 1.9))
    db = make_cusp_domain(prof, body=body)
    assert db.area > body.area


def test_cusp_profile_validation():
    with pytest.raises(InvalidArgument):
        CuspProfile(epsilon=0.5, eta=1.0, p=1.0)
    with pytest.raises(InvalidArgument):
        CuspProfile(epsilon=0.5, eta=1.0, samples=([0, 0.5, 1.0], [0.1, 0.2, 0.3]))
    tab = CuspProfile(epsilon=0.5, eta=1.0, samples=(np.linspace(0, 1, 101), np.linspace(0, 1, 101) ** 2))
    assert tab(0.5) == pytest.approx(0.25, abs=1e-4)
    assert tab.second_derivative_of_square(0.5) == pytest.approx(12 * 0.25, rel=1e-2)


def test_domain_from_json_roundtrip():
    p = Polygon(L_SHAPE)
    assert np.array_equal(domain_from_json(json.loads(json.dumps(p.to_json()))).vertices, p.vertices)
    assert len(domain_from_json({"type": "disk", "radius": 1, "m": 32})) == 32
    with pytest.raises(InvalidArgument):
        domain_from_json({"type": "torus"})


def test_triangulate_invariants():
    p = Polygon(L_SHAPE)
    m = triangulate(p, 0.1, 0.5, 4)
    m.check(p)
    assert m.min_angles.min() >= 20 - 1e-9
    assert float(np.sum(m.areas)) == pytest.approx(3.0, rel=1e-12)
    assert np.all(m.areas > 0)
    # graded: the smallest elements sit at the corners
    near = np.linalg.norm(m.centroids - [1, 1], axis=1) < 0.05
    assert m.diameters[near].max() < 0.5 * m.diameters[~near].max()
    # boundary flags land on the boundary
    assert polygon_distance(p, m.nodes[m.boundary]).max() < 1e-12


def test_triangulate_deterministic_and_json():
    p = make_regular_polygon(5, 1.0)
    a, b = triangulate(p, 0.1, 0.5, 3), triangulate(p, 0.1, 0.5, 3)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.triangles, b.triangles)
    c = TriMesh.from_json(json.loads(json.dumps(a.to_json())))
    assert np.array_equal(a.nodes, c.nodes) and np.array_equal(a.boundary, c.boundary)


def test_triangulate_rejects_bad_h():
    with pytest.raises(InvalidArgument):
        triangulate(make_rectangle(1, 1), -0.1)


def test_neighbors_symmetric():
    m = triangulate(make_rectangle(1, 1), 0.2)
    nb = m.neighbors
    for i, row in enumerate(nb):
        for j in row:
            if j >= 0:
                assert i in nb[j]


def test_graph_mesh_area_and_fan():
    xs = np.concatenate([[0.0], np.geomspace(1e-3, 1.0, 80)])
    m = triangulate_graph(lambda a: 0 * a, lambda a: a**2, xs, 8, corners=[[0, 0]])
    # walls are chords between columns, so the area is the trapezoid sum
    chords = float(np.sum(np.diff(xs) * 0.5 * (xs[1:] ** 2 + xs[:-1] ** 2)))
    assert float(np.sum(m.areas)) == pytest.approx(chords, rel=1e-12)
    assert not m.boundary[m.triangles].all(axis=1).any()
    mt = triangulate_graph(lambda a: -(a**2), lambda a: a**2, xs, 8, transpose=True)
    assert np.all(mt.areas > 0)
    assert float(np.sum(mt.areas)) == pytest.approx(2 * chords, rel=1e-12)


def test_convex_descriptors_and_balls():
    sq = make_rectangle(2.0, 2.0)
    rin, rout, ecc = convex_descriptors(sq)
    assert (rin, rout, ecc) == pytest.approx((1.0, np.sqrt(2), np.sqrt(2)))
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(200, 2))
    c, r = min_enclosing_ball(pts)
    assert np.linalg.norm(pts - c, axis=1).max() <= r * (1 + 1e-12)
    with pytest.raises(NotConvex):
        convex_descriptors(Polygon(L_SHAPE))


def test_max_admissible_radius():
    assert max_admissible_radius(make_rectangle(1, 1)) == pytest.approx(0.5, rel=1e-8)
    assert max_admissible_radius(make_rectangle(1, 0.2)) == pytest.approx(0.1, rel=1e-8)
    # truncated triangles: the short top side limits R once it is short enough
    def trunc(j):
        c = 1 - 1 / j
        return Polygon([[-1, 0], [1, 0], [1 - c, c], [c - 1, c]])

    radii = [max_admissible_radius(trunc(j)) for j in (6, 8, 12, 24)]
    assert np.all(np.diff(radii) < 0)
    for j, R in zip((6, 8, 12, 24), radii):
        assert R < chebyshev_center(trunc(j))[1]
    # an equilateral triangle: every side touches the incircle
    tri = Polygon([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
    assert max_admissible_radius(tri) == pytest.approx(np.sqrt(3) / 6, rel=1e-8)


def test_disk_polygon_area():
    assert make_disk(1.0, 256).area == pytest.approx(128 * np.sin(2 * np.pi / 256))


def test_mesh_check_detects_broken_mesh():
    m = triangulate(make_rectangle(1, 1), 0.3)
    bad = TriMesh(m.nodes, m.triangles[:, ::-1], m.boundary, m.corner_tag, m.corners, m.grading_depth, m.h)
    with pytest.raises(MeshingFailure):
        bad.check()
