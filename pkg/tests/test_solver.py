import json

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from torsionlab.errors import InvalidArgument, OutOfDomain
from torsionlab.geometry import Polygon, make_disk, make_rectangle, make_regular_polygon, triangulate
from torsionlab.solver import (
    ScalarField,
    assemble,
    barrier_sandwich_check,
    discretization_slack,
    interpolate,
    pcg_jacobi,
    poisson_solve,
    solve_sequence,
)


def _square_series(x, y, terms=199):
    """Torsion function of the unit square by double sine series."""
    out = 0.0
    for m in range(1, terms + 1, 2):
        for n in range(1, terms + 1, 2):
            out += 16 / (np.pi**4 * m * n * (m * m + n * n)) * np.sin(m * np.pi * x) * np.sin(n * np.pi * y)
    return out


def _square_rigidity(terms=399):
    m = np.arange(1, terms + 1, 2, dtype=float)
    M, N = np.meshgrid(m, m)
    return float(np.sum(64 / (np.pi**6 * M**2 * N**2 * (M**2 + N**2))))


@pytest.fixture(scope="module")
def square_field():
    return poisson_solve(triangulate(make_rectangle(1.0, 1.0, center=(0.5, 0.5)), 0.02, 0.5, 3))


def test_square_against_series(square_field):
    pts = np.array([[0.5, 0.5], [0.25, 0.25], [0.1, 0.7]])
    ref = np.array([_square_series(*p) for p in pts])
    assert interpolate(square_field, pts) == pytest.approx(ref, abs=2e-4)
    iu = float(np.sum(square_field.mesh.areas * square_field.values[square_field.mesh.triangles].mean(axis=1)))
    assert iu == pytest.approx(_square_rigidity(), rel=2e-3)


def test_disk_convergence():
    errs = []
    for h in (0.08, 0.04, 0.02):
        f = poisson_solve(triangulate(make_disk(1.0, 256), h))
        errs.append(abs(float(interpolate(f, [[0, 0]])[0]) - 0.25))
    assert errs[-1] < 2e-4
    assert errs[0] > errs[1] > errs[2]


def test_assembly_properties():
    m = triangulate(make_regular_polygon(6, 1.0), 0.2)
    K, b = assemble(m)
    assert abs(K - K.T).max() < 1e-14
    # constants are in the kernel of the full stiffness matrix
    assert np.abs(K @ np.ones(m.n_nodes)).max() < 1e-12
    assert float(b.sum()) == pytest.approx(m.domain.area if m.domain is not None else np.sum(m.areas), rel=1e-12)


def test_pcg_matches_direct_solve():
    rng = np.random.default_rng(0)
    n = 200
    A = sp.random(n, n, density=0.05, random_state=rng)
    A = (A @ A.T + sp.identity(n) * 5).tocsr()
    b = rng.normal(size=n)
    x, res, it = pcg_jacobi(A, b, rtol=1e-12)
    assert res <= 1e-12 and it > 0
    assert x == pytest.approx(spsolve(A.tocsc(), b), rel=1e-9, abs=1e-12)


def test_solution_positive_and_residual(square_field):
    f = square_field
    assert f.residual <= 1e-10
    interior = ~f.mesh.boundary
    assert np.all(f.values[interior] > 0)
    assert np.all(f.values[f.mesh.boundary] == 0)
    assert f.n_clamped == 0


def test_interpolate_is_exact_for_linear_data(square_field):
    m = square_field.mesh
    lin = 2 * m.nodes[:, 0] - 3 * m.nodes[:, 1] + 1
    g = ScalarField(m, lin, 0.0, m.h)
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 1, (300, 2))
    assert interpolate(g, pts) == pytest.approx(2 * pts[:, 0] - 3 * pts[:, 1] + 1, abs=1e-12)
    with pytest.raises(OutOfDomain):
        interpolate(g, [[1.5, 0.5]])


def test_field_json_roundtrip_bit_exact(tmp_path, square_field):
    path = tmp_path / "f.json"
    square_field.save(path)
    back = ScalarField.from_json(json.loads(path.read_text()))
    assert np.array_equal(back.values, square_field.values)
    assert np.array_equal(back.mesh.nodes, square_field.mesh.nodes)
    assert back.residual == square_field.residual


def test_solve_sequence_orders():
    seq = solve_sequence(make_rectangle(1.0, 1.0), 0.1, 3)
    assert len(seq.fields) == 3 and seq.hs == [0.1, 0.05, 0.025]
    assert seq.orders["integral_u"][0] == pytest.approx(2.0, abs=0.5)
    assert seq.extrapolated["integral_u"] == pytest.approx(_square_rigidity(), rel=1e-4)
    with pytest.raises(InvalidArgument):
        solve_sequence(make_rectangle(1.0, 1.0), 0.1, 1)


def test_discretization_slack():
    assert discretization_slack(0.01) == pytest.approx(5e-4 * np.log(100))


def test_sandwich_reports(square_field):
    rep = barrier_sandwich_check(square_field, 0, r=0.4)
    assert rep["ok"] and rep["lower_gap"] > -rep["slack"]
    assert rep["wedge_gap"] is None
    tri = Polygon([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
    ft = poisson_solve(triangulate(tri, 0.02, 0.5, 3))
    rt = barrier_sandwich_check(ft, [0.0, 0.0], r=0.3)
    assert rt["wedge_ok"] is True
    with pytest.raises(InvalidArgument):
        barrier_sandwich_check(square_field, 0, r=2.0)
    with pytest.raises(InvalidArgument):
        barrier_sandwich_check(square_field, [0.3, 0.3])


def test_determinism():
    p = Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
    a = poisson_solve(triangulate(p, 0.05, 0.5, 3))
    b = poisson_solve(triangulate(p, 0.05, 0.5, 3))
    assert a.values.tobytes() == b.values.tobytes()
