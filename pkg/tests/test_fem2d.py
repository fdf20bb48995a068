import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from tmcert.fem2d import (
    FEFunction,
    assemble,
    assemble_full,
    edge_integral,
    gradient,
    integrate,
    integrate_on,
    make_dofmap,
    triangle_mask,
)
from tmcert.geometry import TriMesh, preset_domain, triangulate

PI2 = math.pi**2


@pytest.fixture(scope="module")
def square8():
    return triangulate(preset_domain("rectangle"), 1 / 8)


def test_neumann_kernel_contains_constants():
    m = triangulate(preset_domain("rectangle"), 0.5)
    K, M, d = assemble(m, "neumann")
    assert d.n_free == m.n_nodes
    assert np.max(np.abs(K @ np.ones(m.n_nodes))) < 1e-14


def test_stiffness_symmetric_and_mass_rows(square8):
    K, M = assemble_full(square8)
    assert abs(K - K.T).max() < 1e-15
    # consistent mass: each row sums to a third of the adjacent triangle areas
    areas = square8.signed_areas()
    expected = np.zeros(square8.n_nodes)
    np.add.at(expected, square8.tris.ravel(), np.repeat(areas / 3, 3))
    assert np.allclose(np.asarray(M.sum(axis=1)).ravel(), expected, atol=1e-16)


def test_mass_positive_definite(square8):
    K, M, _ = assemble(square8, "dirichlet")
    lo = eigsh(M, k=1, which="SA", return_eigenvectors=False)[0]
    assert lo > 0


def test_dirichlet_rayleigh_quotient_tends_to_two_pi_sq():
    vals = []
    for n in (8, 16, 32):
        K, M, _ = assemble(triangulate(preset_domain("rectangle"), 1 / n), "dirichlet")
        vals.append(eigsh(K, k=1, M=M, sigma=0, return_eigenvectors=False)[0])
    errs = [v - 2 * PI2 for v in vals]
    assert all(e > 0 for e in errs)
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_integrate_constant_and_linear(square8):
    assert integrate(square8, lambda x, y: np.ones_like(x)) == 1.0
    assert abs(integrate(square8, lambda x, y: x) - 0.5) < 1e-12


def test_integrate_sine_product():
    m = triangulate(preset_domain("rectangle"), 1 / 64)
    v = integrate(m, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    assert abs(v - 4 / PI2) < 1e-4


def test_integrate_rejects_nonfinite(square8):
    with pytest.raises(ValueError):
        integrate(square8, lambda x, y: np.full(x.shape, np.nan))


def test_affine_gradient_exact(square8):
    u = FEFunction.interpolate(square8, lambda x, y: 0.3 - 1.5 * x + 2.25 * y)
    g = gradient(u)
    assert np.allclose(g, [-1.5, 2.25], atol=1e-13)
    # patch test: energy of an affine function is exact
    assert u.energy() == pytest.approx(1.5**2 + 2.25**2, rel=1e-13)


def test_zero_function_has_zero_gradient(square8):
    u = FEFunction(square8, np.zeros(square8.n_nodes))
    assert not np.any(gradient(u))


def test_neumann_eigenfunction_quotient_order_h2():
    errs = []
    for n in (8, 16, 32):
        m = triangulate(preset_domain("rectangle"), 1 / n)
        u = FEFunction.interpolate(m, lambda x, y: np.cos(np.pi * x))
        errs.append(abs(u.energy() / u.norm2() - PI2))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_point_evaluation_matches_linear_and_is_nan_outside(square8):
    u = FEFunction.interpolate(square8, lambda x, y: 2 * x + y)
    assert u(np.array([0.3]), np.array([0.7]))[0] == pytest.approx(1.3, abs=1e-13)
    assert np.isnan(u(np.array([1.5]), np.array([0.5]))[0])


def test_dofmap_round_trip(square8):
    d = make_dofmap(square8, "dirichlet")
    x = np.arange(d.n_free, dtype=float)
    assert np.array_equal(d.restrict(d.expand(x)), x)
    assert np.all(d.expand(x)[d.constrained] == 0)


def test_mixed_bc_pins_only_tagged_edges():
    m = triangulate(preset_domain("half_guide_mixed"), 1 / 8)
    d = make_dofmap(m, "mixed_by_tag")
    pinned = m.nodes[d.constrained]
    assert np.all(np.abs(pinned[:, 1]) < 1e-14)


def test_partial_integrals_add_up(square8):
    left = triangle_mask(square8, lambda x, y: x < 0.5)
    ones = np.ones((square8.n_tris, 3))
    assert integrate_on(square8, ones, left) + integrate_on(square8, ones, ~left) == pytest.approx(1.0, abs=1e-15)


def test_edge_trace_integral_exact_for_squares(square8):
    u = FEFunction.interpolate(square8, lambda x, y: y)
    assert edge_integral(square8, u, ((1.0, 0.0), (1.0, 1.0))) == pytest.approx(1 / 3, abs=1e-14)


def test_empty_free_set_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2]])
    bedges = np.array([[0, 1], [1, 2], [2, 0]])
    m = TriMesh(nodes, tris, bedges, ("dirichlet",) * 3, 1.0)
    with pytest.raises(ValueError):
        assemble(m, "dirichlet")
    K, M, d = assemble(m, "neumann")
    assert d.n_free == 3
