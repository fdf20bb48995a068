"""P1 finite elements on a :class:`~tmcert.geometry.TriMesh`.

Stiffness and consistent mass matrices are assembled element by element and
returned as ``scipy.sparse.csr_matrix`` objects (sorted, duplicates summed),
which is deterministic for a given mesh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .geometry import TriMesh

BCS = ("dirichlet", "neumann", "mixed_by_tag")

# tags that pin the solution to a prescribed value under ``mixed_by_tag``
ESSENTIAL_TAGS = ("dirichlet", "inner_conductor", "outer_conductor")

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True, eq=False)
class DofMap:
    """Mapping from mesh nodes to free unknowns.

    ``node_to_dof[i]`` is the dof index of node ``i`` or ``-1`` when the node
    is constrained to zero.
    """

    node_to_dof: np.ndarray
    free: np.ndarray
    constrained: np.ndarray
    bc: str

    @property
    def n_free(self) -> int:
        return len(self.free)

    @property
    def n_nodes(self) -> int:
        return len(self.node_to_dof)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Lift free-dof values (last axis first) to all nodes, zero on constraints."""
        x = np.asarray(x)
        out = np.zeros((self.n_nodes,) + x.shape[1:], dtype=x.dtype)
        out[self.free] = x
        return out

    def restrict(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u)[self.free]


def make_dofmap(mesh: TriMesh, bc: str, artificial: Optional[str] = None) -> DofMap:
    """Decide which nodes are constrained.

    Parameters
    ----------
    mesh : TriMesh
    bc : {"dirichlet", "neumann", "mixed_by_tag"}
        ``dirichlet`` pins every boundary node, ``neumann`` none.  With
        ``mixed_by_tag`` the edge tags decide; ``symmetry`` and ``neumann``
        edges are natural.
    artificial : {"dirichlet", "neumann"}, optional
        Treatment of port truncation faces under ``mixed_by_tag``
        (default: Dirichlet, which keeps eigenvalues upper bounds).
    """
    if bc not in BCS:
        raise ValueError(f"unknown boundary condition {bc!r}")
    if bc == "dirichlet":
        pinned = np.unique(mesh.boundary_edges.ravel())
    elif bc == "neumann":
        pinned = np.zeros(0, dtype=np.int64)
    else:
        tags = list(ESSENTIAL_TAGS)
        if (artificial or "dirichlet") == "dirichlet":
            tags.append("artificial")
        pinned = mesh.nodes_with_tag(*tags)
    mask = np.ones(mesh.n_nodes, bool)
    mask[pinned] = False
    free = np.nonzero(mask)[0]
    node_to_dof = -np.ones(mesh.n_nodes, dtype=np.int64)
    node_to_dof[free] = np.arange(len(free))
    return DofMap(node_to_dof, free, np.asarray(pinned, dtype=np.int64), bc)


def element_geometry(mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    """Areas ``(m,)`` and barycentric gradients ``(m, 3, 2)`` of every triangle."""
    p = mesh.nodes[mesh.tris]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    grads = np.empty((len(p), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = (y[:, j] - y[:, k]) / (2 * area)
        grads[:, i, 1] = (x[:, k] - x[:, j]) / (2 * area)
    return area, grads


def assemble_full(mesh: TriMesh, weight: Optional[np.ndarray] = None):
    """Stiffness and mass on all nodes.

    ``weight`` is an optional per-triangle coefficient multiplying the mass
    contribution (used for piecewise-constant potentials).
    """
    area, grads = element_geometry(mesh)
    ke = area[:, None, None] * np.einsum("eik,ejk->eij", grads, grads)
    w = area if weight is None else area * np.asarray(weight, float)
    me = w[:, None, None] * _LOCAL_MASS[None]
    rows = np.repeat(mesh.tris, 3, axis=1).ravel()
    cols = np.tile(mesh.tris, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    K.sort_indices()
    M.sort_indices()
    # exact symmetrisation removes last-bit asymmetry from summation order
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    return K, M


def assemble(mesh: TriMesh, bc: str = "dirichlet", artificial: Optional[str] = None):
    """Assemble the P1 pencil with essential conditions eliminated.

    Returns
    -------
    K, M : scipy.sparse.csr_matrix
        Stiffness and consistent mass restricted to free dofs.
    dofs : DofMap
    """
    dofs = make_dofmap(mesh, bc, artificial)
    if dofs.n_free == 0:
        raise ValueError("no free degrees of freedom")
    K, M = assemble_full(mesh)
    f = dofs.free
    return K[f][:, f].tocsr(), M[f][:, f].tocsr(), dofs


# -- quadrature -------------------------------------------------------------


def quadrature_points(mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    """Edge-midpoint rule: points ``(m, 3, 2)`` and weights ``(m, 3)``.

    Exact for quadratic integrands on each triangle.
    """
    p = mesh.nodes[mesh.tris]
    pts = 0.5 * (p + np.roll(p, -1, axis=1))
    area = np.abs(mesh.signed_areas())
    w = np.repeat(area[:, None] / 3.0, 3, axis=1)
    return pts, w


def integrate_values(mesh: TriMesh, values: np.ndarray) -> float:
    """Integrate integrand samples given at :func:`quadrature_points`."""
    values = np.asarray(values, float)
    _, w = quadrature_points(mesh)
    if values.shape != w.shape:
        raise ValueError(f"expected samples of shape {w.shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite integrand sample")
    per_element = (values * w).sum(axis=1)
    return math.fsum(per_element.tolist())


def integrate(mesh: TriMesh, f: Callable) -> float:
    """Integrate ``f(x, y)`` over the mesh.

    ``f`` is called once with arrays of quadrature coordinates and must be
    vectorised.  Element contributions are combined with compensated
    summation in element order, so the result does not depend on how the
    caller parallelises.

    Examples
    --------
    >>> from tmcert.geometry import preset_domain, triangulate
    >>> m = triangulate(preset_domain("rectangle", a=1, b=1), 0.5)
    >>> integrate(m, lambda x, y: x)
    0.5
    """
    pts, _ = quadrature_points(mesh)
    vals = np.broadcast_to(np.asarray(f(pts[..., 0], pts[..., 1]), float), pts.shape[:2])
    return integrate_values(mesh, vals)


# -- finite element functions ----------------------------------------------


class FEFunction:
    """Continuous piecewise-linear function given by its nodal values."""

    def __init__(self, mesh: TriMesh, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.n_nodes,):
            raise ValueError("need one value per mesh node")
        self.mesh = mesh
        self.values = values
        self.values.setflags(write=False)

    @classmethod
    def interpolate(cls, mesh: TriMesh, f: Callable) -> "FEFunction":
        return cls(mesh, f(mesh.nodes[:, 0], mesh.nodes[:, 1]))

    @classmethod
    def from_dofs(cls, mesh: TriMesh, dofs: DofMap, x) -> "FEFunction":
        return cls(mesh, dofs.expand(np.asarray(x, float)))

    def at_quadrature(self) -> np.ndarray:
        v = self.values[self.mesh.tris]
        return 0.5 * (v + np.roll(v, -1, axis=1))

    def gradient(self) -> np.ndarray:
        return gradient(self)

    @cached_property
    def _interp(self):
        import matplotlib.tri as mtri

        tri = mtri.Triangulation(self.mesh.nodes[:, 0], self.mesh.nodes[:, 1], self.mesh.tris)
        return mtri.LinearTriInterpolator(tri, self.values)

    def __call__(self, x, y):
        """Evaluate at arbitrary points; ``nan`` outside the mesh."""
        out = self._interp(np.asarray(x, float), np.asarray(y, float))
        return np.ma.filled(out, np.nan)

    def norm2(self) -> float:
        """Exact L2 norm squared."""
        return integrate_values(self.mesh, self.at_quadrature() ** 2)

    def energy(self) -> float:
        """Exact Dirichlet energy."""
        area = np.abs(self.mesh.signed_areas())
        g = gradient(self)
        return math.fsum((area * (g**2).sum(axis=1)).tolist())


def gradient(u: FEFunction) -> np.ndarray:
    """Constant P1 gradient on each triangle, shape ``(m, 2)``."""
    _, grads = element_geometry(u.mesh)
    return np.einsum("eik,ei->ek", grads, u.values[u.mesh.tris])


def triangle_mask(mesh: TriMesh, predicate: Callable) -> np.ndarray:
    """Boolean mask of triangles whose centroid satisfies ``predicate(x, y)``."""
    c = mesh.centroids()
    return np.asarray(predicate(c[:, 0], c[:, 1]), bool)


def integrate_on(mesh: TriMesh, values: np.ndarray, mask: np.ndarray) -> float:
    """Like :func:`integrate_values` but restricted to the triangles in ``mask``."""
    values = np.where(np.asarray(mask)[:, None], values, 0.0)
    return integrate_values(mesh, values)


def edge_integral(mesh: TriMesh, u: FEFunction, segment, power: int = 2) -> float:
    """Integral of ``u**power`` along mesh edges lying on an axis-aligned segment.

    Uses Simpson's rule on each edge, exact for the squared P1 trace.
    """
    (ax, ay), (bx, by) = segment
    e = mesh.edges()
    pa, pb = mesh.nodes[e[:, 0]], mesh.nodes[e[:, 1]]
    tol = 1e-12
    if ax == bx:
        on = (np.abs(pa[:, 0] - ax) < tol) & (np.abs(pb[:, 0] - ax) < tol)
        lo, hi = sorted((ay, by))
        on &= (np.minimum(pa[:, 1], pb[:, 1]) >= lo - tol) & (np.maximum(pa[:, 1], pb[:, 1]) <= hi + tol)
    else:
        on = (np.abs(pa[:, 1] - ay) < tol) & (np.abs(pb[:, 1] - ay) < tol)
        lo, hi = sorted((ax, bx))
        on &= (np.minimum(pa[:, 0], pb[:, 0]) >= lo - tol) & (np.maximum(pa[:, 0], pb[:, 0]) <= hi + tol)
    ua, ub = u.values[e[on, 0]], u.values[e[on, 1]]
    um = 0.5 * (ua + ub)
    length = np.linalg.norm(pa[on] - pb[on], axis=1)
    vals = length * (ua**power + 4 * um**power + ub**power) / 6.0
    return math.fsum(vals.tolist())
