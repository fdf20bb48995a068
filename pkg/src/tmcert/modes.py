"""Closed-form guided modes, trapped modes and resonator test fields.

Fields are :class:`VectorField3` samplers returning an array of shape
``(3,) + shape`` for coordinate arrays of shape ``shape``.  Derivatives are
taken by central finite differences; :func:`rayleigh_quotient` and
:func:`maxwell_residual` evaluate the quantities the certificates rely on.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse.linalg as spla

from .fem2d import FEFunction, assemble_full
from .geometry import TriMesh

H_FD = 1e-4


# -- scalar cross-section functions -----------------------------------------


@dataclass(frozen=True)
class Scalar2D:
    """A scalar function of two transverse variables together with its gradient."""

    value: Callable
    grad: Callable
    name: str = "phi"

    @classmethod
    def constant(cls, c: float = 1.0) -> "Scalar2D":
        return cls(
            lambda u, v: np.full(np.broadcast(u, v).shape, float(c)),
            lambda u, v: (np.zeros(np.broadcast(u, v).shape),) * 2,
            "constant",
        )

    @classmethod
    def from_fe(cls, u: FEFunction, h_fd: float = H_FD) -> "Scalar2D":
        """P1 interpolant; the gradient is a central difference of the interpolant."""

        def grad(x, y):
            gx = (u(x + h_fd, y) - u(x - h_fd, y)) / (2 * h_fd)
            gy = (u(x, y + h_fd) - u(x, y - h_fd)) / (2 * h_fd)
            return gx, gy

        return cls(u, grad, "fem")


def rect_dirichlet_mode(a: float = 1.0, b: float = 1.0, u0: float = 0.0, v0: float = 0.0,
                        normalised: bool = True) -> Tuple[Scalar2D, float]:
    """First Dirichlet eigenpair of ``(u0,u0+a) x (v0,v0+b)``."""
    c = 2.0 / math.sqrt(a * b) if normalised else 1.0
    ka, kb = math.pi / a, math.pi / b

    def val(u, v):
        return c * np.sin(ka * (u - u0)) * np.sin(kb * (v - v0))

    def grad(u, v):
        return (
            c * ka * np.cos(ka * (u - u0)) * np.sin(kb * (v - v0)),
            c * kb * np.sin(ka * (u - u0)) * np.cos(kb * (v - v0)),
        )

    return Scalar2D(val, grad, "rect_dirichlet"), ka**2 + kb**2


def rect_neumann_mode(a: float = 1.0, b: float = 1.0, u0: float = 0.0, v0: float = 0.0,
                      normalised: bool = True) -> Tuple[Scalar2D, float]:
    """First positive Neumann eigenpair of ``(u0,u0+a) x (v0,v0+b)`` with ``a >= b``.

    The eigenfunction varies along the first (longest) variable.
    """
    if a < b:
        raise ValueError("expects a >= b")
    c = math.sqrt(2.0 / (a * b)) if normalised else 1.0
    ka = math.pi / a

    def val(u, v):
        return c * np.cos(ka * (u - u0)) * np.ones_like(np.asarray(v, float))

    def grad(u, v):
        return -c * ka * np.sin(ka * (u - u0)) * np.ones_like(np.asarray(v, float)), np.zeros(
            np.broadcast(u, v).shape
        )

    return Scalar2D(val, grad, "rect_neumann"), ka**2


# -- vector fields ------------------------------------------------------------


@dataclass(frozen=True)
class Support:
    """Where a field lives: a bounded box, or a box in the section with decay along z."""

    kind: str  # "bounded" | "decay"
    box: Optional[Tuple[float, float, float, float, float, float]] = None
    rate: float = 0.0


@dataclass(frozen=True)
class VectorField3:
    sampler: Callable
    support: Support = Support("bounded")
    name: str = "field"
    inside: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __call__(self, x, y, z) -> np.ndarray:
        x, y, z = np.broadcast_arrays(*(np.asarray(c, float) for c in (x, y, z)))
        out = np.asarray(self.sampler(x, y, z))
        if out.shape != (3,) + x.shape:
            raise ValueError(f"sampler returned shape {out.shape}")
        return out

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self(0.0, 0.0, 0.0))


def _stack(ex, ey, ez, shape):
    dtype = np.result_type(np.asarray(ex), np.asarray(ey), np.asarray(ez), float)
    out = np.empty((3,) + shape, dtype=dtype)
    out[0], out[1], out[2] = ex, ey, ez
    return out


def _beta(lam: float, cutoff: float) -> complex:
    # principal root: imaginary part >= 0, so e^{i beta z} decays for z > 0
    return complex(np.sqrt(complex(lam - cutoff)))


def te_mode(phi_N: Scalar2D, lam_N: float, lam: float, sign: int = 1) -> VectorField3:
    """First TE mode ``((d_y phi, -d_x phi), 0) exp(+-i beta z)``.

    Below cutoff ``beta`` is imaginary and the mode decays like
    ``exp(-sqrt(lam_N - lam) |z|)`` in the direction selected by ``sign``.
    """
    if not lam_N > 0:
        raise ValueError("lam_N must be positive")
    beta = _beta(lam, lam_N)

    def sample(x, y, z):
        gx, gy = phi_N.grad(x, y)
        ph = np.exp(1j * sign * beta * z)
        return _stack(gy * ph, -gx * ph, 0 * ph, x.shape)

    rate = abs(beta.imag)
    return VectorField3(sample, Support("decay" if rate else "bounded", rate=rate), "te_mode",
                        params={"lam_N": lam_N, "lam": lam, "beta": beta})


def tm_mode(phi_D: Scalar2D, lam_D: float, lam: float, sign: int = 1) -> VectorField3:
    """First TM mode ``(grad phi, -+ i lam_D phi / beta) exp(+-i beta z)``."""
    if not lam_D > 0:
        raise ValueError("lam_D must be positive")
    if lam == lam_D:
        raise ValueError("lam equals the TM cutoff; the mode is singular there")
    beta = _beta(lam, lam_D)

    def sample(x, y, z):
        gx, gy = phi_D.grad(x, y)
        ph = np.exp(1j * sign * beta * z)
        ez = -sign * 1j * lam_D / beta * phi_D.value(x, y) * ph
        return _stack(gx * ph, gy * ph, ez, x.shape)

    rate = abs(beta.imag)
    return VectorField3(sample, Support("decay" if rate else "bounded", rate=rate), "tm_mode",
                        params={"lam_D": lam_D, "lam": lam, "beta": beta})


@dataclass(frozen=True, eq=False)
class CapacitorPotential:
    """Harmonic potential equal to 1 on the inner conductor and 0 on the outer one."""

    u: FEFunction
    energy: float
    residual: float

    @property
    def mesh(self) -> TriMesh:
        return self.u.mesh

    def scalar(self, h_fd: float = H_FD) -> Scalar2D:
        return Scalar2D.from_fe(self.u, h_fd)


def capacitor_potential(mesh: TriMesh) -> CapacitorPotential:
    """Solve the Laplace problem between the two conductors with P1 elements."""
    inner = mesh.nodes_with_tag("inner_conductor")
    outer = mesh.nodes_with_tag("outer_conductor")
    if len(inner) == 0 or len(outer) == 0:
        raise ValueError("mesh needs both inner_conductor and outer_conductor tags")
    K, _ = assemble_full(mesh)
    u = np.zeros(mesh.n_nodes)
    u[inner] = 1.0
    fixed = np.zeros(mesh.n_nodes, bool)
    fixed[inner] = fixed[outer] = True
    free = np.nonzero(~fixed)[0]
    Kff = K[free][:, free].tocsc()
    rhs = -(K[free] @ u)
    u[free] = spla.spsolve(Kff, rhs)
    r = K[free] @ u
    energy = float(u @ (K @ u))
    return CapacitorPotential(FEFunction(mesh, u), energy, float(np.max(np.abs(r))))


def tem_mode(pot: CapacitorPotential, lam: float, sign: int = 1, h_fd: float = H_FD) -> VectorField3:
    """TEM mode ``(grad phi, 0) exp(+-i sqrt(lam) z)`` built on the capacitor potential."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    phi = pot.scalar(h_fd)
    k = math.sqrt(lam)

    def sample(x, y, z):
        gx, gy = phi.grad(x, y)
        ph = np.exp(1j * sign * k * z)
        return _stack(gx * ph, gy * ph, 0 * ph, x.shape)

    return VectorField3(sample, Support("bounded"), "tem_mode", inside=_fe_inside(pot.u),
                        params={"lam": lam})


def _fe_inside(u: FEFunction):
    def inside(x, y, z):
        return np.isfinite(u(x, y))

    return inside


def trapped_mode_dirichlet(phi: Scalar2D, lam_bullet: float, m: int, a: float):
    """Trapped field of a product guide ``(0,a) x Omega_2D`` from a Dirichlet eigenpair.

    ``phi`` is a function of ``(y, z)``.  Returns the field and its
    eigenvalue ``lam_bullet + (m pi / a)^2``.
    """
    if not lam_bullet > 0:
        raise ValueError("lam_bullet must be positive")
    if m < 0 or not a > 0:
        raise ValueError("need m >= 0 and a > 0")
    k = m * math.pi / a
    c = k / lam_bullet

    def sample(x, y, z):
        gy, gz = phi.grad(y, z)
        s = np.sin(k * x)
        return _stack(np.cos(k * x) * phi.value(y, z), -c * s * gy, -c * s * gz, x.shape)

    E = VectorField3(sample, Support("bounded"), "trapped_dirichlet", params={"m": m, "a": a})
    return E, lam_bullet + k * k


def trapped_mode_neumann(phi: Scalar2D, lam_bullet: float, m: int, a: float):
    """Embedded field ``(0, sin(m pi x/a) d_z phi, -sin(m pi x/a) d_y phi)``."""
    if m < 1:
        raise ValueError("m must be at least 1 (m = 0 gives the null field)")
    if not a > 0:
        raise ValueError("a must be positive")
    k = m * math.pi / a

    def sample(x, y, z):
        gy, gz = phi.grad(y, z)
        s = np.sin(k * x)
        return _stack(np.zeros(x.shape), s * gz, -s * gy, x.shape)

    E = VectorField3(sample, Support("bounded"), "trapped_neumann", params={"m": m, "a": a})
    return E, lam_bullet + k * k


def _in_box(x, y, z, box):
    x0, x1, y0, y1, z0, z1 = box
    return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1) & (z >= z0) & (z <= z1)


TESTFIELDS = ("cuboid_te", "te_resonator", "tem_resonator", "tm_resonator")


def testfield(kind: str, **params) -> VectorField3:
    """Compactly supported resonator test fields, zero-extended into the guide.

    The resonator occupies ``z in (-L, 0)``.

    Parameters
    ----------
    kind : {"cuboid_te", "te_resonator", "tem_resonator", "tm_resonator"}
    **params
        ``cuboid_te``: ``a``, ``b``, ``L``.
        ``te_resonator``: ``L`` and either ``phi`` (Neumann eigenfunction)
        with ``box2d=(x0, x1, y0, y1)``, or rectangle sides ``a >= b``.
        ``tem_resonator``: ``pot`` (:class:`CapacitorPotential`), ``L``.
        ``tm_resonator``: ``L`` and either ``phi`` with ``lam_D`` and
        ``box2d`` (``phi`` normalised in L2), or rectangle sides ``a``, ``b``.
    """
    L = float(params.get("L", 0))
    if not L > 0:
        raise ValueError("resonator length L must be positive")
    kz = math.pi / L

    if kind == "cuboid_te":
        a, b = float(params["a"]), float(params["b"])
        if not (a > 0 and b > 0):
            raise ValueError("a, b must be positive")
        box = (-a / 2, a / 2, -b / 2, b / 2, -L, 0.0)

        def sample(x, y, z):
            ins = _in_box(x, y, z, box)
            ey = np.where(ins, np.cos(math.pi * x / a) * np.sin(kz * z), 0.0)
            return _stack(np.zeros(x.shape), ey, np.zeros(x.shape), x.shape)

        return VectorField3(sample, Support("bounded", box), kind, params={"a": a, "b": b, "L": L})

    if kind == "te_resonator":
        phi, box2d, lam = _section(params, rect_neumann_mode, "lam_N")
        box = tuple(box2d) + (-L, 0.0)

        def sample(x, y, z):
            ins = _in_box(x, y, z, box)
            gx, gy = phi.grad(x, y)
            s = np.where(ins, np.sin(kz * z), 0.0)
            return _stack(gy * s, -gx * s, np.zeros(x.shape), x.shape)

        return VectorField3(sample, Support("bounded", box), kind, params={"L": L, "lam_N": lam})

    if kind == "tem_resonator":
        pot: CapacitorPotential = params["pot"]
        phi = pot.scalar(params.get("h_fd", H_FD))
        nodes = pot.mesh.nodes
        box = (nodes[:, 0].min(), nodes[:, 0].max(), nodes[:, 1].min(), nodes[:, 1].max(), -L, 0.0)

        def sample(x, y, z):
            ins = _in_box(x, y, z, box)
            gx, gy = phi.grad(x, y)
            s = np.where(ins, np.sin(kz * z), 0.0)
            return _stack(np.nan_to_num(gx) * s, np.nan_to_num(gy) * s, np.zeros(x.shape), x.shape)

        return VectorField3(sample, Support("bounded", box), kind, inside=_fe_inside(pot.u),
                            params={"L": L})

    if kind == "tm_resonator":
        phi, box2d, lam = _section(params, rect_dirichlet_mode, "lam_D")
        alpha = L * lam / math.pi
        box = tuple(box2d) + (-L, 0.0)

        def sample(x, y, z):
            ins = _in_box(x, y, z, box)
            gx, gy = phi.grad(x, y)
            s = np.where(ins, np.sin(kz * z), 0.0)
            c = np.where(ins, 1.0 - np.cos(kz * z), 0.0)
            return _stack(gx * s, gy * s, alpha * phi.value(x, y) * c, x.shape)

        return VectorField3(sample, Support("bounded", box), kind,
                            params={"L": L, "lam_D": lam, "alpha": alpha})

    raise ValueError(f"unknown test field {kind!r}; choose from {TESTFIELDS}")


def _section(params, rect_mode, lam_key):
    if "phi" in params:
        return params["phi"], params["box2d"], float(params[lam_key])
    a, b = float(params["a"]), float(params["b"])
    phi, lam = rect_mode(a, b, -a / 2, -b / 2)
    return phi, (-a / 2, a / 2, -b / 2, b / 2), lam


# -- finite differences ----------------------------------------------------------


def fd_jacobian(E: Callable, x, y, z, h: float = H_FD) -> np.ndarray:
    """Central-difference Jacobian ``J[i, j] = d E_i / d x_j``, shape ``(3, 3) + shape``."""
    cols = []
    for d in range(3):
        p = [x, y, z]
        m = [x, y, z]
        p[d] = p[d] + h
        m[d] = m[d] - h
        cols.append((E(*p) - E(*m)) / (2 * h))
    return np.stack(cols, axis=1)


def fd_curl(E: Callable, x, y, z, h: float = H_FD) -> np.ndarray:
    J = fd_jacobian(E, x, y, z, h)
    return np.stack([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def fd_div(E: Callable, x, y, z, h: float = H_FD) -> np.ndarray:
    J = fd_jacobian(E, x, y, z, h)
    return J[0, 0] + J[1, 1] + J[2, 2]


def fd_curlcurl(E: Callable, x, y, z, h: float = H_FD) -> np.ndarray:
    return fd_curl(lambda a, b, c: fd_curl(E, a, b, c, h), x, y, z, h)


# -- quadrature ------------------------------------------------------------------


@dataclass(frozen=True)
class QuadGrid:
    """Tensor midpoint grid over a box ``(x0, x1, y0, y1, z0, z1)``."""

    box: Tuple[float, float, float, float, float, float]
    n: Tuple[int, int, int]

    def axes(self):
        out = []
        for (lo, hi), n in zip(zip(self.box[0::2], self.box[1::2]), self.n):
            w = (hi - lo) / n
            out.append((lo + w * (np.arange(n) + 0.5), w))
        return out

    def points(self):
        (xs, wx), (ys, wy), (zs, wz) = self.axes()
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        return X, Y, Z, wx * wy * wz

    def coarsened(self) -> Optional["QuadGrid"]:
        if any(n % 2 for n in self.n):
            return None
        return QuadGrid(self.box, tuple(n // 2 for n in self.n))


@dataclass(frozen=True)
class RayleighQuotient:
    value: float
    error: float
    numerator: float
    denominator: float


def _quotient(E: VectorField3, grid: QuadGrid, h_fd: float):
    X, Y, Z, w = grid.points()
    num = den = 0.0
    # one x-slab at a time keeps memory bounded
    for i in range(X.shape[0]):
        x, y, z = X[i], Y[i], Z[i]
        mask = np.ones(x.shape, bool) if E.inside is None else np.asarray(E.inside(x, y, z), bool)
        f = E(x, y, z)
        c = fd_curl(E, x, y, z, h_fd)
        den += math.fsum((w * np.where(mask, (np.abs(f) ** 2).sum(axis=0), 0.0)).ravel().tolist())
        num += math.fsum((w * np.where(mask, (np.abs(c) ** 2).sum(axis=0), 0.0)).ravel().tolist())
    return num, den


def rayleigh_quotient(E: VectorField3, grid: QuadGrid, h_fd: float = H_FD) -> RayleighQuotient:
    """``int |curl E|^2 / int |E|^2`` by midpoint quadrature and central differences.

    The error estimate is the change against the grid with half as many
    cells per axis (zero when that grid is unavailable).
    """
    num, den = _quotient(E, grid, h_fd)
    if den == 0.0:
        raise ZeroDivisionError("field vanishes on the quadrature grid")
    q = num / den
    err = 0.0
    coarse = grid.coarsened()
    if coarse is not None:
        cn, cd = _quotient(E, coarse, h_fd)
        if cd > 0:
            err = abs(q - cn / cd)
    return RayleighQuotient(q, err, num, den)


@dataclass(frozen=True)
class MaxwellResidual:
    pde: float
    div: float
    trace: float


def maxwell_residual(
    E: VectorField3,
    lam: float,
    points: np.ndarray,
    boundary: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    h_fd: float = H_FD,
) -> MaxwellResidual:
    """Max-norm residuals of ``curl curl E = lam E``, ``div E = 0`` and ``E x nu = 0``.

    Parameters
    ----------
    points : (n, 3) array
        Interior sample points, kept at least ``2 h_fd`` from any kink.
    boundary : (points, normals), optional
        Boundary sample points with their unit normals.
    """
    p = np.asarray(points, float)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    cc = fd_curlcurl(E, x, y, z, h_fd)
    pde = float(np.max(np.abs(cc - lam * E(x, y, z))))
    div = float(np.max(np.abs(fd_div(E, x, y, z, h_fd))))
    trace = 0.0
    if boundary is not None:
        bp, nu = (np.asarray(v, float) for v in boundary)
        f = E(bp[:, 0], bp[:, 1], bp[:, 2])
        t = np.cross(f.T, nu)
        trace = float(np.max(np.abs(t))) if len(t) else 0.0
    return MaxwellResidual(pde, div, trace)


def export_csv(E: VectorField3, points: np.ndarray, path) -> int:
    """Write samples as CSV: ``x,y,z,Ex,Ey,Ez`` or real/imaginary pairs for complex fields.

    Floats use the shortest round-trip representation.
    """
    p = np.asarray(points, float)
    f = E(p[:, 0], p[:, 1], p[:, 2])
    cplx = np.iscomplexobj(f)
    header = ["x", "y", "z"]
    for c in ("Ex", "Ey", "Ez"):
        header += [f"{c}_re", f"{c}_im"] if cplx else [c]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(p)):
            row = [repr(float(v)) for v in p[i]]
            for c in range(3):
                v = f[c, i]
                row += [repr(float(v.real)), repr(float(v.imag))] if cplx else [repr(float(v))]
            w.writerow(row)
    return len(p)
