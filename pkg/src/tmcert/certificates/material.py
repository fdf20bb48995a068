"""Criteria for guides filled with inhomogeneous, compactly supported media.

All integrals are over ``S x (z0, z1)`` where ``(z0, z1)`` contains the
support of ``eps - 1`` and ``mu - 1``; outside it every integrand vanishes.
The section quadrature is the edge-midpoint rule of :mod:`tmcert.fem2d`,
the axial one a composite midpoint rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..fem2d import FEFunction, gradient, quadrature_points
from ..geometry import TriMesh
from .core import FAIL, INCONCLUSIVE, PASS, Certificate, Input, verdict_for


def _as_sampler(f):
    if callable(f):
        return f
    c = float(f)
    return lambda x, y, z: np.full(np.broadcast(x, y, z).shape, c)


@dataclass(frozen=True, eq=False)
class MaterialProfile:
    """Sampled permittivity and permeability on ``S x (z0, z1)``.

    Parameters
    ----------
    mesh : TriMesh
        Triangulation of the cross-section ``S``.
    eps, mu : callable or float
        Scalar samplers ``f(x, y, z)``.
    support : (z0, z1)
        Axial interval outside which ``eps = mu = 1``.
    nz : int
        Number of axial midpoint cells.
    """

    mesh: TriMesh
    eps: Callable
    mu: Callable
    support: tuple
    nz: int = 64

    def __post_init__(self):
        object.__setattr__(self, "eps", _as_sampler(self.eps))
        object.__setattr__(self, "mu", _as_sampler(self.mu))
        z0, z1 = self.support
        if not z1 > z0:
            raise ValueError("support must be a non-empty interval")
        if self.nz < 1:
            raise ValueError("nz must be positive")

    def grid(self):
        """Points ``(nz, m, 3)`` for x, y, z and weights ``(nz, m, 3)``."""
        pts, w = quadrature_points(self.mesh)
        z0, z1 = self.support
        dz = (z1 - z0) / self.nz
        zs = z0 + dz * (np.arange(self.nz) + 0.5)
        X = np.broadcast_to(pts[None, ..., 0], (self.nz,) + w.shape)
        Y = np.broadcast_to(pts[None, ..., 1], (self.nz,) + w.shape)
        Z = np.broadcast_to(zs[:, None, None], (self.nz,) + w.shape)
        return X, Y, Z, w[None] * dz

    def samples(self):
        X, Y, Z, W = self.grid()
        e = np.broadcast_to(np.asarray(self.eps(X, Y, Z), float), X.shape)
        m = np.broadcast_to(np.asarray(self.mu(X, Y, Z), float), X.shape)
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(m))):
            raise ValueError("non-finite material sample")
        if np.any(e <= 0) or np.any(m <= 0):
            raise ValueError("eps and mu must be positive")
        return X, Y, Z, W, e, m

    def eps_depends_on_z_only(self, rtol: float = 1e-12) -> bool:
        _, _, _, _, e, _ = self.samples()
        ref = e[:, :1, :1]
        return bool(np.all(np.abs(e - ref) <= rtol * np.abs(ref)))


def _sum(values: np.ndarray, W: np.ndarray) -> float:
    return math.fsum((values * W).ravel().tolist())


def _normalised(phi: FEFunction) -> FEFunction:
    return FEFunction(phi.mesh, phi.values / math.sqrt(phi.norm2()))


def _grad2_at_quadrature(phi: FEFunction) -> np.ndarray:
    g = gradient(phi)
    return np.repeat((g**2).sum(axis=1)[:, None], 3, axis=1)


def _material_cert(cid, margin, scale, profile, extras, notes, unc=None):
    # quadrature error budget: relative machine-level plus user supplied
    u = 64 * np.finfo(float).eps * scale if unc is None else unc
    inputs = {
        "z0": Input(profile.support[0], "profile"),
        "z1": Input(profile.support[1], "profile"),
        "nz": Input(profile.nz, "profile"),
    }
    return Certificate(cid, inputs, float(margin), verdict_for(margin, u), float(u),
                       {"numerical": {"tau": float(u)}}, notes, extras)


def cert_material_zeps(profile: MaterialProfile, phi_N: FEFunction, lam_N: Optional[float] = None) -> Certificate:
    """Permittivity depending on z only, arbitrary permeability.

    Margin ``int ((eps mu)^{-1} - 1) eps phi_N^2``; the variant
    ``int (eps mu^{-1} - 1) eps phi_N^2`` is reported alongside.
    """
    if not profile.eps_depends_on_z_only():
        raise ValueError("eps must depend on z only for this criterion")
    phi = _normalised(phi_N)
    X, Y, Z, W, e, m = profile.samples()
    p2 = phi.at_quadrature()[None] ** 2
    derivation = (1.0 / (e * m) - 1.0) * e * p2
    statement = (e / m - 1.0) * e * p2
    margin = _sum(derivation, W)
    scale = _sum(np.abs(derivation), W)
    extras = {"statement_form_margin": _sum(statement, W)}
    if lam_N is not None:
        extras["scaled_margin"] = lam_N**2 * margin
    return _material_cert("material_zeps", margin, scale, profile, extras, [
        "verdict from int ((eps mu)^{-1} - 1) eps phi_N^2; "
        "the form with eps mu^{-1} is reported as statement_form_margin",
    ])


def cert_material_general(profile: MaterialProfile, phi_N: FEFunction, lam_N: float) -> Certificate:
    """Margin ``int (mu^{-1} - 1) lam_N phi_N^2 + (eps - 1)(eps - 4) |grad phi_N|^2 / 4``.

    The criterion is derived under ``eps >= 1``; otherwise the verdict is
    inconclusive.
    """
    phi = _normalised(phi_N)
    X, Y, Z, W, e, m = profile.samples()
    p2 = phi.at_quadrature()[None] ** 2
    g2 = _grad2_at_quadrature(phi)[None]
    integrand = (1.0 / m - 1.0) * lam_N * p2 + 0.25 * (e - 1.0) * (e - 4.0) * g2
    margin = _sum(integrand, W)
    cert = _material_cert("material_general", margin, _sum(np.abs(integrand), W), profile, {}, [])
    cert.inputs["lam_N"] = Input(lam_N, "user")
    if np.any(e < 1.0):
        cert.verdict = INCONCLUSIVE
        cert.notes.append("eps < 1 somewhere: the criterion assumes eps >= 1")
    if cert.verdict == FAIL:
        cert.notes.append("positive margin: the criterion is silent, not a proof of absence")
    return cert


def cert_material_magnetic(profile: MaterialProfile, phi_N: FEFunction) -> Certificate:
    """Non-magnetic medium: margin ``int (eps^{-1} - 1) |grad phi_N|^2``."""
    phi = _normalised(phi_N)
    X, Y, Z, W, e, m = profile.samples()
    if np.any(np.abs(m - 1.0) > 1e-14):
        raise ValueError("this criterion requires mu = 1")
    g2 = _grad2_at_quadrature(phi)[None]
    integrand = (1.0 / e - 1.0) * g2
    margin = _sum(integrand, W)
    return _material_cert("material_magnetic", margin, _sum(np.abs(integrand), W), profile, {}, [])


def cert_material_signs(profile: MaterialProfile, c: float = 1.0 + 1e-9) -> Certificate:
    """Pointwise sign criterion: ``eps, mu >= 1`` and a strict excess on a set of positive area.

    The margin is ``-(measure where eps >= c or mu >= c)`` when both lower
    bounds hold, and the largest deficit ``1 - min(eps, mu)`` otherwise.
    """
    X, Y, Z, W, e, m = profile.samples()
    deficit = float(max(1.0 - e.min(), 1.0 - m.min()))
    excess = (e >= c) | (m >= c)
    measure = _sum(excess.astype(float), W)
    if deficit > 0:
        margin, note = deficit, "eps or mu drops below 1"
    elif measure > 0:
        margin, note = -measure, "eps, mu >= 1 with strict excess on a set of positive measure"
    else:
        margin, note = 0.0, "eps = mu = 1 on every sample: no strict excess"
    verdict = PASS if margin < 0 else FAIL
    inputs = {"c": Input(c, "threshold"), "nz": Input(profile.nz, "profile")}
    return Certificate("material_signs", inputs, margin, verdict, 0.0, {}, [note],
                       {"min_eps": float(e.min()), "min_mu": float(m.min()), "excess_measure": measure})


@dataclass(frozen=True)
class StructuredEps:
    """Permittivity whose transverse block is ``eps_t(z) * I``.

    Off-diagonal couplings ``eps_xz(x, y)``, ``eps_yz(x, y)`` and the
    ``eps_zz(x, y, z)`` entry complete the matrix; only ``eps_t`` enters
    the criteria.
    """

    eps_t: Callable
    eps_xz: Callable = lambda x, y: 0.0 * x
    eps_yz: Callable = lambda x, y: 0.0 * x
    eps_zz: Optional[Callable] = None

    def matrix(self, x, y, z) -> np.ndarray:
        x, y, z = np.broadcast_arrays(x, y, z)
        et = np.broadcast_to(self.eps_t(z), x.shape)
        zz = et if self.eps_zz is None else np.broadcast_to(self.eps_zz(x, y, z), x.shape)
        xz = np.broadcast_to(self.eps_xz(x, y), x.shape)
        yz = np.broadcast_to(self.eps_yz(x, y), x.shape)
        M = np.zeros(x.shape + (3, 3))
        M[..., 0, 0] = M[..., 1, 1] = et
        M[..., 0, 2] = M[..., 2, 0] = xz
        M[..., 1, 2] = M[..., 2, 1] = yz
        M[..., 2, 2] = zz
        return M


def cert_material_aniso(
    mesh: TriMesh,
    eps: StructuredEps,
    mu: Callable,
    phi_N: FEFunction,
    support: tuple,
    nz: int = 64,
) -> Certificate:
    """Matrix-valued coefficients with the block structure of :class:`StructuredEps`.

    ``mu(x, y, z)`` returns matrices of shape ``(..., 3, 3)``.  Margin:
    ``int (eps_t^{-1} (mu^{-1})_zz - 1) eps_t phi_N^2``.  When ``mu`` is the
    identity the second criterion ``int (eps_t^{-1} - 1) |grad phi_N|^2`` is
    also evaluated and reported.
    """
    prof = MaterialProfile(mesh, lambda x, y, z: eps.eps_t(z) + 0.0 * x, 1.0, support, nz)
    X, Y, Z, W, et, _ = prof.samples()
    Mu = np.asarray(mu(X, Y, Z), float)
    if Mu.shape != X.shape + (3, 3):
        raise ValueError("mu must return 3x3 matrices")
    E = eps.matrix(X, Y, Z)
    if np.any(np.linalg.eigvalsh(E) <= 0) or np.any(np.linalg.eigvalsh(0.5 * (Mu + np.swapaxes(Mu, -1, -2))) <= 0):
        raise ValueError("eps and mu must be symmetric positive definite")
    mu_inv_zz = np.linalg.inv(Mu)[..., 2, 2]
    phi = _normalised(phi_N)
    p2 = phi.at_quadrature()[None] ** 2
    integrand = (mu_inv_zz / et - 1.0) * et * p2
    margin = _sum(integrand, W)
    extras = {}
    notes = []
    if np.allclose(Mu, np.eye(3), atol=1e-14, rtol=0):
        g2 = _grad2_at_quadrature(phi)[None]
        extras["second_margin"] = _sum((1.0 / et - 1.0) * g2, W)
        notes.append("mu is the identity: second criterion evaluated as second_margin")
    return _material_cert("material_aniso", margin, _sum(np.abs(integrand), W), prof, extras, notes)


def slab(value: float, z0: float, z1: float, background: float = 1.0):
    """Sampler equal to ``value`` for ``z0 < z < z1`` and ``background`` elsewhere."""

    def f(x, y, z):
        z = np.asarray(z, float)
        return np.where((z > z0) & (z < z1), value, background) + 0.0 * np.asarray(x, float)

    return f
