"""Cross-section spectra, essential-spectrum thresholds and eigenvalue classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import optimize, special

from .eigensolve import EigenResult, richardson, smallest_eigenpairs
from .fem2d import assemble
from .geometry import DEFAULT_H, DEFAULT_T, MeshError, RectilinearDomain2D, triangulate

PI2 = math.pi**2


class FilonovViolation(AssertionError):
    """lambda_N >= lambda_D was observed; this always signals a bug upstream."""


@dataclass(frozen=True)
class CrossSection:
    """A waveguide cross-section and its two cutoffs.

    ``lam_N`` is the first positive Neumann eigenvalue, ``lam_D`` the first
    Dirichlet one.  ``provenance`` records where each came from
    (``analytic``, ``fem`` or ``tabulated``).
    """

    name: str
    lam_N: float
    lam_D: float
    simply_connected: bool = True
    provenance: Dict[str, str] = field(default_factory=dict)
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.lam_N > 0 and self.lam_D > 0):
            raise ValueError("cutoffs must be positive")

    @classmethod
    def rectangle(cls, a: float, b: float) -> "CrossSection":
        a, b = max(a, b), min(a, b)
        return cls(
            f"rectangle {a:g}x{b:g}",
            PI2 / a**2,
            PI2 / a**2 + PI2 / b**2,
            True,
            {"lam_N": "analytic", "lam_D": "analytic"},
            {"a": a, "b": b},
        )

    @classmethod
    def disk(cls, radius: float = 1.0) -> "CrossSection":
        return cls(
            f"disk r={radius:g}",
            disk_neumann_constant() / radius**2,
            special.jn_zeros(0, 1)[0] ** 2 / radius**2,
            True,
            {"lam_N": "tabulated", "lam_D": "tabulated"},
            {"radius": radius},
        )


@lru_cache(maxsize=None)
def disk_neumann_constant() -> float:
    """First positive Neumann eigenvalue of the unit disk.

    The square of the first positive zero of ``J1'``, found by bracketing.
    """
    root = optimize.brentq(lambda x: special.jvp(1, x), 1.0, 3.0, xtol=1e-15)
    return root * root


@dataclass(frozen=True)
class EssentialSpectrum:
    threshold: float

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")


def rect_spectrum(a: float, b: float, bc: str = "dirichlet", count: int = 5) -> List[float]:
    """Smallest ``count`` eigenvalues of the Laplacian on ``(0,a) x (0,b)``.

    Examples
    --------
    >>> [round(v / math.pi**2, 6) for v in rect_spectrum(2, 1, "neumann", 4)]
    [0.0, 0.25, 1.0, 1.0]
    """
    if not (a > 0 and b > 0):
        raise ValueError("rectangle sides must be positive")
    if bc not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    start = 1 if bc == "dirichlet" else 0
    idx = np.arange(start, start + count + 1)
    m, n = np.meshgrid(idx, idx, indexing="ij")
    vals = np.sort(((m * math.pi / a) ** 2 + (n * math.pi / b) ** 2).ravel())
    return [float(v) for v in vals[:count]]


def laplacian_eigs(
    dom: RectilinearDomain2D,
    bc: str = "dirichlet",
    k: int = 1,
    h: float = DEFAULT_H,
    T: Optional[float] = DEFAULT_T,
    tol: float = 1e-10,
    estimate: bool = True,
    t_sensitivity: bool = True,
) -> EigenResult:
    """FEM eigenvalues of the Laplacian on a (truncated) domain.

    Port truncation faces inherit ``bc``.  With ``estimate`` the problem is
    also solved at ``2h`` and the Richardson value is attached to
    ``extrapolated``; with ``t_sensitivity`` and ports present, the change of
    each eigenvalue between ``T`` and ``T + 1`` is stored in ``extras``.
    """
    if dom.ports and T is not None:
        dom = dom.with_T(T)
    T_used = dom.ports[0].T if dom.ports else None

    def solve(domain, hh):
        mesh = triangulate(domain, hh)
        K, M, dofs = assemble(mesh, bc, artificial=bc if bc != "mixed_by_tag" else None)
        deflate = dofs.n_free == mesh.n_nodes
        res = smallest_eigenpairs(K, M, k, tol, deflate_constants=deflate)
        return res.with_(mesh=mesh, dofs=dofs, bc=bc, h=hh, T=T_used)

    res = solve(dom, h)
    notes = []
    extras = {}
    if estimate:
        try:
            coarse = solve(dom, 2 * h)
        except MeshError:
            notes.append("coarse level unavailable; no extrapolation")
        else:
            ext = np.array([richardson(c, f) for c, f in zip(coarse.eigenvalues, res.eigenvalues)])
            extras["coarse_eigenvalues"] = [float(v) for v in coarse.eigenvalues]
            # |lam_2h - lam_h| is three times the Richardson correction: a
            # deliberately generous bound on the error of lam_h
            extras["discretisation_error"] = [float(v) for v in np.abs(coarse.eigenvalues - res.eigenvalues)]
            res = res.with_(extrapolated=ext)
    if t_sensitivity and dom.ports:
        longer = solve(dom.with_T(T_used + 1.0), h)
        extras["T_sensitivity"] = [float(v) for v in res.eigenvalues - longer.eigenvalues]
    notes.append(
        "conforming P1: eigenvalues are upper bounds of the truncated-domain problem"
        + ("; Dirichlet truncation makes them upper bounds of the untruncated one" if bc == "dirichlet" and dom.ports else "")
    )
    return res.with_(notes=tuple(notes), extras=extras, upper_bound=True)


def essential_threshold(sections: Sequence[CrossSection]) -> EssentialSpectrum:
    """Bottom of the essential spectrum for a guide with the given branch sections."""
    if not sections:
        raise ValueError("need at least one cross-section")
    if any(not s.simply_connected for s in sections):
        return EssentialSpectrum(0.0)
    return EssentialSpectrum(min(s.lam_N for s in sections))


def classify_eigenvalue(lam: float, ess: EssentialSpectrum) -> str:
    """``"discrete"`` when strictly below the threshold, else ``"embedded"``."""
    if lam < 0:
        raise ValueError("eigenvalue must be non-negative")
    return "discrete" if lam < ess.threshold else "embedded"


def product_spectrum(
    a: float,
    eigs_D: Sequence[float],
    eigs_N: Sequence[float],
    cutoff: float,
    h_max: Optional[float] = None,
) -> List[dict]:
    """Eigenvalues of a 2D domain extruded to thickness ``a``.

    Dirichlet values contribute ``lam + (m pi / a)^2`` for ``m >= 0``,
    Neumann values for ``m >= 1`` (``m = 0`` gives a null field).  Each entry
    is classified against ``min(pi^2 / h_max^2, pi^2 / a^2)``; without
    ``h_max`` only the thickness term is used.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    thr = PI2 / a**2 if h_max is None else min(PI2 / h_max**2, PI2 / a**2)
    ess = EssentialSpectrum(thr)
    out = []
    for family, eigs, m0 in (("D", eigs_D, 0), ("N", eigs_N, 1)):
        for j, lam in enumerate(eigs):
            m = m0
            while True:
                val = lam + (m * math.pi / a) ** 2
                if val > cutoff:
                    break
                out.append(
                    {"value": float(val), "family": family, "index": j, "m": m,
                     "classification": classify_eigenvalue(val, ess)}
                )
                m += 1
    out.sort(key=lambda d: (d["value"], d["family"], d["index"], d["m"]))
    return out


def filonov_check(section: CrossSection, second_neumann: Optional[float] = None):
    """Check ``lam_N < lam_D``; optionally also the second positive Neumann value.

    Returns
    -------
    ok : bool
    margin : float
        ``lam_N - lam_D`` (or the larger margin when the second Neumann value
        is supplied); negative when the inequality holds.

    Raises
    ------
    FilonovViolation
        When the inequality fails.
    """
    margin = section.lam_N - section.lam_D
    if second_neumann is not None:
        margin = max(margin, second_neumann - section.lam_D)
    if not margin < 0:
        raise FilonovViolation(f"{section.name}: lam_N={section.lam_N} lam_D={section.lam_D}")
    return True, float(margin)
