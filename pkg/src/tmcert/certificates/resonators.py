"""Criteria built from resonator test fields: cuboid, TE, TEM and TM resonators."""
from __future__ import annotations

import math
from typing import Optional, Sequence, Union

from .core import Certificate, InputLike, evaluate

PI2 = math.pi**2


def cert_cuboid(a: InputLike, L: InputLike, lam_N_guide: InputLike) -> Certificate:
    """Cuboid resonator ``a x b x L``: margin ``pi^2/a^2 + pi^2/L^2 - lam_N``.

    The transverse size ``b`` plays no role.
    """
    return evaluate(
        "cuboid",
        lambda a, L, lam_N_guide: PI2 / a**2 + PI2 / L**2 - lam_N_guide,
        {"a": a, "L": L, "lam_N_guide": lam_N_guide},
        notes=["criterion is independent of the transverse size b"],
    )


def cert_te_resonator(
    lam_N_res: Union[InputLike, Sequence[float]], L: InputLike, lam_N_guide: InputLike
) -> Certificate:
    """Resonator of section S_R and length L using its first TE mode.

    ``lam_N_res`` may be a list of the resonator's positive Neumann
    eigenvalues; the margin uses the smallest, and the number of values
    clearing the bound is reported as a multiplicity lower bound.
    """
    values = None
    if isinstance(lam_N_res, (list, tuple)):
        values = sorted(float(v) for v in lam_N_res)
        lam_N_res = values[0]
    cert = evaluate(
        "te_resonator",
        lambda lam_N_res, L, lam_N_guide: lam_N_res + PI2 / L**2 - lam_N_guide,
        {"lam_N_res": lam_N_res, "L": L, "lam_N_guide": lam_N_guide},
    )
    if values is not None:
        Lv = cert.inputs["L"].value
        g = cert.inputs["lam_N_guide"].value
        mult = sum(1 for v in values if v + PI2 / Lv**2 < g)
        cert.extras["multiplicity_lower_bound"] = mult
        if mult > 1:
            cert.notes.append(f"{mult} resonator Neumann eigenvalues clear the bound; "
                              "the discrete spectrum has at least this total multiplicity")
    return cert


def cert_tem(L: InputLike, lam_N_guide: InputLike) -> Certificate:
    """Coaxial (non simply connected) resonator: margin ``pi^2/L^2 - lam_N``."""
    return evaluate(
        "tem",
        lambda L, lam_N_guide: PI2 / L**2 - lam_N_guide,
        {"L": L, "lam_N_guide": lam_N_guide},
        notes=["only the resonator length enters; the annular section's shape and area do not"],
    )


def tm_quotient(L: float, lam_D: float) -> float:
    """Closed-form Rayleigh quotient R(L) of the TM resonator test field."""
    if not (L > 0 and lam_D > 0):
        raise ValueError("L and lam_D must be positive")
    num = 3 * L**3 * lam_D**3 / (2 * PI2) + L * lam_D**2 + PI2 * lam_D / (2 * L)
    den = 3 * L**3 * lam_D**2 / (2 * PI2) + L * lam_D / 2
    return num / den


def minimal_tm_length(lam_D_res: float, lam_N_guide: float, rtol: float = 1e-12) -> float:
    """Smallest L (to ``rtol``) with ``R(L) < lam_N_guide``.

    A geometric scan locates the first sign change, then bisection refines it.
    """
    if lam_D_res >= lam_N_guide:
        raise ValueError("no finite length: R(L) tends to lam_D_res >= lam_N_guide")
    scale = math.pi / math.sqrt(lam_D_res)
    lo = scale * 1e-6
    if tm_quotient(lo, lam_D_res) < lam_N_guide:
        return lo
    hi = lo
    while tm_quotient(hi, lam_D_res) >= lam_N_guide:
        lo, hi = hi, hi * 1.25
        if hi > scale * 1e12:
            raise ValueError("no crossing found")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if tm_quotient(mid, lam_D_res) < lam_N_guide:
            hi = mid
        else:
            lo = mid
    return hi


def cert_tm(lam_D_res: InputLike, lam_N_guide: InputLike, L: Optional[InputLike] = None) -> Certificate:
    """TM-resonator criterion.

    With ``L`` the margin is ``R(L) - lam_N``; without it the margin is the
    limit ``lam_D_res - lam_N`` and the minimal admissible length is reported.
    """
    inputs = {"lam_D_res": lam_D_res, "lam_N_guide": lam_N_guide}
    if L is not None:
        inputs["L"] = L
        fn = lambda lam_D_res, lam_N_guide, L: tm_quotient(L, lam_D_res) - lam_N_guide
    else:
        fn = lambda lam_D_res, lam_N_guide: lam_D_res - lam_N_guide
    cert = evaluate("tm", fn, inputs)
    d, n = cert.inputs["lam_D_res"].value, cert.inputs["lam_N_guide"].value
    if d < n:
        cert.extras["minimal_L"] = minimal_tm_length(d, n)
    else:
        cert.extras["minimal_L"] = None
        cert.notes.append("no finite L: R(L) decreases to lam_D_res, which is not below lam_N")
    if L is None:
        cert.notes.append("margin is the L -> infinity limit; any L beyond minimal_L certifies")
    return cert


def cert_big_resonator(lam_D_domain: InputLike, lam_N_guide: InputLike) -> Certificate:
    """Large resonator criterion ``lam_D(Omega) < lam_N``."""
    return evaluate(
        "big_resonator",
        lambda lam_D_domain, lam_N_guide: lam_D_domain - lam_N_guide,
        {"lam_D_domain": lam_D_domain, "lam_N_guide": lam_N_guide},
    )


def box_dirichlet(a: float, b: float, c: float) -> float:
    """First Dirichlet eigenvalue of a 3D box."""
    return PI2 * (1 / a**2 + 1 / b**2 + 1 / c**2)


def cube_inclusion(a_cube: InputLike, lam_N_guide: InputLike) -> Certificate:
    """Sufficient condition when the waveguide contains a cube of side ``a_cube``.

    Dirichlet eigenvalues decrease under domain inclusion, so
    ``3 pi^2 / a^2 < lam_N`` implies the large resonator criterion.
    """
    return evaluate(
        "cube_inclusion",
        lambda a_cube, lam_N_guide: 3 * PI2 / a_cube**2 - lam_N_guide,
        {"a_cube": a_cube, "lam_N_guide": lam_N_guide},
        notes=["valid by monotonicity of Dirichlet eigenvalues under inclusion"],
    )
