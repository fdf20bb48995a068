"""Criteria for the multi-branch guides: six legs (X section) and tripode (L section).

Both reduce to a 2D Dirichlet eigenvalue below ``pi^2`` plus explicit
constants: the Poincare-Friedrichs root ``kappa(a)`` for the six legs and a
Fourier-series bound for the tripode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..fem2d import FEFunction, edge_integral, integrate_on, triangle_mask
from .core import INCONCLUSIVE, Certificate, Input, InputLike, as_inputs, evaluate

PI = math.pi
PI2 = PI * PI
KAPPA_RTOL = 1e-12


# -- transcendental root ----------------------------------------------------


@dataclass(frozen=True)
class KappaRoot:
    """Smallest positive root of ``sqrt(k) tan(sqrt(k)/2) = a``.

    ``t = sqrt(kappa)/2`` and its complement ``s = pi/2 - t`` are kept so the
    residual can be evaluated without the cancellation near ``t = pi/2``.
    """

    a: float
    kappa: float
    residual: float
    t: float
    s: float

    def __float__(self):
        return self.kappa


def _residual(a: float, t: float, s: float) -> float:
    if t <= s:
        return 2 * t * math.tan(t) - a
    return 2 * t / math.tan(s) - a


def kappa(a: float) -> KappaRoot:
    """Solve ``2 t tan t = a`` on ``(0, pi/2)`` and return ``kappa = 4 t^2``.

    The left side increases from 0 to infinity, so the root is unique.
    For small ``a`` the unknown is ``t``; for large ``a`` it is
    ``s = pi/2 - t``, which stays well conditioned as ``t -> pi/2``.
    Bisection narrows the bracket, Newton polishes.
    """
    a = float(a)
    if not a > 0:
        raise ValueError("a must be positive")

    if a <= 2.0:
        # g(t) = 2 t sin t - a cos t, increasing on (0, pi/2)
        f = lambda t: 2 * t * math.sin(t) - a * math.cos(t)
        df = lambda t: 2 * math.sin(t) + 2 * t * math.cos(t) + a * math.sin(t)
        lo, hi, sign = 0.0, PI / 2, 1.0
    else:
        # h(s) = 2 (pi/2 - s) cos s - a sin s, decreasing on (0, pi/2)
        f = lambda s: 2 * (PI / 2 - s) * math.cos(s) - a * math.sin(s)
        df = lambda s: -2 * math.cos(s) - 2 * (PI / 2 - s) * math.sin(s) - a * math.cos(s)
        lo, hi, sign = 0.0, PI / 2, -1.0

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if sign * f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9 * max(hi, 1e-300):
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        step = f(x) / df(x)
        x_new = min(max(x - step, lo), hi)
        if abs(x_new - x) <= 1e-17 * max(abs(x), 1e-300) or x_new == x:
            x = x_new
            break
        x = x_new

    if a <= 2.0:
        t, s = x, PI / 2 - x
    else:
        s, t = x, PI / 2 - x
    k = 4 * t * t
    return KappaRoot(a, k, _residual(a, t, s), t, s)


# -- six legs ------------------------------------------------------------------


def sixlegs_margin(lam: float, kappa_pi: float, kappa_5: float, form: str = "conservative") -> float:
    """Six-legs bound.

    ``form="display"`` uses ``sqrt(2 kappa_5)`` in the denominator (the
    sharpest bound the derivation yields); ``form="conservative"`` uses
    ``sqrt(kappa_5)``, a smaller denominator and therefore a larger, still
    valid, upper bound.
    """
    root = math.sqrt(2 * kappa_5) if form == "display" else math.sqrt(kappa_5)
    return lam - PI2 + PI2 * lam / (kappa_pi * (math.sqrt(2) * PI + root))


def cert_sixlegs(lam_X: InputLike, kappa_pi: Optional[KappaRoot] = None,
                 kappa_5: Optional[KappaRoot] = None) -> Certificate:
    """Certificate for the guide with six semi-infinite legs.

    ``lam_X`` is (an upper bound of) the first Dirichlet eigenvalue of the
    planar cross with unit-width arms.  The verdict uses the conservative
    form of the bound; the display form is reported alongside.
    """
    kappa_pi = kappa_pi or kappa(PI)
    kappa_5 = kappa_5 or kappa(math.sqrt(5 * PI2))
    inputs = as_inputs({"lam_X": lam_X})
    if not inputs["lam_X"].value < PI2:
        raise ValueError("lam_X must lie below pi^2 for the bound to apply")
    inputs["kappa_pi"] = Input(kappa_pi.kappa, "root-finder", abs(kappa_pi.residual) + 1e-14)
    inputs["kappa_5"] = Input(kappa_5.kappa, "root-finder", abs(kappa_5.residual) + 1e-14)
    cert = evaluate(
        "sixlegs",
        lambda lam_X, kappa_pi, kappa_5: sixlegs_margin(lam_X, kappa_pi, kappa_5, "conservative"),
        inputs,
        notes=[
            "margin uses sqrt(kappa_5) in the denominator, a weaker but valid form of the bound",
            "margin is increasing in lam_X, so an upper bound for lam_X keeps the verdict conservative",
        ],
    )
    cert.extras["display_form_margin"] = sixlegs_margin(inputs["lam_X"].value, kappa_pi.kappa,
                                                        kappa_5.kappa, "display")
    cert.extras["limit_margin_at_pi2"] = PI2 * PI2 / (kappa_pi.kappa * (math.sqrt(2) * PI + math.sqrt(kappa_5.kappa)))
    return cert


@dataclass
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool
    notes: List[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def relative_slack(self) -> float:
        return self.slack / self.rhs if self.rhs else 0.0


def lemma_checks_sixlegs(phi: FEFunction, kappa_pi: Optional[KappaRoot] = None) -> InequalityReport:
    """Check ``int_box phi^2 <= (1 / (2 kappa(pi))) int_X |grad phi|^2``.

    ``box`` is the central square ``(-1/2, 1/2)^2`` of the planar cross.
    """
    kp = (kappa_pi or kappa(PI)).kappa
    mesh = phi.mesh
    centre = triangle_mask(mesh, lambda x, y: (np.abs(x) < 0.5) & (np.abs(y) < 0.5))
    lhs = integrate_on(mesh, phi.at_quadrature() ** 2, centre)
    rhs = phi.energy() / (2 * kp)
    return InequalityReport(lhs, rhs, lhs <= rhs, extras={"kappa_pi": kp})


def pf_1d_check(phi: Callable, dphi: Callable, a: float, t_max: float, n: int = 200001,
                k: Optional[KappaRoot] = None) -> InequalityReport:
    """One-dimensional weighted inequality for a test function on ``(0, t_max)``.

    ``kappa(a) int_0^{1/2} phi^2 <= int_0^inf phi'^2 + a^2 int_{1/2}^inf phi^2``;
    the function is assumed negligible beyond ``t_max``.
    """
    from scipy.integrate import simpson

    kk = (k or kappa(a)).kappa
    t_in = np.linspace(0.0, 0.5, n)
    t_out = np.linspace(0.5, t_max, n)
    lhs = kk * simpson(phi(t_in) ** 2, x=t_in)
    rhs = (simpson(dphi(t_in) ** 2, x=t_in) + simpson(dphi(t_out) ** 2, x=t_out)
           + a * a * simpson(phi(t_out) ** 2, x=t_out))
    tol = 1e-9 * max(abs(rhs), 1.0)
    return InequalityReport(lhs, rhs, lhs <= rhs + tol, extras={"kappa": kk, "tolerance": tol})


def pf_extremal(a: float, k: Optional[KappaRoot] = None):
    """The function attaining equality: ``cos(sqrt(k) t)`` then an exponential tail."""
    kk = (k or kappa(a)).kappa
    w = math.sqrt(kk)
    c = math.cos(w / 2)

    def phi(t):
        t = np.asarray(t, float)
        return np.where(t <= 0.5, np.cos(w * t), c * np.exp(-a * (t - 0.5)))

    def dphi(t):
        t = np.asarray(t, float)
        return np.where(t <= 0.5, -w * np.sin(w * t), -a * c * np.exp(-a * (t - 0.5)))

    return phi, dphi


# -- tripode -----------------------------------------------------------------------


@dataclass(frozen=True)
class TripodeConstants:
    lam: float
    C1: float
    C2: float
    C_square: float
    N: int
    tail_bound: float
    q_bound: Tuple[float, ...]
    tail_q_bound: float
    tail_limit: float
    sup_bound: float
    precondition: float
    exp_term_max: float

    @property
    def C_square_upper(self) -> float:
        return self.C_square + self.tail_bound

    def to_json(self) -> dict:
        qmax = int(np.argmax(self.q_bound)) + 1
        return {
            "lam": self.lam, "C1": self.C1, "C2": self.C2, "C_square": self.C_square,
            "N": self.N, "tail_bound": self.tail_bound, "q_bound_first": list(self.q_bound[:5]),
            "argmax_q": qmax, "max_q": max(self.q_bound), "tail_q_bound": self.tail_q_bound,
            "tail_limit": self.tail_limit, "sup_bound": self.sup_bound,
            "precondition_4C1_plus_C2": self.precondition, "exp_term_max": self.exp_term_max,
        }


def _h(beta: np.ndarray) -> np.ndarray:
    # (e^{2b} - e^{-2b} - 4b) / (4 sinh(b)^2 b), rewritten without overflow
    e2 = np.exp(-2 * beta)
    return (1 - e2 * e2 - 4 * beta * e2) / ((1 - e2) ** 2 * beta)


def _exp_term(beta: np.ndarray) -> np.ndarray:
    # e^{2b} / (4 sinh(b)^2 b)
    return 1.0 / ((1 - np.exp(-2 * beta)) ** 2 * beta)


def tripode_constants(lam: float, N: int = 10_000) -> TripodeConstants:
    if not lam < PI2:
        raise ValueError("lam must be below pi^2 (beta_1 would be imaginary)")
    if N < 10:
        raise ValueError("N must be at least 10")
    n = np.arange(1, N + 1, dtype=float)
    beta = np.sqrt(n * n * PI2 - lam)
    C1 = 3 * (lam - PI2)
    C2 = 3 * (lam - PI2) + 12 * math.sqrt(2) * PI / (8 + math.sqrt(2))
    terms = 2 * n * n * PI2 / ((n * n + 1) * PI2 - lam) ** 2
    # summed from the small end so the partial sums are reproducible
    C_sq = math.fsum(terms[::-1].tolist())
    tail = 2.0 / (PI2 * N)
    Cu = C_sq + tail
    q = C1 / beta + C2 * (2 * Cu + _h(beta)) - 6
    # beyond N: C1/beta <= 0 is dropped and h decreases in beta
    tail_q = C2 * (2 * Cu + float(_h(beta[-1:])[0])) - 6 if C2 > 0 else C2 * 2 * Cu - 6
    exp_term = C1 / beta + C2 * _exp_term(beta)
    sup = max(float(q.max()), tail_q)
    return TripodeConstants(
        lam, C1, C2, C_sq, N, tail, tuple(float(v) for v in q), float(tail_q),
        2 * C_sq * C2 - 6, sup, 4 * C1 + C2, float(exp_term.max()),
    )


def cert_tripode(lam_L: InputLike, N: int = 10_000):
    """Tripode (three orthogonal legs) certificate.

    The margin is an upper bound for ``sup_n q(n)``: the exact ``q(n)`` for
    ``n <= N`` and, for ``n > N``, ``C2 (2 C_sq + h(beta_N)) - 6``.

    Returns
    -------
    (TripodeConstants, Certificate)
    """
    inputs = as_inputs({"lam_L": lam_L})
    lam = inputs["lam_L"].value
    consts = tripode_constants(lam, N)
    cert = evaluate("tripode", lambda lam_L: tripode_constants(lam_L, N).sup_bound, inputs,
                    notes=[
                        "margin = max over n <= N of q(n) and a bound for all n > N",
                        "beyond N the C1/beta_n term (negative) is dropped and the "
                        "exponential term is bounded by its value at n = N",
                    ])
    if not consts.C2 > 0:
        cert.notes.append("C2 <= 0: the tail argument needs C2 > 0")
        cert.verdict = INCONCLUSIVE
    if not consts.precondition < 0:
        cert.notes.append("precondition 4 C1 + C2 < 0 fails")
        cert.verdict = INCONCLUSIVE
    if consts.exp_term_max >= 0:
        cert.notes.append(
            "diagnostic: C1/beta_n + C2 e^{2 beta_n}/(4 sinh(beta_n)^2 beta_n) is not negative "
            f"for every n (max {consts.exp_term_max:.4g}); the margin does not rely on it"
        )
    cert.extras.update(consts.to_json())
    return consts, cert


def _swap_index(mesh) -> np.ndarray:
    from scipy.spatial import cKDTree

    tree = cKDTree(mesh.nodes)
    d, idx = tree.query(mesh.nodes[:, ::-1])
    if np.any(d > 1e-9):
        raise ValueError("mesh is not symmetric under (x, y) -> (y, x)")
    return idx


def tripode_energy_identity_check(phi: FEFunction) -> dict:
    """Ingredients of the tripode energy identity on the truncated L domain.

    Checks the diagonal symmetry of ``phi``, its sign, the split of the
    L2 norm into two legs plus the corner square, and the trace on ``x = 1``.
    """
    mesh = phi.mesh
    swap = _swap_index(mesh)
    v = phi.values
    scale = float(np.max(np.abs(v)))
    sym_dev = float(np.max(np.abs(v - v[swap]))) / scale
    vs = 0.5 * (v + v[swap])
    if vs.sum() < 0:
        vs = -vs
    ps = FEFunction(mesh, vs)
    q = ps.at_quadrature() ** 2
    total = ps.norm2()
    leg_x = integrate_on(mesh, q, triangle_mask(mesh, lambda x, y: x > 1))
    leg_y = integrate_on(mesh, q, triangle_mask(mesh, lambda x, y: y > 1))
    square = integrate_on(mesh, q, triangle_mask(mesh, lambda x, y: (x < 1) & (y < 1)))
    decomposition = total - (2 * leg_x + square)
    trace = edge_integral(mesh, ps, ((1.0, 0.0), (1.0, 1.0)))
    return {
        "symmetry_deviation": sym_dev,
        "symmetry_deviation_after": float(np.max(np.abs(vs - vs[swap]))) / scale,
        "min_value": float(vs.min()) / scale,
        "positive": bool(vs.min() >= -1e-8 * scale),
        "norm_L": total,
        "norm_leg": leg_x,
        "norm_leg_other": leg_y,
        "norm_square": square,
        "decomposition_residual": abs(decomposition) / total,
        "trace_x1": trace,
        "trace_positive": trace > 0,
    }
