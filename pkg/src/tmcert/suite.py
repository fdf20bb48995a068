"""Reference reproduction suite: ten checks of published constants and properties.

Each ``criterion_<n>`` function returns a :class:`CriterionResult` holding
one row per compared quantity.  :func:`paper_table` runs them all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional

import numpy as np

from . import certificates as cert
from .eigensolve import fem1d_weighted_eigs
from .fem2d import FEFunction
from .geometry import preset_domain, triangulate
from .modes import (
    QuadGrid,
    capacitor_potential,
    maxwell_residual,
    rayleigh_quotient,
    rect_dirichlet_mode,
    rect_neumann_mode,
    te_mode,
    testfield,
    tm_mode,
    trapped_mode_dirichlet,
    trapped_mode_neumann,
)
from .spectra import CrossSection, filonov_check, laplacian_eigs, rect_spectrum

PI = math.pi
PI2 = PI * PI

# published reference values
LAM_L = 9.1722
LAM_X = 6.5186
KAPPA_PI = 4.0214
KAPPA_5 = 6.0827
SIXLEGS_MARGIN = -1.0355
TRIPODE_C2 = 3.571
TRIPODE_CSQ = 0.3052
TRIPODE_TAIL = -3.8205


@dataclass
class Row:
    quantity: str
    reference: object
    computed: object
    tolerance: object
    ok: bool

    def to_json(self) -> dict:
        return {"quantity": self.quantity, "reference": _j(self.reference),
                "computed": _j(self.computed), "tolerance": _j(self.tolerance), "ok": bool(self.ok)}


def _j(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


@dataclass
class CriterionResult:
    number: int
    title: str
    rows: List[Row] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.ok for r in self.rows)

    def add(self, quantity, reference, computed, tolerance, ok) -> Row:
        r = Row(quantity, reference, computed, tolerance, bool(ok))
        self.rows.append(r)
        return r

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "rows": [r.to_json() for r in self.rows], "notes": list(self.notes)}


def _close(x, ref, tol):
    return abs(x - ref) <= tol


@lru_cache(maxsize=None)
def fem_eig(preset: str, h: float, T: float = 4.0, estimate: bool = True):
    return laplacian_eigs(preset_domain(preset, T=T), "dirichlet", k=1, h=h, T=T,
                          estimate=estimate, t_sensitivity=estimate)


def relative_tau(res) -> float:
    """Relative uncertainty of a FEM eigenvalue from its refinement estimate."""
    lam = float(res.eigenvalues[0])
    err = res.extras.get("discretisation_error", [0.0])[0]
    err += abs(res.extras.get("T_sensitivity", [0.0])[0])
    return err / lam


def criterion_1(h: float = 1 / 64, T: float = 4.0) -> CriterionResult:
    c = CriterionResult(1, "L-shape Dirichlet eigenvalue")
    res = fem_eig("l_shape", h, T)
    lam = float(res.eigenvalues[0])
    c.add("lambda_L", LAM_L, lam, "0.5% rel", _close(lam, LAM_L, 5e-3 * LAM_L))
    ext = float(res.extrapolated[0])
    c.add("lambda_h >= Richardson(2h, h)", ext, lam, "upper bound", lam >= ext)
    c.notes.append(f"h={h}, T={T}, coarse={res.extras['coarse_eigenvalues'][0]!r}")
    return c


def criterion_2(h: float = 1 / 64, T: float = 4.0) -> CriterionResult:
    c = CriterionResult(2, "X-shape Dirichlet eigenvalue")
    res = fem_eig("x_shape", h, T)
    lam = float(res.eigenvalues[0])
    c.add("lambda_X", LAM_X, lam, "0.5% rel", _close(lam, LAM_X, 5e-3 * LAM_X))
    ext = float(res.extrapolated[0])
    c.add("lambda_h >= Richardson(2h, h)", ext, lam, "upper bound", lam >= ext)
    return c


def criterion_3(h1d: float = 1e-3, T1d: float = 8.0) -> CriterionResult:
    c = CriterionResult(3, "Poincare-Friedrichs roots kappa(a)")
    for a, ref, name in ((PI, KAPPA_PI, "kappa(pi)"), (math.sqrt(5 * PI2), KAPPA_5, "kappa(sqrt(5 pi^2))")):
        k = cert.kappa(a)
        c.add(name, ref, k.kappa, 1e-3, _close(k.kappa, ref, 1e-3))
        tol = 1e-12 * (1 + a)
        c.add(name + " residual", 0.0, k.residual, tol, abs(k.residual) <= tol)
        fem = fem1d_weighted_eigs(a, T1d, h1d)
        c.add(name + " 1D FEM", k.kappa, fem, 1e-2, _close(fem, k.kappa, 1e-2))
    return c


def criterion_4(h: float = 1 / 64, T: float = 4.0) -> CriterionResult:
    c = CriterionResult(4, "six-legs certificate")
    res = fem_eig("x_shape", h, T)
    lam = float(res.eigenvalues[0])
    tau = relative_tau(res)
    kp, k5 = cert.kappa(PI), cert.kappa(math.sqrt(5 * PI2))
    ref = cert.cert_sixlegs(LAM_X, kp, k5)
    c.add("margin at published lambda", SIXLEGS_MARGIN, ref.margin, 0.02,
          _close(ref.margin, SIXLEGS_MARGIN, 0.02))
    fem = cert.cert_sixlegs(cert.Input(lam, "fem", tau * lam), kp, k5)
    # below the reference resolution the window widens to the propagated budget
    tol = 0.02 if h <= 1 / 64 else max(0.02, fem.uncertainty)
    c.add("margin at FEM lambda", SIXLEGS_MARGIN, fem.margin, tol, _close(fem.margin, SIXLEGS_MARGIN, tol))
    c.add("verdict (uncertainty %.3g)" % fem.uncertainty, "pass", fem.verdict, "-", fem.verdict == "pass")
    c.notes.append(f"display-form margin {fem.extras['display_form_margin']!r}")
    return c


def criterion_5(h: float = 1 / 64, T: float = 4.0, N: int = 10_000) -> CriterionResult:
    c = CriterionResult(5, "tripode constants and certificate")
    consts, ref = cert.cert_tripode(LAM_L, N)
    c.add("C2", TRIPODE_C2, consts.C2, 5e-3, _close(consts.C2, TRIPODE_C2, 5e-3))
    c.add("C_square", TRIPODE_CSQ, consts.C_square, 1e-3, _close(consts.C_square, TRIPODE_CSQ, 1e-3))
    c.add("2 C_square C2 - 6", TRIPODE_TAIL, consts.tail_limit, 0.02,
          _close(consts.tail_limit, TRIPODE_TAIL, 0.02))
    c.add("4 C1 + C2 < 0", "< 0", consts.precondition, "-", consts.precondition < 0)
    res = fem_eig("l_shape", h, T)
    lam = float(res.eigenvalues[0])
    _, fem = cert.cert_tripode(cert.Input(lam, "fem", relative_tau(res) * lam), N)
    c.add("verdict at published lambda", "pass", ref.verdict, "-", ref.verdict == "pass")
    c.add("verdict at FEM lambda", "pass", fem.verdict, "-", fem.verdict == "pass")
    c.notes.append(f"sup bound {ref.margin!r}; exponential-term diagnostic max {consts.exp_term_max!r}")
    return c


def criterion_6(h: float = 1 / 32) -> CriterionResult:
    c = CriterionResult(6, "rectangle spectra and Filonov inequality")
    for a, b in ((1.0, 1.0), (2.0, 1.0)):
        dom = preset_domain("rectangle", a=a, b=b)
        for bc in ("dirichlet", "neumann"):
            k = 4
            res = laplacian_eigs(dom, bc, k=k, h=h)
            exact = rect_spectrum(a, b, bc, k + (1 if bc == "neumann" else 0))
            if bc == "neumann":
                exact = exact[1:]
            errs = res.extras["discretisation_error"]
            for i in range(k):
                lam = float(res.eigenvalues[i])
                ok = lam >= exact[i] - 1e-9 and lam - exact[i] <= errs[i]
                c.add(f"{a:g}x{b:g} {bc} #{i + 1}", exact[i], lam, errs[i], ok)
        fd = laplacian_eigs(dom, "dirichlet", k=1, h=h, estimate=False)
        fn = laplacian_eigs(dom, "neumann", k=2, h=h, estimate=False)
        sec = CrossSection(f"fem {a:g}x{b:g}", float(fn.eigenvalues[0]), float(fd.eigenvalues[0]),
                           provenance={"lam_N": "fem", "lam_D": "fem"})
        ok, margin = filonov_check(sec, float(fn.eigenvalues[1]))
        c.add(f"Filonov FEM {a:g}x{b:g}", "< 0", margin, "-", ok)
        ok, margin = filonov_check(CrossSection.rectangle(a, b))
        c.add(f"Filonov analytic {a:g}x{b:g}", "< 0", margin, "-", ok)
    ok, margin = filonov_check(CrossSection.disk())
    c.add("Filonov disk (tabulated)", "< 0", margin, "-", ok)
    return c


def criterion_7(tol: float = 1e-3) -> CriterionResult:
    c = CriterionResult(7, "test-field Rayleigh quotients")
    a, b, L = 2.0, 1.0, 3.0
    E = testfield("cuboid_te", a=a, b=b, L=L)
    q = rayleigh_quotient(E, QuadGrid((-a / 2, a / 2, -b / 2, b / 2, -L, 0.0), (16, 4, 16)))
    ref = PI2 / a**2 + PI2 / L**2
    c.add("cuboid_te", ref, q.value, f"{tol} rel", abs(q.value - ref) <= tol * ref)

    E = testfield("te_resonator", a=a, b=b, L=L)
    q = rayleigh_quotient(E, QuadGrid((-a / 2, a / 2, -b / 2, b / 2, -L, 0.0), (16, 8, 16)))
    ref = PI2 / a**2 + PI2 / L**2
    c.add("te_resonator", ref, q.value, f"{tol} rel", abs(q.value - ref) <= tol * ref)

    mesh = triangulate(preset_domain("square_annulus", outer=2.0, inner=1.0), 1 / 16)
    pot = capacitor_potential(mesh)
    L = 2.0
    E = testfield("tem_resonator", pot=pot, L=L)
    q = rayleigh_quotient(E, QuadGrid((-1.0, 1.0, -1.0, 1.0, -L, 0.0), (40, 40, 8)))
    ref = PI2 / L**2
    c.add("tem_resonator", ref, q.value, f"{tol} rel", abs(q.value - ref) <= tol * ref)

    a, b, L = 1.0, 1.0, 2.0
    E = testfield("tm_resonator", a=a, b=b, L=L)
    q = rayleigh_quotient(E, QuadGrid((-a / 2, a / 2, -b / 2, b / 2, -L, 0.0), (16, 16, 16)))
    ref = cert.tm_quotient(L, PI2 / a**2 + PI2 / b**2)
    c.add("tm_resonator", ref, q.value, f"{tol} rel", abs(q.value - ref) <= tol * ref)
    return c


FLOOR = 1e-9


def _box_boundary(a: float, n: int = 7):
    """Sample points and normals on the faces of ``(0,a) x (0,1) x (0,1)``."""
    g = (np.arange(n) + 0.5) / n
    U, V = np.meshgrid(g, g, indexing="ij")
    u, v = U.ravel(), V.ravel()
    pts, nus = [], []
    for axis, size in ((0, a), (1, 1.0), (2, 1.0)):
        for side in (0.0, size):
            p = np.zeros((len(u), 3))
            others = [d for d in range(3) if d != axis]
            scale = [a, 1.0, 1.0]
            p[:, others[0]] = u * scale[others[0]]
            p[:, others[1]] = v * scale[others[1]]
            p[:, axis] = side
            nu = np.zeros((len(u), 3))
            nu[:, axis] = 1.0 if side else -1.0
            pts.append(p)
            nus.append(nu)
    return np.vstack(pts), np.vstack(nus)


def residual_orders(E, lam, points, boundary=None, steps=(1e-3, 1e-4)):
    r = [maxwell_residual(E, lam, points, boundary, h) for h in steps]
    out = {}
    for name in ("pde", "div", "trace"):
        big, small = getattr(r[0], name), getattr(r[1], name)
        ratio = big / small if small > 0 else math.inf
        ok = (big <= FLOOR and small <= FLOOR) or ratio >= 50.0
        out[name] = (big, small, ratio, ok)
    return out


def criterion_8() -> CriterionResult:
    c = CriterionResult(8, "mode-construction residuals O(h_fd^2)")
    rng = np.random.default_rng(7)
    a = 1.0
    pts = rng.uniform(0.05, 0.95, size=(300, 3))
    bnd = _box_boundary(a)
    phiD, lamD = rect_dirichlet_mode(1.0, 1.0)
    phiN, lamN = rect_neumann_mode(1.0, 1.0)
    fields = []
    for m in (0, 1, 2):
        E, lam = trapped_mode_dirichlet(phiD, lamD, m, a)
        fields.append((f"trapped Dirichlet m={m}", E, lam, bnd))
    for m in (1, 2):
        E, lam = trapped_mode_neumann(phiN, lamN, m, a)
        fields.append((f"trapped Neumann m={m}", E, lam, bnd))
    lam = 1.5 * lamN
    fields.append(("TE mode", te_mode(phiN, lamN, lam), lam, None))
    lam = 1.5 * lamD
    fields.append(("TM mode", tm_mode(phiD, lamD, lam), lam, None))
    for name, E, lam, b in fields:
        for kind, (big, small, ratio, ok) in residual_orders(E, lam, pts, b).items():
            if kind == "trace" and b is None:
                continue
            c.add(f"{name} {kind}", "ratio>=50 or floor", (big, small), FLOOR, ok)
    c.notes.append("a residual at the round-off floor on both steps counts as converged")
    return c


def _square_mesh(h=1 / 16):
    return triangulate(preset_domain("rectangle", a=1.0, b=1.0), h)


def criterion_9() -> CriterionResult:
    c = CriterionResult(9, "material criteria")
    mesh = _square_mesh()
    # exact eigenfunction interpolated: a clean, deterministic phi_N
    phi = FEFunction.interpolate(mesh, lambda x, y: np.cos(PI * x))
    lamN = PI2
    one = cert.MaterialProfile(mesh, 1.0, 1.0, (-1.0, 1.0), nz=8)
    ident = lambda x, y, z: np.broadcast_to(np.eye(3), np.shape(x) + (3, 3))
    res = [
        cert.cert_material_zeps(one, phi),
        cert.cert_material_general(one, phi, lamN),
        cert.cert_material_magnetic(one, phi),
        cert.cert_material_aniso(mesh, cert.StructuredEps(lambda z: 1.0 + 0.0 * z), ident, phi, (-1.0, 1.0), 8),
    ]
    for r in res:
        c.add(f"eps=mu=1 {r.id}", 0.0, r.margin, 1e-14, abs(r.margin) <= 1e-14)
    sg = cert.cert_material_signs(one)
    c.add("eps=mu=1 material_signs", "fail", sg.verdict, "-", sg.verdict == "fail" and sg.margin == 0.0)

    slab = cert.MaterialProfile(mesh, cert.slab(2.0, -0.5, 0.5), 1.0, (-1.0, 1.0), nz=8)
    for r in (cert.cert_material_zeps(slab, phi), cert.cert_material_general(slab, phi, lamN),
              cert.cert_material_magnetic(slab, phi)):
        c.add(f"eps=2 slab {r.id}", "pass", r.margin, "-", r.verdict == "pass")

    bump = cert.MaterialProfile(mesh, 1.0, cert.slab(1.5, -0.2, 0.2), (-1.0, 1.0), nz=10)
    dip = cert.MaterialProfile(mesh, cert.slab(0.9, -0.2, 0.2), 1.0, (-1.0, 1.0), nz=10)
    for name, prof, want in (("mu bump", bump, "pass"), ("eps dip", dip, "fail"), ("eps=mu=1", one, "fail")):
        r = cert.cert_material_signs(prof)
        c.add(f"signs: {name}", want, r.verdict, "-", r.verdict == want)
    return c


def criterion_10(levels=(1 / 16, 1 / 32, 1 / 64), T: float = 4.0) -> CriterionResult:
    c = CriterionResult(10, "lemma checks on FEM eigenfunctions")
    kp = cert.kappa(PI)
    slacks, dec = [], []
    for h in levels:
        rx = fem_eig("x_shape", h, T, estimate=(h == levels[-1]))
        rep = cert.lemma_checks_sixlegs(rx.function(0), kp)
        slacks.append(rep.relative_slack)
        c.add(f"X lemma h={h:g}", "> 0", rep.relative_slack, "-", rep.holds and rep.slack > 0)
        rl = fem_eig("l_shape", h, T, estimate=(h == levels[-1]))
        chk = cert.tripode_energy_identity_check(rl.function(0))
        dec.append(chk["decomposition_residual"])
        ok = (chk["decomposition_residual"] <= 1e-12 and chk["symmetry_deviation"] <= 1e-6
              and chk["positive"] and chk["trace_positive"])
        c.add(f"L decomposition h={h:g}", 0.0, chk["decomposition_residual"], 1e-12, ok)
    d = np.abs(np.diff(slacks))
    c.add("X lemma slack converges", "shrinking steps", [float(v) for v in d], "-",
          bool(np.all(d[1:] < d[:-1])))
    c.add("L decomposition stays at quadrature tolerance", 1e-12, max(dec), "-", max(dec) <= 1e-12)
    return c


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def paper_table(h: Optional[float] = None) -> List[CriterionResult]:
    """Run all ten checks; ``h`` overrides the mesh size of the 2D eigenvalue checks."""
    out = []
    for n, fn in CRITERIA.items():
        if h is not None and n in (1, 2, 4, 5):
            out.append(fn(h=h))
        else:
            out.append(fn())
    return out


def format_table(results: List[CriterionResult]) -> str:
    lines = []
    head = f"{'#':>2}  {'quantity':<44} {'reference':>22} {'computed':>26} {'tolerance':>12}  ok"
    lines.append(head)
    lines.append("-" * len(head))
    for r in results:
        for row in r.rows:
            lines.append(
                f"{r.number:>2}  {row.quantity[:44]:<44} {_fmt(row.reference):>22} "
                f"{_fmt(row.computed):>26} {_fmt(row.tolerance):>12}  {'yes' if row.ok else 'NO'}"
            )
    lines.append("")
    lines.extend(r.line() for r in results)
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (tuple, list)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)
