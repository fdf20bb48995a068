import json
import math

import numpy as np
import pytest

from tmcert import certificates as cert
from tmcert.certificates import FAIL, INCONCLUSIVE, PASS, Input
from tmcert.fem2d import FEFunction
from tmcert.geometry import preset_domain, triangulate
from tmcert.modes import QuadGrid, rayleigh_quotient, testfield as make_testfield
from tmcert.spectra import CrossSection, laplacian_eigs

PI = math.pi
PI2 = PI * PI


# -- core --------------------------------------------------------------------------


@pytest.mark.parametrize("margin,u,verdict", [(-1.0, 0.5, PASS), (1.0, 0.5, FAIL), (0.2, 0.5, INCONCLUSIVE),
                                               (-0.5, 0.5, INCONCLUSIVE), (0.0, 0.0, INCONCLUSIVE)])
def test_verdict_rule(margin, u, verdict):
    assert cert.verdict_for(margin, u) == verdict


def test_certificate_json_layout():
    c = cert.cert_cuboid(2.0, 2.0, Input(PI2, "analytic", 0.1))
    d = json.loads(json.dumps(c.to_json()))
    assert {"id", "inputs", "margin", "verdict", "notes"} <= set(d)
    assert d["inputs"]["lam_N_guide"] == {"value": PI2, "provenance": "analytic", "uncertainty": 0.1}


def test_propagation_reports_lipschitz():
    c = cert.cert_cuboid(Input(2.0, "user", 1e-3), 2.0, PI2)
    rep = c.safety_report["a"]
    # d/da (pi^2/a^2) = -2 pi^2 / a^3
    assert rep["lipschitz"] == pytest.approx(2 * PI2 / 8, rel=1e-2)
    assert c.uncertainty == pytest.approx(max(abs(rep["delta_minus"]), abs(rep["delta_plus"])))


# -- resonators --------------------------------------------------------------------


def test_cuboid_examples():
    c = cert.cert_cuboid(2.0, 2.0, PI2)
    assert c.margin == pytest.approx(-PI2 / 2) and c.verdict == PASS
    c = cert.cert_cuboid(1.0, 1.0, PI2)
    assert c.margin == pytest.approx(PI2) and c.verdict == FAIL
    assert cert.cert_cuboid(1.2, 10.0, PI2).verdict == PASS


def test_te_resonator_examples():
    c = cert.cert_te_resonator(PI2 / 4, 4.0, PI2)
    assert c.margin == pytest.approx(PI2 / 4 + PI2 / 16 - PI2) and c.passed
    disk = CrossSection.disk(1.0)
    assert cert.cert_te_resonator(disk.lam_N, 4.0, PI2).passed
    far = cert.cert_te_resonator(disk.lam_N, 1e6, PI2)
    assert far.margin == pytest.approx(disk.lam_N - PI2, abs=1e-9)


def test_te_resonator_multiplicity():
    c = cert.cert_te_resonator([PI2 / 4, PI2 / 4, 5.0, 50.0], 4.0, PI2)
    assert c.extras["multiplicity_lower_bound"] == 3


def test_tem_examples():
    assert cert.cert_tem(2.0, PI2).verdict == PASS
    assert cert.cert_tem(0.5, PI2).verdict == FAIL


def test_tm_limit_and_minimal_length():
    lam_D = PI2 / 2
    assert cert.tm_quotient(1e7, lam_D) == pytest.approx(lam_D, rel=1e-6)
    c = cert.cert_tm(lam_D, PI2)
    L = c.extras["minimal_L"]
    assert math.isfinite(L)
    assert cert.tm_quotient(L * (1 + 1e-9), lam_D) < PI2 <= cert.tm_quotient(L * (1 - 1e-9), lam_D)
    assert cert.cert_tm(lam_D, PI2, L=1.5 * L).passed
    assert cert.cert_tm(lam_D, PI2, L=0.5 * L).verdict == FAIL


def test_tm_without_finite_length():
    c = cert.cert_tm(2 * PI2, PI2)
    assert c.extras["minimal_L"] is None and c.verdict == FAIL


def test_cube_inclusion():
    c = cert.cube_inclusion(2.0, PI2)
    assert c.margin == pytest.approx(-PI2 / 4) and c.passed
    assert cert.cube_inclusion(1.0, PI2).verdict == FAIL
    assert cert.box_dirichlet(1.0, 2.0, 3.0) == pytest.approx(PI2 * (1 + 1 / 4 + 1 / 9))


@pytest.mark.parametrize("kind", ["cuboid", "te_resonator", "tem", "tm"])
def test_certificates_agree_with_field_quotients(kind):
    L = 2.0
    if kind == "cuboid":
        a, b = 2.0, 1.0
        E = make_testfield("cuboid_te", a=a, b=b, L=L)
        margin = cert.cert_cuboid(a, L, PI2).margin
        grid = QuadGrid((-1, 1, -0.5, 0.5, -L, 0), (16, 4, 16))
    elif kind == "te_resonator":
        a, b = 2.0, 1.0
        E = make_testfield("te_resonator", a=a, b=b, L=L)
        margin = cert.cert_te_resonator(PI2 / a**2, L, PI2).margin
        grid = QuadGrid((-1, 1, -0.5, 0.5, -L, 0), (16, 8, 16))
    elif kind == "tem":
        from tmcert.modes import capacitor_potential

        pot = capacitor_potential(triangulate(preset_domain("square_annulus"), 1 / 16))
        E = make_testfield("tem_resonator", pot=pot, L=L)
        margin = cert.cert_tem(L, PI2).margin
        grid = QuadGrid((-1, 1, -1, 1, -L, 0), (40, 40, 8))
    else:
        E = make_testfield("tm_resonator", a=1.0, b=1.0, L=L)
        margin = cert.cert_tm(2 * PI2, 3 * PI2, L=L).margin
        grid = QuadGrid((-0.5, 0.5, -0.5, 0.5, -L, 0), (16, 16, 16))
        q = rayleigh_quotient(E, grid).value
        assert q - 3 * PI2 == pytest.approx(margin, rel=1e-3)
        return
    q = rayleigh_quotient(E, grid).value
    assert q - PI2 == pytest.approx(margin, abs=1e-3 * q)


# -- legs --------------------------------------------------------------------------


def test_kappa_published_values():
    assert cert.kappa(PI).kappa == pytest.approx(4.0214, abs=1e-3)
    assert cert.kappa(math.sqrt(5 * PI2)).kappa == pytest.approx(6.0827, abs=1e-3)


def test_kappa_dirichlet_limit():
    k = cert.kappa(1e6).kappa
    assert PI2 - 1e-4 < k < PI2


def test_kappa_small_a():
    assert cert.kappa(0.01).kappa == pytest.approx(0.02, rel=0.05)


def test_kappa_rejects_nonpositive():
    with pytest.raises(ValueError):
        cert.kappa(0.0)


def test_kappa_matches_1d_oracle():
    from tmcert.eigensolve import fem1d_weighted_eigs

    for a in (PI, math.sqrt(5 * PI2)):
        assert fem1d_weighted_eigs(a, 8.0, 1e-3) == pytest.approx(cert.kappa(a).kappa, abs=1e-2)


def test_sixlegs_published_margin():
    c = cert.cert_sixlegs(6.5186)
    assert c.margin == pytest.approx(-1.0355, abs=0.02) and c.passed
    assert "display_form_margin" in c.extras


def test_sixlegs_limit_is_positive():
    kp, k5 = cert.kappa(PI).kappa, cert.kappa(math.sqrt(5 * PI2)).kappa
    assert cert.sixlegs_margin(PI2, kp, k5) > 0
    assert cert.sixlegs_margin(PI2, kp, k5, "display") == pytest.approx(
        PI2 * PI2 / (kp * (math.sqrt(2) * PI + math.sqrt(2 * k5))))
    with pytest.raises(ValueError):
        cert.cert_sixlegs(PI2)


@pytest.fixture(scope="module")
def x_fem():
    return laplacian_eigs(preset_domain("x_shape"), k=1, h=1 / 32, T=4.0)


@pytest.fixture(scope="module")
def l_fem():
    return laplacian_eigs(preset_domain("l_shape"), k=1, h=1 / 32, T=4.0)


def test_sixlegs_with_fem_upper_bound(x_fem):
    lam = float(x_fem.eigenvalues[0])
    unc = x_fem.extras["discretisation_error"][0] + abs(x_fem.extras["T_sensitivity"][0])
    c = cert.cert_sixlegs(Input(lam, "fem", unc))
    assert c.passed
    assert c.uncertainty > 0


def test_lemma_slack_positive_and_scale_invariant(x_fem):
    phi = x_fem.function(0)
    r1 = cert.lemma_checks_sixlegs(phi)
    r2 = cert.lemma_checks_sixlegs(FEFunction(phi.mesh, 3.0 * phi.values))
    assert r1.holds and r1.slack > 0
    assert r2.lhs == pytest.approx(9 * r1.lhs) and r2.rhs == pytest.approx(9 * r1.rhs)
    assert r2.relative_slack == pytest.approx(r1.relative_slack)


def test_pf_1d_extremal_is_tight():
    phi, dphi = cert.pf_extremal(PI)
    rep = cert.pf_1d_check(phi, dphi, PI, 30.0)
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-6)


def test_pf_1d_holds_for_other_functions():
    a = PI
    rep = cert.pf_1d_check(lambda t: np.exp(-t), lambda t: -np.exp(-t), a, 40.0)
    assert rep.holds and rep.slack > 0


def test_tripode_published_constants():
    consts, c = cert.cert_tripode(9.1722)
    assert consts.C2 == pytest.approx(3.571, abs=5e-3)
    assert consts.C_square == pytest.approx(0.3052, abs=1e-3)
    assert consts.tail_limit == pytest.approx(-3.8205, abs=0.02)
    assert consts.precondition < 0
    assert c.passed
    # the supremum is taken over exact values and the tail, never assumed
    assert c.margin == pytest.approx(max(max(consts.q_bound), consts.tail_q_bound))


def test_tripode_tail_bound_self_consistent():
    a = cert.tripode_constants(9.1722, 10_000)
    b = cert.tripode_constants(9.1722, 20_000)
    assert 0 < b.C_square - a.C_square < a.tail_bound


def test_tripode_exponential_term_diagnostic():
    consts, c = cert.cert_tripode(9.1722)
    assert consts.exp_term_max > 0
    assert any("diagnostic" in n for n in c.notes)


def test_tripode_decomposition(l_fem):
    chk = cert.tripode_energy_identity_check(l_fem.function(0))
    assert chk["symmetry_deviation"] < 1e-6
    assert chk["decomposition_residual"] < 1e-12
    assert chk["positive"] and chk["trace_x1"] > 0


# -- materials ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def sq():
    mesh = triangulate(preset_domain("rectangle"), 1 / 16)
    return mesh, FEFunction.interpolate(mesh, lambda x, y: np.cos(PI * x))


def _profile(mesh, eps=1.0, mu=1.0, nz=20):
    return cert.MaterialProfile(mesh, eps, mu, (-1.0, 1.0), nz=nz)


def test_unperturbed_media_give_zero(sq):
    mesh, phi = sq
    p = _profile(mesh)
    for c in (cert.cert_material_zeps(p, phi), cert.cert_material_general(p, phi, PI2),
              cert.cert_material_magnetic(p, phi)):
        assert c.margin == 0.0 and c.verdict == INCONCLUSIVE


def test_zeps_slab_passes(sq):
    mesh, phi = sq
    c = cert.cert_material_zeps(_profile(mesh, eps=cert.slab(2.0, -0.5, 0.5)), phi)
    # normalised phi: margin is the z-integral of (1 - eps) = -1
    assert c.margin == pytest.approx(-1.0, rel=1e-12) and c.passed
    assert "statement_form_margin" in c.extras


def test_zeps_sign_changing_net_negative(sq):
    mesh, phi = sq

    def eps(x, y, z):
        z = np.asarray(z, float)
        return np.where((z > -0.5) & (z < 0.0), 1.5, np.where((z > 0.0) & (z < 0.2), 0.8, 1.0)) + 0 * x

    c = cert.cert_material_zeps(_profile(mesh, eps=eps, nz=40), phi)
    assert c.margin == pytest.approx(-0.5 * 0.5 + 0.2 * 0.2, rel=1e-12)
    assert c.passed


def test_general_examples(sq):
    mesh, phi = sq
    energy = phi.energy() / phi.norm2()
    c = cert.cert_material_general(_profile(mesh, eps=cert.slab(2.0, -0.5, 0.5)), phi, PI2)
    assert c.margin == pytest.approx(0.25 * (1) * (-2) * energy, rel=1e-12) and c.passed
    c = cert.cert_material_general(_profile(mesh, eps=cert.slab(5.0, -0.5, 0.5)), phi, PI2)
    assert c.verdict == FAIL and c.notes
    c = cert.cert_material_general(_profile(mesh, mu=cert.slab(2.0, -0.5, 0.5)), phi, PI2)
    assert c.margin == pytest.approx(-0.5 * PI2, rel=1e-12) and c.passed
    c = cert.cert_material_general(_profile(mesh, eps=cert.slab(0.5, -0.5, 0.5)), phi, PI2)
    assert c.verdict == INCONCLUSIVE


def test_magnetic_examples(sq):
    mesh, phi = sq
    assert cert.cert_material_magnetic(_profile(mesh, eps=cert.slab(1.5, -0.2, 0.3)), phi).passed
    with pytest.raises(ValueError):
        cert.cert_material_magnetic(_profile(mesh, mu=2.0), phi)


def test_material_rejects_nonpositive(sq):
    mesh, phi = sq
    with pytest.raises(ValueError):
        cert.cert_material_zeps(_profile(mesh, eps=cert.slab(-1.0, 0, 0.5)), phi)


def test_sign_checker_cases(sq):
    mesh, _ = sq
    assert cert.cert_material_signs(_profile(mesh, mu=cert.slab(1.5, -0.2, 0.2))).verdict == PASS
    assert cert.cert_material_signs(_profile(mesh, eps=cert.slab(0.99, -0.2, 0.2))).verdict == FAIL
    assert cert.cert_material_signs(_profile(mesh)).verdict == FAIL


def _identity(x, y, z):
    return np.broadcast_to(np.eye(3), np.shape(x) + (3, 3))


def test_aniso_scalar_reduction(sq):
    mesh, phi = sq
    eps_t = lambda z: np.where((np.asarray(z) > -0.5) & (np.asarray(z) < 0.5), 2.0, 1.0)
    a = cert.cert_material_aniso(mesh, cert.StructuredEps(eps_t), _identity, phi, (-1.0, 1.0), 20)
    z = cert.cert_material_zeps(_profile(mesh, eps=cert.slab(2.0, -0.5, 0.5)), phi)
    assert a.margin == pytest.approx(z.margin, rel=1e-12)
    assert a.extras["second_margin"] < 0


def test_aniso_identity_zero(sq):
    mesh, phi = sq
    a = cert.cert_material_aniso(mesh, cert.StructuredEps(lambda z: 1.0 + 0 * np.asarray(z)), _identity,
                                 phi, (-1.0, 1.0), 8)
    assert a.margin == 0.0


# -- symmetry ----------------------------------------------------------------------


def test_symmetry_embedding():
    half = cert.cert_cuboid(2.0, 2.0, PI2)
    c = cert.embed_by_symmetry(half, True, False)
    assert c.verdict == PASS and c.extras["classification"] == "embedded"
    assert cert.embed_by_symmetry(half, True, True).verdict == INCONCLUSIVE
    failed = cert.cert_cuboid(1.0, 1.0, PI2)
    assert cert.embed_by_symmetry(failed, True, False).verdict == INCONCLUSIVE
