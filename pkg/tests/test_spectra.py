import math

import numpy as np
import pytest
from scipy import special

from tmcert.geometry import preset_domain
from tmcert.spectra import (
    CrossSection,
    EssentialSpectrum,
    FilonovViolation,
    classify_eigenvalue,
    disk_neumann_constant,
    essential_threshold,
    filonov_check,
    laplacian_eigs,
    product_spectrum,
    rect_spectrum,
)

PI2 = math.pi**2


def test_unit_square_dirichlet_first():
    assert rect_spectrum(1, 1, "dirichlet", 1)[0] == pytest.approx(2 * PI2)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.0, 1.0), (1.5, 1.0), (3.0, 1.0)])
def test_neumann_list_formula(a, b):
    v = rect_spectrum(a, b, "neumann", 3)
    assert v[0] == 0.0
    assert v[1] == pytest.approx(PI2 / a**2)
    assert v[2] == pytest.approx(min(PI2 / b**2, 4 * PI2 / a**2))


def test_two_by_one_second_positive_neumann():
    assert rect_spectrum(2, 1, "neumann", 3)[2] == pytest.approx(PI2)


def test_bad_rectangle_inputs():
    with pytest.raises(ValueError):
        rect_spectrum(0, 1)
    with pytest.raises(ValueError):
        rect_spectrum(1, 1, "robin")


def test_l_shape_eigenvalue_coarse():
    # h = 1/32 is enough for the published value within 0.5%
    lam = laplacian_eigs(preset_domain("l_shape"), k=1, h=1 / 32, estimate=False,
                         t_sensitivity=False).eigenvalues[0]
    assert lam == pytest.approx(9.1722, rel=5e-3)
    assert lam / PI2 == pytest.approx(0.9293, abs=5e-3)


def test_x_shape_eigenvalue_coarse():
    lam = laplacian_eigs(preset_domain("x_shape"), k=1, h=1 / 32, estimate=False,
                         t_sensitivity=False).eigenvalues[0]
    assert lam == pytest.approx(6.5186, rel=5e-3)
    assert lam / PI2 == pytest.approx(0.6605, abs=5e-3)


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_rectangle_fem_within_reported_estimate(bc):
    res = laplacian_eigs(preset_domain("rectangle", a=2, b=1), bc, k=3, h=1 / 16)
    exact = rect_spectrum(2, 1, bc, 4)
    exact = exact[1:] if bc == "neumann" else exact[:3]
    err = np.array(res.extras["discretisation_error"])
    assert np.all(res.eigenvalues >= np.array(exact) - 1e-10)
    assert np.all(res.eigenvalues - exact <= err)


def test_extras_record_t_sensitivity():
    res = laplacian_eigs(preset_domain("l_shape", T=2), k=1, h=1 / 16)
    assert "T_sensitivity" in res.extras
    assert res.extras["T_sensitivity"][0] >= 0
    assert res.summary()["upper_bound"] is True


def test_threshold_for_unit_square():
    assert essential_threshold([CrossSection.rectangle(1, 1)]).threshold == pytest.approx(PI2)


def test_threshold_zero_with_annulus():
    ann = CrossSection("annulus", 1.0, 5.0, simply_connected=False)
    assert essential_threshold([CrossSection.rectangle(1, 1), ann]).threshold == 0.0


def test_threshold_is_minimum():
    a = CrossSection("a", PI2, 30.0)
    b = CrossSection("b", 4.0, 30.0)
    assert essential_threshold([a, b]).threshold == 4.0


def test_threshold_requires_sections():
    with pytest.raises(ValueError):
        essential_threshold([])


def test_classification():
    ess = EssentialSpectrum(PI2)
    assert classify_eigenvalue(9.1722, ess) == "discrete"
    assert classify_eigenvalue(9.1722 + PI2, ess) == "embedded"
    assert classify_eigenvalue(0.0, EssentialSpectrum(0.0)) == "embedded"
    assert classify_eigenvalue(PI2, ess) == "embedded"


def test_product_spectrum_dirichlet_ladder():
    out = product_spectrum(1.0, [9.1722], [], cutoff=9.1722 + 9 * PI2 + 1e-9)
    assert [d["m"] for d in out] == [0, 1, 2, 3]
    assert [d["value"] for d in out] == pytest.approx([9.1722 + m * m * PI2 for m in range(4)])


def test_product_spectrum_neumann_skips_m0():
    out = product_spectrum(1.0, [], [PI2], cutoff=3 * PI2)
    assert [d["m"] for d in out] == [1]
    assert out[0]["classification"] == "embedded"


def test_product_spectrum_empty():
    assert product_spectrum(1.0, [], [], cutoff=100.0) == []


def test_filonov_rectangles():
    ok, margin = filonov_check(CrossSection.rectangle(1, 1))
    assert ok and margin == pytest.approx(-PI2)
    ok, margin = filonov_check(CrossSection.rectangle(2, 1), second_neumann=PI2)
    assert ok and margin == pytest.approx(PI2 - 5 * PI2 / 4)


def test_filonov_fem_corner_square():
    # bounded variant of the L-shape: the corner square alone
    dom = preset_domain("rectangle")
    d = laplacian_eigs(dom, "dirichlet", k=1, h=1 / 16, estimate=False).eigenvalues[0]
    n = laplacian_eigs(dom, "neumann", k=1, h=1 / 16, estimate=False).eigenvalues[0]
    assert filonov_check(CrossSection("corner", n, d))[0]


def test_filonov_violation_raises():
    with pytest.raises(FilonovViolation):
        filonov_check(CrossSection("broken", 5.0, 4.0))


def test_disk_constant_matches_bessel_derivative_zero():
    root = math.sqrt(disk_neumann_constant())
    assert abs(special.jvp(1, root)) < 1e-13
    assert root == pytest.approx(1.8411837813406593, abs=1e-13)
    disk = CrossSection.disk()
    assert disk.lam_N < disk.lam_D
    assert disk.provenance["lam_N"] == "tabulated"
