"""Property-based checks of the invariants each module promises."""
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from tmcert import certificates as cert
from tmcert.cli import RunConfig
from tmcert.fem2d import FEFunction, assemble_full, integrate
from tmcert.geometry import Rect, RectilinearDomain2D, StripPort, check_mesh, refine, triangulate
from tmcert.spectra import (
    CrossSection,
    EssentialSpectrum,
    classify_eigenvalue,
    essential_threshold,
    filonov_check,
    rect_spectrum,
)

PI2 = math.pi**2
FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

# dyadic sizes keep breakpoints exact
sizes = st.sampled_from([0.5, 0.75, 1.0, 1.25, 1.5, 2.0])
steps = st.sampled_from([1 / 4, 1 / 8, 1 / 16])


@st.composite
def rectilinear_domains(draw):
    a, b = draw(sizes), draw(sizes)
    rects = [Rect(0.0, 0.0, a, b)]
    if draw(st.booleans()):
        c = draw(sizes)
        w = draw(st.sampled_from([v for v in (0.5, 0.75, 1.0) if v <= b]))
        rects.append(Rect(a, 0.0, a + c, w))
    ports = ()
    if draw(st.booleans()):
        T = draw(st.sampled_from([0.5, 1.0, 2.0]))
        ports = (StripPort(((0.0, b), (min(a, 0.5), b)), "+y", min(a, 0.5), T),)
    return RectilinearDomain2D(tuple(rects), ports)


@FAST
@given(rectilinear_domains(), steps)
def test_generated_meshes_satisfy_invariants(dom, h):
    assume(h <= dom.min_feature() / 2)
    m = triangulate(dom, h)
    assert check_mesh(m, holes=0) == []
    assert abs(math.fsum(m.signed_areas()) - dom.area) < 1e-12
    refined = refine(m)
    assert check_mesh(refined, holes=0) == []
    assert refined.n_tris == 4 * m.n_tris


@FAST
@given(rectilinear_domains(), steps)
def test_triangulate_bit_identical(dom, h):
    assume(h <= dom.min_feature() / 2)
    a, b = triangulate(dom, h), triangulate(dom, h)
    assert a.nodes.tobytes() == b.nodes.tobytes() and a.tris.tobytes() == b.tris.tobytes()
    assert a.edge_tags == b.edge_tags


@FAST
@given(rectilinear_domains(), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_patch_test_and_kernel(dom, c0, c1, c2):
    m = triangulate(dom, min(1 / 8, dom.min_feature() / 2))
    K, M = assemble_full(m)
    assert abs(K - K.T).max() <= 1e-13
    assert np.max(np.abs(K @ np.ones(m.n_nodes))) < 1e-12
    u = FEFunction.interpolate(m, lambda x, y: c0 + c1 * x + c2 * y)
    assert math.isclose(u.energy(), (c1 * c1 + c2 * c2) * dom.area, rel_tol=1e-11, abs_tol=1e-11)
    exact = math.fsum(r.area * (c0 + c1 * (r.x0 + r.x1) / 2 + c2 * (r.y0 + r.y1) / 2) for r in dom.all_rects())
    assert math.isclose(integrate(m, lambda x, y: c0 + c1 * x + c2 * y), exact, rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e6, allow_nan=False))
def test_kappa_residual_and_range(a):
    k = cert.kappa(a)
    assert abs(k.residual) <= 1e-12 * (1 + a)
    assert 0 < k.kappa < PI2


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e5), st.floats(1e-3, 1e5))
def test_kappa_monotone(a1, a2):
    assume(a1 < a2 * (1 - 1e-9))
    assert cert.kappa(a1).kappa < cert.kappa(a2).kappa


@settings(max_examples=100, deadline=None)
@given(st.floats(5.0, 9.8), st.floats(1e-6, 1e-2))
def test_sixlegs_margin_continuous(lam, d):
    kp, k5 = cert.kappa(math.pi).kappa, cert.kappa(math.sqrt(5 * PI2)).kappa
    assume(lam + d < PI2)
    m0 = cert.sixlegs_margin(lam, kp, k5)
    m1 = cert.sixlegs_margin(lam + d, kp, k5)
    # derivative in lambda is 1 + pi^2 / (kappa(pi) (pi + sqrt(kappa_5)))
    assert 0 < m1 - m0 <= d * (1 + PI2 / (kp * (math.pi + math.sqrt(k5)))) * (1 + 1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.8, 3.0), st.floats(0.5, 5.0), st.floats(1e-4, 0.05))
def test_reported_lipschitz_bounds_half_step(a, L, tau):
    c = cert.cert_cuboid(cert.Input(a, "user", tau), cert.Input(L, "user", tau), PI2)
    for name in ("a", "L"):
        rep = c.safety_report[name]
        vals = {"a": a, "L": L}
        for s in (-0.5, 0.5):
            moved = dict(vals)
            moved[name] += s * tau
            m = cert.cert_cuboid(moved["a"], moved["L"], PI2).margin
            assert abs(m - c.margin) <= rep["lipschitz"] * 0.5 * tau * (1 + 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 5), st.floats(0, 5))
def test_verdict_monotone_in_margin(m, d, u):
    order = {"pass": 0, "inconclusive": 1, "fail": 2}
    assert order[cert.verdict_for(m - d, u)] <= order[cert.verdict_for(m, u)]


@settings(max_examples=30, deadline=None)
@given(st.floats(8.5, 9.8))
def test_c_square_partial_sums(lam):
    prev = None
    for N in (50, 200, 1000):
        c = cert.tripode_constants(lam, N)
        if prev is not None:
            assert c.C_square > prev.C_square
            assert c.C_square <= prev.C_square + prev.tail_bound
        prev = c


@settings(max_examples=30, deadline=None)
@given(st.floats(8.5, 9.8))
def test_tripode_margin_is_max_over_candidates(lam):
    consts, c = cert.cert_tripode(lam, 500)
    assert c.margin == max(max(consts.q_bound), consts.tail_q_bound)


sections = st.builds(lambda n, d, sc: CrossSection("s", n, n + d, sc),
                     st.floats(0.1, 50), st.floats(0.1, 50), st.booleans())


@FAST
@given(st.lists(sections, min_size=1, max_size=4), sections)
def test_threshold_never_rises_when_adding(secs, extra):
    assert essential_threshold(secs + [extra]).threshold <= essential_threshold(secs).threshold


@FAST
@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(0, 10_000))
def test_classification_shift_invariant(lam, thr, shift):
    # integers are exact in double precision, so the shift cannot round
    a = classify_eigenvalue(float(lam), EssentialSpectrum(float(thr)))
    b = classify_eigenvalue(float(lam + shift), EssentialSpectrum(float(thr + shift)))
    assert a == b


@FAST
@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.25, 4))
def test_rectangle_spectra_scale_and_filonov(a, b, t):
    for bc in ("dirichlet", "neumann"):
        v = np.array(rect_spectrum(a, b, bc, 6))
        w = np.array(rect_spectrum(t * a, t * b, bc, 6))
        assert np.all(np.diff(v) >= 0)
        assert np.allclose(w, v / t**2, rtol=1e-12)
    assert filonov_check(CrossSection.rectangle(a, b))[0]


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 30), st.floats(1.0, 60))
def test_tm_quotient_above_cutoff_and_decreasing(lam_D, L):
    r1, r2 = cert.tm_quotient(L, lam_D), cert.tm_quotient(2 * L, lam_D)
    assert r1 > lam_D and r2 < r1


jobs = st.one_of(
    st.builds(lambda a: {"kind": "kappa", "params": {"a": a}}, st.lists(st.floats(0.01, 100), max_size=3)),
    st.builds(lambda p, h, k: {"kind": "spectrum", "preset": p, "numerics": {"h": h, "k": k}},
              st.sampled_from(["rectangle", "l_shape", "x_shape"]), st.sampled_from([0.25, 0.125]),
              st.integers(1, 4)),
    st.builds(lambda L: {"kind": "certificate", "params": {"id": "tem", "L": L, "lam_N_guide": PI2}},
              st.floats(0.1, 10)),
)


@FAST
@given(st.lists(jobs, max_size=5))
def test_config_round_trip(job_list):
    for i, j in enumerate(job_list):
        j["id"] = f"job{i}"
    cfg = RunConfig.from_dict({"version": 1, "jobs": job_list})
    again = RunConfig.loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()
