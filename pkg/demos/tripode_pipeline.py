"""Tripode pipeline on the L-shaped junction.

Solves the Dirichlet problem on the truncated L-shape at two resolutions,
turns the refinement gap into an uncertainty on lambda, and evaluates the
tripode criterion with it.

    python3 demos/tripode_pipeline.py [h]
"""
import sys

from tmcert import certificates as cert
from tmcert.geometry import preset_domain
from tmcert.spectra import laplacian_eigs

h = float(sys.argv[1]) if len(sys.argv) > 1 else 1 / 32
T = 4.0

res = laplacian_eigs(preset_domain("l_shape", T=T), "dirichlet", k=1, h=h, T=T,
                     estimate=True, t_sensitivity=True)
lam = float(res.eigenvalues[0])
err = res.extras["discretisation_error"][0] + abs(res.extras["T_sensitivity"][0])
print(f"lambda_h        = {lam:.6f}  (h = {h:g}, ports truncated at T = {T:g})")
print(f"Richardson est. = {float(res.extrapolated[0]):.6f}")
print(f"uncertainty     = {err:.3e}")

consts, c = cert.cert_tripode(cert.Input(lam, "fem", err))
print(f"C1 = {consts.C1:.5f}  C2 = {consts.C2:.5f}  C_square = {consts.C_square:.6f}")
print(f"4 C1 + C2       = {consts.precondition:.4f}")
print(f"2 C_sq C2 - 6   = {consts.tail_limit:.4f}")
print(f"margin {c.margin:+.4f} +/- {c.uncertainty:.2e}  ->  {c.verdict}")
