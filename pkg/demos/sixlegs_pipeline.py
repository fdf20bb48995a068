"""Six-legs criterion on the X-shaped junction.

    python3 demos/sixlegs_pipeline.py [h]
"""
import math
import sys

from tmcert import certificates as cert
from tmcert.geometry import preset_domain
from tmcert.spectra import laplacian_eigs

h = float(sys.argv[1]) if len(sys.argv) > 1 else 1 / 32
T = 4.0

kp = cert.kappa(math.pi)
k5 = cert.kappa(math.sqrt(5) * math.pi)
print(f"kappa(pi)          = {kp.kappa:.6f}  residual {kp.residual:.1e}")
print(f"kappa(sqrt(5) pi)  = {k5.kappa:.6f}  residual {k5.residual:.1e}")

res = laplacian_eigs(preset_domain("x_shape", T=T), "dirichlet", k=1, h=h, T=T,
                     estimate=True, t_sensitivity=True)
lam = float(res.eigenvalues[0])
err = res.extras["discretisation_error"][0] + abs(res.extras["T_sensitivity"][0])
print(f"lambda_X (h={h:g})  = {lam:.6f} +/- {err:.2e}")

c = cert.cert_sixlegs(cert.Input(lam, "fem", err), kp, k5)
print(f"margin {c.margin:+.4f} +/- {c.uncertainty:.2e}  ->  {c.verdict}")
print(f"display-form margin {c.extras['display_form_margin']:+.4f}")
