"""Resonator certificates against a unit-square guide.

Sweeps the resonator length for the cuboid, TEM and TM constructions and
prints where each verdict flips.
"""
import math

from tmcert import certificates as cert

PI2 = math.pi**2
lam_N = PI2  # first Neumann cutoff of the unit square
lam_D_res = PI2 / 2  # Dirichlet cutoff of a 2x2 resonator section

print(f"{'L':>6} {'cuboid a=2':>12} {'tem':>12} {'tm 2x2':>12}")
for L in (0.5, 1.0, 1.5, 2.0, 3.0, 5.0):
    row = [cert.cert_cuboid(2.0, L, lam_N), cert.cert_tem(L, lam_N),
           cert.cert_tm(lam_D_res, lam_N, L)]
    print(f"{L:6.2f} " + " ".join(f"{c.margin:+8.3f} {c.verdict[0]}" for c in row))

print(f"shortest TM resonator: L = {cert.minimal_tm_length(lam_D_res, lam_N):.6f}")
for a in (1.2, 2.0):
    print(f"cube inclusion a={a}: {cert.cube_inclusion(a, lam_N).verdict}")
