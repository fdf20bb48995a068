"""Numerical checks of trapped-mode existence criteria for electromagnetic waveguides.

Subpackages and modules
-----------------------
geometry      rectilinear domains, truncated ports, structured meshes
fem2d         P1 assembly and quadrature
eigensolve    shift-invert eigenpairs and a 1D oracle problem
spectra       cross-section cutoffs and spectrum classification
modes         guided modes, trapped modes, resonator test fields
certificates  criteria as signed margins
cli           batch front end (``tmcert``)
"""

__version__ = "0.1.0"
