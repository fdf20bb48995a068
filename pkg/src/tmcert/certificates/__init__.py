"""Existence criteria evaluated as signed margins (negative means the criterion holds)."""
from .core import FAIL, INCONCLUSIVE, PASS, Certificate, Input, evaluate, verdict_for
from .legs import (
    KappaRoot,
    TripodeConstants,
    cert_sixlegs,
    cert_tripode,
    kappa,
    lemma_checks_sixlegs,
    pf_1d_check,
    pf_extremal,
    sixlegs_margin,
    tripode_constants,
    tripode_energy_identity_check,
)
from .material import (
    MaterialProfile,
    StructuredEps,
    cert_material_aniso,
    cert_material_general,
    cert_material_magnetic,
    cert_material_signs,
    cert_material_zeps,
    slab,
)
from .resonators import (
    box_dirichlet,
    cert_big_resonator,
    cert_cuboid,
    cert_te_resonator,
    cert_tem,
    cert_tm,
    cube_inclusion,
    minimal_tm_length,
    tm_quotient,
)
from .symmetry import embed_by_symmetry

__all__ = [name for name in dir() if not name.startswith("_")]
