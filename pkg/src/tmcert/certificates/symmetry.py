"""Embedded eigenvalues by reflection symmetry."""
from __future__ import annotations

from typing import Optional

from ..spectra import EssentialSpectrum, classify_eigenvalue
from .core import INCONCLUSIVE, PASS, Certificate, Input


def embed_by_symmetry(
    half_cert: Certificate,
    half_section_simply_connected: bool,
    full_section_simply_connected: bool,
    lam: Optional[float] = None,
) -> Certificate:
    """Lift a half-guide certificate to the mirror-doubled guide.

    The half guide (simply connected section) has an eigenvalue below its
    threshold.  Reflecting its eigenfunction across the symmetry plane gives
    an eigenfunction of the doubled guide, whose section is not simply
    connected, so its essential spectrum starts at 0 and the eigenvalue is
    embedded.

    ``lam`` is an upper bound for the half-guide eigenvalue, recorded for the
    classification (defaults to the margin plus the guide threshold when the
    half certificate carries ``lam_N_guide``).
    """
    notes = []
    verdict = PASS
    if not half_cert.passed:
        verdict = INCONCLUSIVE
        notes.append(f"half-guide certificate did not pass ({half_cert.verdict})")
    if not half_section_simply_connected:
        verdict = INCONCLUSIVE
        notes.append("rejected: the half section must be simply connected")
    if full_section_simply_connected:
        verdict = INCONCLUSIVE
        notes.append("rejected: the doubled section must not be simply connected")

    if lam is None and "lam_N_guide" in half_cert.inputs:
        lam = half_cert.margin + half_cert.inputs["lam_N_guide"].value
    extras = {"half_certificate": half_cert.id}
    if lam is not None and lam >= 0:
        extras["lam_upper"] = float(lam)
        extras["classification"] = classify_eigenvalue(max(lam, 0.0), EssentialSpectrum(0.0))
    if verdict == PASS:
        notes.append("doubled guide: essential spectrum is [0, inf), the eigenvalue is embedded")
    inputs = dict(half_cert.inputs)
    inputs["half_section_simply_connected"] = Input(float(half_section_simply_connected), "flag")
    inputs["full_section_simply_connected"] = Input(float(full_section_simply_connected), "flag")
    return Certificate("symmetry_embedding", inputs, half_cert.margin, verdict,
                       half_cert.uncertainty, dict(half_cert.safety_report), notes, extras)
