"""Numerical laboratory for microlocal compactness forms on the flat torus."""

from mcflab.field import (
    Grid,
    SampledField,
    SpectralField,
    dft,
    integrate,
    lp_norm,
    sample_field,
)
from mcflab.fourier import (
    RAISED_COSINE,
    SMOOTH_STEP,
    CutoffProfile,
    MultiplierSymbol,
    apply_multiplier,
)
from mcflab.testfun import TestIntegrand, fp_norm_and_recession, s_transform
from mcflab.pairing import EmpiricalPairing, lambda_omega, pairing_limit, pairing_raw
from mcflab.oracle import ClosedFormMCF, eval_closed_form
from mcflab.extract import AtomicYoungMeasure, young_measure

__all__ = [
    "Grid",
    "SampledField",
    "SpectralField",
    "dft",
    "integrate",
    "lp_norm",
    "sample_field",
    "RAISED_COSINE",
    "SMOOTH_STEP",
    "CutoffProfile",
    "MultiplierSymbol",
    "apply_multiplier",
    "TestIntegrand",
    "fp_norm_and_recession",
    "s_transform",
    "EmpiricalPairing",
    "lambda_omega",
    "pairing_limit",
    "pairing_raw",
    "ClosedFormMCF",
    "eval_closed_form",
    "AtomicYoungMeasure",
    "young_measure",
]

__version__ = "0.1.0"
