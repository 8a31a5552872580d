"""Infinitely divisible laws, the random-integral maps I and J, class tests and factorization."""

__version__ = "0.1.0"

from .core import GridFunction, LevyExponent, LevyTriple, SpectralDensityPair, Verdict
from .catalog import CATALOG, DistributionSpec, default_fixtures, get_spec
from .exponents import apply_I, apply_IJ, apply_J, exponent_from_triple, invert_I, invert_IJ, invert_J
from .spectral import (
    spectral_I,
    spectral_IJ,
    spectral_invert_I,
    spectral_invert_J,
    spectral_J,
    triple_I,
    triple_IJ,
    triple_invert_I,
    triple_invert_J,
    triple_J,
)
from .membership import MembershipReport, Witness, check_Lf_via_second_derivative, classify, is_ID_log
from .factorization import FactorizationCertificate, convolve, factorize, verify_identity
from .simulate import SimConfig, SampleBatch, empirical_cf, random_integral, sample_levy_increment, verify_factorization_mc

__all__ = [
    "GridFunction", "LevyExponent", "LevyTriple", "SpectralDensityPair", "Verdict",
    "CATALOG", "DistributionSpec", "default_fixtures", "get_spec",
    "apply_I", "apply_IJ", "apply_J", "exponent_from_triple", "invert_I", "invert_IJ", "invert_J",
    "spectral_I", "spectral_IJ", "spectral_invert_I", "spectral_invert_J", "spectral_J",
    "triple_I", "triple_IJ", "triple_invert_I", "triple_invert_J", "triple_J",
    "MembershipReport", "Witness", "check_Lf_via_second_derivative", "classify", "is_ID_log",
    "FactorizationCertificate", "convolve", "factorize", "verify_identity",
    "SimConfig", "SampleBatch", "empirical_cf", "random_integral", "sample_levy_increment", "verify_factorization_mc",
]
