"""Encrypted multi-source transfer with privacy-preserving rule mining."""

from .curve import CurveParams, DomainParams, ECPoint, INFINITY, make_domain, validate_curve
from .ecelgamal import Ciphertext, EncodingParams, KeyPair, keygen
from .etl import ConfidentialAttr, Dataset, Record, Schema
from .field_arith import FieldElement, Prime
from .mining_eval import AccuracyReport, AssociationRule, MiningParams
from .perturb import NoiseSpec, Op, PerturbPlan

__all__ = [
    "AccuracyReport",
    "AssociationRule",
    "Ciphertext",
    "ConfidentialAttr",
    "CurveParams",
    "Dataset",
    "DomainParams",
    "ECPoint",
    "EncodingParams",
    "FieldElement",
    "INFINITY",
    "KeyPair",
    "MiningParams",
    "NoiseSpec",
    "Op",
    "PerturbPlan",
    "Prime",
    "Record",
    "Schema",
    "keygen",
    "make_domain",
    "validate_curve",
]

__version__ = "0.1.0"
