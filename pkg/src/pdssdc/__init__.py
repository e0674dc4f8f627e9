"""Precoded distributed single-symbol decodable space-time codes for relay networks."""

from .construction import construct_dostbc, construct_rspdssdc, min_T_table, rate_table_row
from .design import CodeSpec, Design, DesignEntry, extract_relay_matrices, extract_weight_matrices
from .errors import (
    DimensionError,
    MalformedDesignError,
    NotSingleSymbolDecodableError,
    SpecFormatError,
    UnsupportedParametersError,
)
from .exact import ExactComplex, ExactMatrix
from .precoding import build_precoders, precode
from .verification import SignalSet, check_lemma3, check_ssd, check_unitary, rate_upper_bound, verify_all

__version__ = "0.1.0"

__all__ = [
    "CodeSpec", "Design", "DesignEntry", "ExactComplex", "ExactMatrix", "SignalSet",
    "DimensionError", "MalformedDesignError", "NotSingleSymbolDecodableError", "SpecFormatError",
    "UnsupportedParametersError", "build_precoders", "check_lemma3", "check_ssd", "check_unitary",
    "construct_dostbc", "construct_rspdssdc", "extract_relay_matrices", "extract_weight_matrices",
    "min_T_table", "precode", "rate_table_row", "rate_upper_bound", "verify_all",
]
