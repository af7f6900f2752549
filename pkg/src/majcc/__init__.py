"""majcc: triangular (4,8^2) Majorana color code laboratory."""

from .algebra import MajoranaMonomial, commutes, hermitian_phase, mono_mul
from .code import CodeLayout, build_code, logical_operator, min_logical_weight, unfold, validate_code

__all__ = [
    "MajoranaMonomial",
    "commutes",
    "hermitian_phase",
    "mono_mul",
    "CodeLayout",
    "build_code",
    "validate_code",
    "logical_operator",
    "unfold",
    "min_logical_weight",
]

__version__ = "0.1.0"
