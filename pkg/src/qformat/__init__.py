"""Low-bit quantization datatypes: Student Float codebooks, block quantization,
distribution profiling and MAC hardware cost modelling."""
from .codebook import (
    ApotSpec,
    Codebook,
    builtin,
    enumerate_apot,
    gen_normal_float,
    gen_student_float,
    supernormal_extend,
    validate,
)
from .quant import BACKEND, QuantScheme, dequantize, quantize

__version__ = "0.1.0"

__all__ = [
    "ApotSpec",
    "BACKEND",
    "Codebook",
    "QuantScheme",
    "builtin",
    "dequantize",
    "enumerate_apot",
    "gen_normal_float",
    "gen_student_float",
    "quantize",
    "supernormal_extend",
    "validate",
]
