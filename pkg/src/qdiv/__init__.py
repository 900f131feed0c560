"""Quantum f-divergences, Riemannian semi-norms, and relative expansion coefficients."""

__version__ = "0.1.0"

from . import certificates, channels, coefficients, divergences, funcs, markov, opcore, recovery
from .errors import NumericalError, QdivError, ValidationError

__all__ = [
    "__version__",
    "certificates",
    "channels",
    "coefficients",
    "divergences",
    "funcs",
    "markov",
    "opcore",
    "recovery",
    "QdivError",
    "ValidationError",
    "NumericalError",
]
