"""Multivariate maxima of moving multivariate maxima (M5 processes).

Closed-form limit copulas, extremal indices, tail-dependence and extremal
coefficients, plus Monte Carlo simulation to check them.
"""
from .copulas import Comonotone, Copula, Independence, Logistic
from .signatures import SignatureArray, column_max_sum, normalize, validate
from .theory import M5Model, summarize

__all__ = [
    "Comonotone", "Copula", "Independence", "Logistic",
    "SignatureArray", "column_max_sum", "normalize", "validate",
    "M5Model", "summarize",
]
__version__ = "0.1.0"
