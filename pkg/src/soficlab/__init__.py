"""Executable soficity: Cayley balls, (K, eps)-actions and finite
approximations of the angle-doubling map."""

from .algebra import MonoidSpec, builtin, multiply, normalize
from .errors import BudgetExceeded, BudgetExhausted, RadiusTooLarge, SoficlabError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "MonoidSpec",
    "builtin",
    "multiply",
    "normalize",
    "SoficlabError",
    "BudgetExhausted",
    "BudgetExceeded",
    "RadiusTooLarge",
    "ValidationError",
]
