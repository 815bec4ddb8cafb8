"""Kazhdan-Lusztig cells, the a-function and distinguished involutions in Coxeter groups."""

from __future__ import annotations

from .coxeter import CoxeterGroup, CoxeterInputError, CoxeterSystem, ResourceLimitError, enumerate_ball
from .hecke import AFunction, AValue, ArithmeticRangeError
from .kl import CacheError, KLTable
from .laurent import LaurentPoly
from .store import load_group

__all__ = [
    "AFunction", "AValue", "ArithmeticRangeError", "CacheError", "CoxeterGroup", "CoxeterInputError",
    "CoxeterSystem", "KLTable", "LaurentPoly", "ResourceLimitError", "enumerate_ball", "load_group",
]
__version__ = "0.1.0"
