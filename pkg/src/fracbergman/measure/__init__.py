"""Measures dV_alpha, weights, weighted norms and weight-class constants."""

from .classes import *  # noqa: F401,F403
from .classes import __all__ as _classes_all
from .core import *  # noqa: F401,F403
from .core import __all__ as _core_all
from .exponents import *  # noqa: F401,F403
from .exponents import __all__ as _exp_all

__all__ = [*_core_all, *_classes_all, *_exp_all]
