"""Fault-tolerant cellular automata: engines, codes, simulations and the ``lab`` harness."""

__version__ = "0.1.0"

from .core import (VAC, CAError, FieldMap, TransitionFunction, TransitionMatrix, builtin,
                   evolve, evolve_array, random_rule)

__all__ = ["VAC", "CAError", "FieldMap", "TransitionFunction", "TransitionMatrix", "builtin",
           "evolve", "evolve_array", "random_rule", "__version__"]
