"""Semi-random graph process toolkit: online Hamiltonicity strategies, the
matching density ODE systems, and structure-count lower bounds."""

__version__ = "0.1.0"

from .graph_state import ProcessState
from .rng import RandomStream, spawn_seeds

__all__ = ["ProcessState", "RandomStream", "spawn_seeds", "__version__"]
