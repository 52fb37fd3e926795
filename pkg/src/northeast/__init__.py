"""Reproducible simulator and analysis toolkit for the northeast model.

A facilitated spin system on the square lattice: each site carries a
rate-1 clock, and a clock event resets the spin (to 1 with probability
p) only when the south and west neighbors both read spin 1.  All
randomness comes from a counter-mode event fabric, so forward
simulation, backward queries, and every experiment are bit-reproducible
from a single seed.
"""

__version__ = "0.1.0"

from .fabric import EventSeed
from .lattice import BoundaryRule, Configuration, Region, Site

__all__ = [
    "__version__",
    "EventSeed",
    "BoundaryRule",
    "Configuration",
    "Region",
    "Site",
]
