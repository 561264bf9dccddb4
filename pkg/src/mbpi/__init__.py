"""Critical Markov branching processes with immigration and regularly varying intensities.

Modules
-------
slowvar      slowly varying families and power-weighted integrals
laws         offspring and immigration intensities
kolmogorov   backward flow, transition GFs and coefficient extraction
invariant    limit GFs, invariant measures and their checks
asymptotics  validators for the large-time behaviour of ``p_00(t)``
montecarlo   event-driven simulation
config, cli  experiment runner
"""
from .errors import (
    ArgumentError,
    ConfigError,
    ConstructionError,
    DomainError,
    MBPIError,
    NumericalError,
    RegimeError,
)
from .laws import IntensityTable, ProcessSpec, build_intensities
from .slowvar import SlowlyVaryingSpec

__all__ = [
    "ArgumentError",
    "ConfigError",
    "ConstructionError",
    "DomainError",
    "IntensityTable",
    "MBPIError",
    "NumericalError",
    "ProcessSpec",
    "RegimeError",
    "SlowlyVaryingSpec",
    "build_intensities",
]
__version__ = "0.1.0"
