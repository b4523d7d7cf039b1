"""Two-dimensional simulator for compressible, heat-conducting two-phase flow.

The model couples the compressible Navier-Stokes-Fourier system to an
Allen-Cahn order parameter.  The package provides the constitutive bundle and
its hypothesis checks (``eos``), grid operators (``grid``), the time stepper
(``solver``), run-level monitors (``diagnostics``), a manufactured-solution
harness (``verify``) and a command-line front end (``app``).
"""

from .errors import (
    ConfigError,
    DomainError,
    FormatError,
    NsfacError,
    StateCorruptionError,
    UsageError,
)
from .eos import EosSpec, PotentialSpec, TransportSpec
from .grid import BcKind, GridSpec
from .solver import Model, RegularizationParams, State, StepControl, step
from .app.config import RunConfig, parse_config
from .simulation import RunResult, run

__version__ = "0.1.0"

__all__ = [
    "BcKind", "ConfigError", "DomainError", "EosSpec", "FormatError", "GridSpec", "Model",
    "NsfacError", "PotentialSpec", "RegularizationParams", "RunConfig", "RunResult", "State",
    "StateCorruptionError", "StepControl", "TransportSpec", "UsageError", "parse_config", "run",
    "step",
]
