"""Simulator for quantum, bulk and modified bulk Turing machines."""

__version__ = "0.1.0"

from .amplitude import Amplitude, parse_amplitude
from .errors import ConsumedError, MachineError, MbqtmError, ModelViolation, ParseError, PreconditionError
from .machine import BLANK, FORMAT_VERSION, Machine, Transition, format_machine, load_machine, parse_machine
from .superposition import Configuration, Superposition, halting_time, marginal, run, step
from .wellformed import check_unitarity_window, validate_wellformed

__all__ = [
    "__version__",
    "Amplitude",
    "parse_amplitude",
    "MbqtmError",
    "ParseError",
    "MachineError",
    "ConsumedError",
    "ModelViolation",
    "PreconditionError",
    "BLANK",
    "FORMAT_VERSION",
    "Machine",
    "Transition",
    "parse_machine",
    "format_machine",
    "load_machine",
    "Configuration",
    "Superposition",
    "step",
    "run",
    "marginal",
    "halting_time",
    "validate_wellformed",
    "check_unitarity_window",
]
