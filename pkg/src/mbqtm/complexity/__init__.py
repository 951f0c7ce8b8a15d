"""Decision-class checkers, phased machine IR and the constructive rewrites."""

from .checkers import (
    GUARD,
    check,
    check_bbqp,
    check_bbqp_star,
    check_bqp,
    check_ebqp,
    check_ebqp_star,
    check_eqp,
    check_zbqp,
    check_zbqp_star,
    check_zqp,
    derive_bbqp_params,
)
from .instance import ClassId, DecisionProblemInstance, StepBudget, Verdict, load_instance, parse_instance
from .ir import CopyStep, MachineIR, SetStep, format_ir, load_ir, lower, parse_ir
from .transforms import (
    measured_overhead,
    transform_eqp_to_ebqp_star,
    transform_zqp_to_zbqp_star,
    zbqp_star_instance,
)

__all__ = [
    "GUARD",
    "ClassId",
    "StepBudget",
    "DecisionProblemInstance",
    "Verdict",
    "parse_instance",
    "load_instance",
    "MachineIR",
    "SetStep",
    "CopyStep",
    "parse_ir",
    "format_ir",
    "load_ir",
    "lower",
    "check",
    "check_eqp",
    "check_ebqp",
    "check_ebqp_star",
    "check_bqp",
    "check_bbqp",
    "check_bbqp_star",
    "derive_bbqp_params",
    "check_zqp",
    "check_zbqp",
    "check_zbqp_star",
    "transform_eqp_to_ebqp_star",
    "transform_zqp_to_zbqp_star",
    "zbqp_star_instance",
    "measured_overhead",
]
