"""Constructive rewrites between exact / zero-error classes and their starred forms."""

from __future__ import annotations

from dataclasses import replace

from ..errors import MachineError, PreconditionError
from ..superposition import halting_time
from .checkers import check_eqp
from .instance import ClassId, DecisionProblemInstance
from .ir import CopyStep, MachineIR, SetStep, lower

__all__ = ["transform_eqp_to_ebqp_star", "transform_zqp_to_zbqp_star", "zbqp_star_instance", "measured_overhead"]


def transform_eqp_to_ebqp_star(inst: DecisionProblemInstance) -> DecisionProblemInstance:
    """Same transition function and step count, read by the (epsilon, theta)-measurement."""
    if inst.cls is not ClassId.EQP:
        raise PreconditionError(f"expected an EQP instance, got {inst.cls.value}")
    verdict = check_eqp(inst)
    if not verdict.in_class_evidence:
        raise PreconditionError(
            f"acceptance cell is not an eigenstate (p1 = {verdict.margins['p1']:.6g}); "
            "only eigenstates can be read with probability 1"
        )
    return replace(inst, cls=ClassId.EBQP_STAR)


def _fresh_initial(ir: MachineIR) -> str:
    taken = set(ir.compute_states) | {ir.final}
    name = ir.initial
    while name in taken:
        name += "'"
    return name


def transform_zqp_to_zbqp_star(ir: MachineIR) -> MachineIR:
    """Rewrite a zero-error machine so its answer can be read without observing.

    INIT now sets the accept cell (at the decision cell's index) to 1 and a
    new reject cell (left of every special cell) to 0, replacing the
    decision-cell initialisation or inserting an INIT phase if there was
    none.  WRITE copies the result into both cells under the same guard.
    The step overhead ``k`` depends only on the sweep depths, so it is the
    same for every input; it is recorded on the returned IR.
    """
    if ir.write is None:
        raise MachineError(f"IR {ir.name!r} has no WRITE phase")
    if "decision" not in ir.cells or "halt" not in ir.cells:
        raise MachineError("zero-error IR must declare halt and decision cells")
    if "decision" not in ir.write.targets:
        raise MachineError("WRITE phase does not write the decision cell")
    if ir.write.guard != "halt":
        raise MachineError("WRITE phase must be guarded by the halt cell")
    cells = {role: idx for role, idx in ir.cells.items() if role != "decision"}
    cells["accept"] = ir.cells["decision"]
    cells["reject"] = min(ir.cells.values()) - 1
    init = tuple(s for s in ir.init or () if s.role != "decision") + (SetStep("accept", "1"), SetStep("reject", "0"))
    targets = tuple(t for t in ir.write.targets if t != "decision") + ("accept", "reject")
    out = replace(
        ir,
        name=f"{ir.name}-zbqp-star",
        cells=cells,
        init=init,
        write=CopyStep(ir.write.source, targets, ir.write.guard, ir.write.guard_symbol),
        initial=ir.initial if ir.init else _fresh_initial(ir),
        overhead=None,
    )
    lower(out)  # raises with the failing column if the rewrite broke well-formedness
    k = (out.init_steps + out.write_steps) - (ir.init_steps + ir.write_steps)
    return replace(out, overhead=k)


def measured_overhead(original: MachineIR, transformed: MachineIR, inputs) -> list[int]:
    """Step-count differences of the lowered machines on each input."""
    m0, m1 = lower(original), lower(transformed)
    return [halting_time(m1, x) - halting_time(m0, x) for x in inputs]


def zbqp_star_instance(inst: DecisionProblemInstance) -> DecisionProblemInstance:
    """ZQP instance built on an IR -> ZBQP* instance on the transformed IR."""
    if inst.cls is not ClassId.ZQP or inst.ir is None:
        raise PreconditionError("expected a ZQP instance given by a phased IR")
    ir2 = transform_zqp_to_zbqp_star(inst.ir)
    cells = {r: i for r, i in inst.cells.items() if r != "decision"}
    cells.update(accept=ir2.cells["accept"], reject=ir2.cells["reject"])
    return replace(inst, cls=ClassId.ZBQP_STAR, machine=lower(ir2), ir=ir2, cells=cells,
                   budget=inst.budget.shifted(ir2.overhead))
