"""Decision-problem instances: machine, step budget, input and cell roles.

Instance files are line oriented::

    class BBQP*
    machine bqp-demo.mqt
    budget poly 3
    cell acceptance -1
    input 101
    epsilon 0.0455
    theta 2^-5
    n 1024

``budget poly c0 c1 c2`` means ``c0 + c1*l + c2*l^2`` for input length l and
``budget const T`` a fixed count.  ``ir <file>`` may replace ``machine``; the
IR is lowered and its declared cells fill any role not given explicitly.
Relative paths resolve against the instance file, then the bundled data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ParseError, PreconditionError
from ..machine import BLANK, Machine, load_machine
from ..measurement import NOISE_KINDS
from ..resources import resolve
from ..statistics import parse_real
from .ir import MachineIR, load_ir, lower

__all__ = ["ClassId", "StepBudget", "DecisionProblemInstance", "Verdict", "parse_instance", "load_instance"]


class ClassId(str, enum.Enum):
    EQP = "EQP"
    EBQP = "EBQP"
    EBQP_STAR = "EBQP*"
    BQP = "BQP"
    BBQP = "BBQP"
    BBQP_STAR = "BBQP*"
    ZQP = "ZQP"
    ZBQP = "ZBQP"
    ZBQP_STAR = "ZBQP*"

    @property
    def required_cells(self) -> tuple[str, ...]:
        if self is ClassId.ZQP:
            return ("halt", "decision")
        if self in (ClassId.ZBQP, ClassId.ZBQP_STAR):
            return ("halt", "accept", "reject")
        return ("acceptance",)

    @property
    def starred(self) -> bool:
        return self.value.endswith("*")


@dataclass(frozen=True)
class StepBudget:
    """Polynomial step count in the input length, or a constant."""

    coefficients: tuple[int, ...] = ()
    constant: int | None = None

    def __post_init__(self):
        if bool(self.coefficients) == (self.constant is not None):
            raise PreconditionError("give either polynomial coefficients or a constant")
        if self.constant is not None and self.constant < 1:
            raise PreconditionError("constant budget must be at least 1")
        if any(c < 0 or int(c) != c for c in self.coefficients):
            raise PreconditionError("budget coefficients must be non-negative integers")

    def __call__(self, length: int) -> int:
        if self.constant is not None:
            return self.constant
        steps = sum(c * length**i for i, c in enumerate(self.coefficients))
        if steps < 1:
            raise PreconditionError(f"budget evaluates to {steps} at length {length}")
        return steps

    def shifted(self, k: int) -> "StepBudget":
        if self.constant is not None:
            return StepBudget(constant=self.constant + k)
        coeffs = list(self.coefficients) or [0]
        coeffs[0] += k
        return StepBudget(tuple(coeffs))

    def __str__(self):
        if self.constant is not None:
            return f"const {self.constant}"
        return "poly " + " ".join(map(str, self.coefficients))


@dataclass(frozen=True)
class DecisionProblemInstance:
    cls: ClassId
    machine: Machine
    budget: StepBudget
    input: str
    cells: dict
    ir: MachineIR | None = None
    epsilon: float | None = None
    theta: float | None = None
    n: int | None = None
    noise: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "cls", ClassId(self.cls))
        missing = [r for r in self.cls.required_cells if r not in self.cells]
        if missing:
            raise PreconditionError(f"class {self.cls.value} needs cell role(s): {', '.join(missing)}")
        used = {r: self.cells[r] for r in self.cls.required_cells}
        if len(set(used.values())) != len(used):
            raise PreconditionError("cell roles must use distinct indices")
        if self.noise is not None and self.noise not in NOISE_KINDS:
            raise PreconditionError(f"noise must be one of {NOISE_KINDS}")
        for s in self.input:
            if s not in self.machine.alphabet or s == BLANK:
                raise PreconditionError(f"input symbol {s!r} is not a non-blank symbol of the machine")

    @property
    def steps(self) -> int:
        return self.budget(len(self.input))

    def cell(self, role: str) -> int:
        return self.cells[role]


@dataclass
class Verdict:
    """Evidence from one input; language membership is out of reach of any run.

    ``decision`` is accept or reject when the criterion of the class holds
    on this input, else none.
    """

    cls: ClassId
    in_class_evidence: bool
    decision: str
    margins: dict = field(default_factory=dict)
    mode: str = "exact"
    trials: int | None = None
    seed: int | None = None
    k: int | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.mode == "exact" and (self.trials is not None or self.seed is not None):
            raise PreconditionError("exact verdicts carry no Monte Carlo fields")
        if self.mode == "empirical" and (self.trials is None or self.trials < 1):
            raise PreconditionError("empirical verdicts need trials >= 1")
        if self.mode not in ("exact", "empirical"):
            raise PreconditionError(f"unknown verdict mode {self.mode!r}")

    def to_dict(self) -> dict:
        return {
            "class": ClassId(self.cls).value,
            "in_class_evidence": self.in_class_evidence,
            "decision": self.decision,
            "margins": dict(self.margins),
            "mode": self.mode,
            "trials": self.trials,
            "seed": self.seed,
            "k": self.k,
            "notes": list(self.notes),
        }


def _parse_budget(toks: list[str], lineno: int) -> StepBudget:
    try:
        if toks and toks[0] == "poly" and len(toks) > 1:
            return StepBudget(tuple(int(t) for t in toks[1:]))
        if toks and toks[0] == "const" and len(toks) == 2:
            return StepBudget(constant=int(toks[1]))
    except ValueError:
        pass
    except PreconditionError as exc:
        raise ParseError(str(exc), line=lineno) from exc
    raise ParseError("budget must be 'poly c0 c1 ...' or 'const T' with integers", line=lineno)


def parse_instance(text: str, base=None) -> DecisionProblemInstance:
    fields: dict = {}
    cells: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kw, *rest = line.split()
        if kw in fields:
            raise ParseError(f"duplicate {kw!r} line", line=lineno)
        if kw == "class":
            try:
                fields[kw] = ClassId(rest[0] if rest else "")
            except ValueError:
                raise ParseError(f"unknown class {' '.join(rest)!r}", line=lineno) from None
        elif kw in ("machine", "ir"):
            if len(rest) != 1:
                raise ParseError(f"'{kw}' takes one path", line=lineno)
            fields[kw] = rest[0]
        elif kw == "budget":
            fields[kw] = _parse_budget(rest, lineno)
        elif kw == "cell":
            if len(rest) != 2:
                raise ParseError("cell line must be 'cell <role> <index>'", line=lineno)
            try:
                cells[rest[0]] = int(rest[1])
            except ValueError:
                raise ParseError(f"cell index {rest[1]!r} is not an integer", line=lineno) from None
        elif kw == "input":
            fields[kw] = "".join(rest)
        elif kw in ("epsilon", "theta"):
            try:
                fields[kw] = parse_real(rest[0] if rest else "")
            except PreconditionError as exc:
                raise ParseError(str(exc), line=lineno) from None
        elif kw == "n":
            try:
                fields[kw] = int(rest[0])
            except (ValueError, IndexError):
                raise ParseError("n must be an integer", line=lineno) from None
        elif kw == "noise":
            fields[kw] = rest[0] if rest else ""
        else:
            raise ParseError(f"unknown directive {kw!r}", line=lineno)

    for key in ("class", "budget"):
        if key not in fields:
            raise ParseError(f"missing '{key}' line")
    if ("machine" in fields) == ("ir" in fields):
        raise ParseError("give exactly one of 'machine' or 'ir'")
    ir = None
    if "ir" in fields:
        ir = load_ir(resolve(fields["ir"], base))
        machine = lower(ir)
        cells = {**ir.cells, **cells}
    else:
        machine = load_machine(resolve(fields["machine"], base))
    return DecisionProblemInstance(
        cls=fields["class"],
        machine=machine,
        budget=fields["budget"],
        input=fields.get("input", ""),
        cells=cells,
        ir=ir,
        epsilon=fields.get("epsilon"),
        theta=fields.get("theta"),
        n=fields.get("n"),
        noise=fields.get("noise"),
    )


def load_instance(path) -> DecisionProblemInstance:
    path = resolve(path)
    return parse_instance(Path(path).read_text(encoding="utf-8"), base=Path(path).parent)
