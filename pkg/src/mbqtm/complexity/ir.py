"""Phased machine description and its lowering to a transition table.

A raw transition table does not say which steps initialise the decision cell
or which step writes the result, so the zero-error rewrite works on this
structured form instead::

    ir zqp-demo
    alphabet # 0 1
    final qf
    directions LNR
    cell work -1
    cell halt -2
    cell decision -3
    phase INIT
    set decision 0
    phase COMPUTE e done
    rule e 0 -> 1 0 e R
    ...
    phase WRITE
    copy work -> decision when halt 1

Special cells live left of the input (negative indices).  INIT and WRITE
are lowered to sweeps that start at cell 0, walk out to the farthest cell
they touch and walk back, taking ``2 D`` steps for depth ``D``.

* INIT writes each ``set`` symbol over the blank it finds.
* WRITE loads the source and guard symbols into the control state on the
  way out, writes ``source if guard == symbol else prior`` at each target
  (``prior`` is the INIT value, or blank), and unloads the registers on the
  way back, so the sweep stays reversible.  One more step then enters the
  final state without moving.

COMPUTE rules are copied verbatim; the block must start and end at cell 0.
Its entry state must not be re-entered by any compute rule, because the
last INIT step enters it and the two would collide.
The lowered table is completed and re-validated.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..amplitude import Amplitude
from ..errors import MachineError, ParseError
from ..machine import BLANK, Machine, Transition, _parse_target, complete_machine
from ..wellformed import validate_wellformed

__all__ = [
    "SetStep",
    "CopyStep",
    "MachineIR",
    "parse_ir",
    "format_ir",
    "load_ir",
    "lower",
]

_ONE = Amplitude(1.0, "1")
PHASES = ("INIT", "COMPUTE", "WRITE")


@dataclass(frozen=True)
class SetStep:
    role: str
    symbol: str


@dataclass(frozen=True)
class CopyStep:
    source: str
    targets: tuple[str, ...]
    guard: str
    guard_symbol: str


@dataclass(frozen=True)
class MachineIR:
    name: str
    alphabet: tuple[str, ...]
    final: str
    directions: str
    cells: dict
    init: tuple[SetStep, ...] | None
    compute_entry: str
    compute_exit: str
    compute: dict = field(repr=False)
    write: CopyStep | None
    overhead: int | None = None
    initial: str = "q0"

    def cell(self, role: str) -> int:
        try:
            return self.cells[role]
        except KeyError:
            raise MachineError(f"IR {self.name!r} declares no {role!r} cell") from None

    def prior(self, role: str) -> str:
        """Symbol a cell holds before WRITE: its INIT value, else blank."""
        for s in self.init or ():
            if s.role == role:
                return s.symbol
        return BLANK

    @property
    def init_depth(self) -> int:
        return max((-self.cell(s.role) for s in self.init or ()), default=0)

    @property
    def write_depth(self) -> int:
        return max(-self.cell(t) for t in self.write.targets)

    @property
    def init_steps(self) -> int:
        return 2 * self.init_depth if self.init else 0

    @property
    def write_steps(self) -> int:
        return 2 * self.write_depth + 1

    @property
    def start_state(self) -> str:
        return self.initial if self.init else self.compute_entry

    @property
    def compute_states(self) -> list[str]:
        seen = {self.compute_entry: None}
        for (q, _), targets in self.compute.items():
            seen.setdefault(q, None)
            for t in targets:
                seen.setdefault(t.next_state, None)
        seen.setdefault(self.compute_exit, None)
        return list(seen)


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", line=lineno) from None


def parse_ir(text: str) -> MachineIR:
    header: dict[str, list[str]] = {}
    cells: dict[str, int] = {}
    init: list[SetStep] | None = None
    compute: dict[tuple[str, str], list[Transition]] = {}
    entry = exit_ = None
    write: CopyStep | None = None
    overhead = None
    phase = None
    seen_phases: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        kw = toks[0]
        if kw == "phase":
            if len(toks) < 2 or toks[1] not in PHASES:
                raise ParseError(f"phase must be one of {', '.join(PHASES)}", line=lineno)
            phase = toks[1]
            if phase in seen_phases:
                raise ParseError(f"phase {phase} given twice", line=lineno)
            if seen_phases and PHASES.index(phase) < PHASES.index(seen_phases[-1]):
                raise ParseError("phases must appear in the order INIT, COMPUTE, WRITE", line=lineno)
            seen_phases.append(phase)
            if phase == "INIT":
                init = []
                if len(toks) != 2:
                    raise ParseError("'phase INIT' takes no arguments", line=lineno)
            elif phase == "COMPUTE":
                if len(toks) != 4:
                    raise ParseError("'phase COMPUTE' needs an entry and an exit state", line=lineno)
                entry, exit_ = toks[2], toks[3]
            elif len(toks) != 2:
                raise ParseError("'phase WRITE' takes no arguments", line=lineno)
        elif phase is None:
            if kw in ("ir", "alphabet", "final", "directions", "initial"):
                header[kw] = toks[1:]
            elif kw == "cell":
                if len(toks) != 3:
                    raise ParseError("cell line must be 'cell <role> <index>'", line=lineno)
                idx = _int(toks[2], lineno)
                if idx >= 0:
                    raise ParseError(f"special cell {toks[1]!r} must lie left of the input (index < 0)",
                                     line=lineno)
                if toks[1] in cells:
                    raise ParseError(f"cell role {toks[1]!r} declared twice", line=lineno)
                cells[toks[1]] = idx
            elif kw == "overhead":
                overhead = _int(toks[1], lineno) if len(toks) == 2 else None
            else:
                raise ParseError(f"unknown directive {kw!r}", line=lineno)
        elif kw == "overhead":
            overhead = _int(toks[1], lineno) if len(toks) == 2 else None
        elif phase == "INIT":
            if kw != "set" or len(toks) != 3:
                raise ParseError("INIT lines must be 'set <role> <symbol>'", line=lineno)
            init.append(SetStep(toks[1], toks[2]))
        elif phase == "COMPUTE":
            if kw != "rule":
                raise ParseError("COMPUTE lines must be rules", line=lineno)
            head, sep, body = line.partition("->")
            lhs = head.split()[1:]
            if not sep or len(lhs) != 2:
                raise ParseError("rule must be 'rule <state> <symbol> -> targets'", line=lineno)
            for chunk in body.split(";"):
                ampl, w, nq, d = _parse_target(chunk, lineno)
                compute.setdefault(tuple(lhs), []).append(Transition(ampl, w, nq, d))
        else:
            # copy <source> -> <t1> [<t2> ...] when <guard> <symbol>
            if kw != "copy" or "->" not in toks or "when" not in toks:
                raise ParseError("WRITE line must be 'copy <source> -> <targets> when <guard> <symbol>'",
                                 line=lineno)
            if write is not None:
                raise ParseError("WRITE phase takes a single copy line", line=lineno)
            arrow, when = toks.index("->"), toks.index("when")
            if arrow != 2 or when <= arrow + 1 or len(toks) != when + 3:
                raise ParseError("WRITE line must be 'copy <source> -> <targets> when <guard> <symbol>'",
                                 line=lineno)
            write = CopyStep(toks[1], tuple(toks[arrow + 1:when]), toks[when + 1], toks[when + 2])

    for key in ("ir", "alphabet", "final", "directions"):
        if not header.get(key):
            raise ParseError(f"missing '{key}' line")
    if "COMPUTE" not in seen_phases:
        raise ParseError("missing COMPUTE phase")
    ir = MachineIR(
        name=" ".join(header["ir"]),
        alphabet=tuple(header["alphabet"]),
        final=header["final"][0],
        directions=header["directions"][0],
        cells=cells,
        init=None if init is None else tuple(init),
        compute_entry=entry,
        compute_exit=exit_,
        compute={k: tuple(v) for k, v in compute.items()},
        write=write,
        overhead=overhead,
        initial=header.get("initial", ["q0"])[0],
    )
    _check_ir(ir)
    return ir


def _check_ir(ir: MachineIR) -> None:
    sigma = set(ir.alphabet)
    if BLANK not in sigma:
        raise MachineError(f"alphabet must contain the blank symbol {BLANK!r}")
    if ir.directions != "LNR":
        raise MachineError("phased machines need the LNR direction set (the last step does not move)")
    if len(set(ir.cells.values())) != len(ir.cells):
        raise MachineError("special cells must have distinct indices")
    for s in ir.init or ():
        ir.cell(s.role)
        if s.symbol not in sigma or s.symbol == BLANK:
            raise MachineError(f"INIT sets {s.role!r} to {s.symbol!r}, not a non-blank symbol")
    if len({s.role for s in ir.init or ()}) != len(ir.init or ()):
        raise MachineError("INIT sets a cell twice")
    if ir.write is None:
        raise MachineError(f"IR {ir.name!r} has no WRITE phase")
    w = ir.write
    if w.source == w.guard or w.source in w.targets or w.guard in w.targets:
        raise MachineError("copy source, guard and targets must be different cells")
    if len(set(w.targets)) != len(w.targets):
        raise MachineError("copy lists a target twice")
    if w.guard_symbol not in sigma:
        raise MachineError(f"guard symbol {w.guard_symbol!r} is not in the alphabet")
    src, grd = ir.cell(w.source), ir.cell(w.guard)
    for t in w.targets:
        if ir.cell(t) > min(src, grd):
            raise MachineError(f"target {t!r} must lie farther from the input than source and guard")
    reserved = {ir.final, "write.end"} | ({ir.initial} if ir.init else set())
    for q in ir.compute_states:
        if q in reserved or q.startswith(("init.", "write.")):
            raise MachineError(f"compute state {q!r} clashes with a generated or reserved state")
    for (q, s), targets in ir.compute.items():
        if any(t.next_state == ir.compute_entry for t in targets):
            raise MachineError(f"compute entry {ir.compute_entry!r} is re-entered by rule ({q}, {s})")
        if s not in sigma:
            raise MachineError(f"rule for undeclared symbol {s!r}")
        for t in targets:
            if t.write not in sigma:
                raise MachineError(f"rule ({q}, {s}) writes undeclared symbol {t.write!r}")


def _reg(sym: str | None) -> str:
    return "" if sym is None else ("_" if sym == BLANK else sym)


class _Builder:
    def __init__(self):
        self.delta: dict[tuple[str, str], list[Transition]] = {}
        self.states: dict[str, None] = {}

    def put(self, q, s, w, nq, d):
        self.states.setdefault(q, None)
        self.states.setdefault(nq, None)
        self.delta.setdefault((q, s), []).append(Transition(_ONE, w, nq, d))


def _lower_init(ir: MachineIR, b: _Builder) -> None:
    sets = {ir.cell(s.role): s.symbol for s in ir.init}
    depth = ir.init_depth

    def out(j):
        return f"init.{j}"

    def back(j):
        return ir.compute_entry if j == 0 else f"init.b{j}"

    for s in ir.alphabet:
        b.put(ir.initial, s, s, out(1), "L")
    for j in range(1, depth + 1):
        nxt, d = (out(j + 1), "L") if j < depth else (back(depth - 1), "R")
        if -j in sets:
            b.put(out(j), BLANK, sets[-j], nxt, d)
        else:
            for s in ir.alphabet:
                b.put(out(j), s, s, nxt, d)
    for j in range(depth - 1, 0, -1):
        for s in ir.alphabet:
            b.put(back(j), s, s, back(j - 1), "R")


def _lower_write(ir: MachineIR, b: _Builder) -> None:
    w = ir.write
    src, grd = ir.cell(w.source), ir.cell(w.guard)
    targets = {ir.cell(t): ir.prior(t) for t in w.targets}
    depth = ir.write_depth

    def out(j, r, h):
        return f"write.{j}" + (f".r{_reg(r)}" if r is not None else "") + (f".h{_reg(h)}" if h is not None else "")

    def back(j, r, h):
        if j == 0:
            return "write.end"
        return f"write.b{j}" + (f".r{_reg(r)}" if r is not None else "") + (f".h{_reg(h)}" if h is not None else "")

    for s in ir.alphabet:
        b.put(ir.compute_exit, s, s, out(1, None, None), "L")
    regs = [(None, None)]
    for j in range(1, depth + 1):
        cell = -j
        nxt_regs: dict[tuple, None] = {}
        for r, h in regs:
            q = out(j, r, h)

            def go(r2, h2):
                nxt_regs.setdefault((r2, h2), None)
                return (out(j + 1, r2, h2), "L") if j < depth else (back(depth - 1, r2, h2), "R")

            if cell == src:
                for s in ir.alphabet:
                    b.put(q, s, s, *go(s, h))
            elif cell == grd:
                for s in ir.alphabet:
                    b.put(q, s, s, *go(r, s))
            elif cell in targets:
                prior = targets[cell]
                b.put(q, prior, r if h == w.guard_symbol else prior, *go(r, h))
            else:
                for s in ir.alphabet:
                    b.put(q, s, s, *go(r, h))
        regs = list(nxt_regs)
    for j in range(depth - 1, 0, -1):
        cell = -j
        nxt_regs = {}
        for r, h in regs:
            q = back(j, r, h)
            if cell == grd:
                b.put(q, h, h, back(j - 1, r, None), "R")
                nxt_regs.setdefault((r, None), None)
            elif cell == src:
                b.put(q, r, r, back(j - 1, None, h), "R")
                nxt_regs.setdefault((None, h), None)
            else:
                for s in ir.alphabet:
                    b.put(q, s, s, back(j - 1, r, h), "R")
                nxt_regs.setdefault((r, h), None)
        regs = list(nxt_regs)
    for s in ir.alphabet:
        b.put("write.end", s, s, ir.final, "N")


def lower(ir: MachineIR, complete: bool = True) -> Machine:
    """Expand the phases into a transition table and re-run well-formedness."""
    _check_ir(ir)
    b = _Builder()
    if ir.init:
        _lower_init(ir, b)
    for (q, s), targets in ir.compute.items():
        b.states.setdefault(q, None)
        for t in targets:
            b.states.setdefault(t.next_state, None)
            b.delta.setdefault((q, s), []).append(t)
    _lower_write(ir, b)
    states = [q for q in b.states if q != ir.final] + [ir.final]
    start = ir.start_state
    states.remove(start)
    states.insert(0, start)
    m = Machine(ir.name, ir.alphabet, tuple(states), start, ir.final, ir.directions,
                {k: tuple(v) for k, v in b.delta.items()})
    if not complete:
        return m
    m = complete_machine(m)
    report = validate_wellformed(m)
    if not report.passed:
        raise MachineError(f"lowered machine {ir.name!r} is not well-formed: {report.failures[0].describe()}")
    return m


def format_ir(ir: MachineIR) -> str:
    lines = [f"ir {ir.name}", "alphabet " + " ".join(ir.alphabet), f"final {ir.final}",
             f"directions {ir.directions}"]
    if ir.init and ir.initial != "q0":
        lines.append(f"initial {ir.initial}")
    lines += [f"cell {role} {idx}" for role, idx in ir.cells.items()]
    if ir.overhead is not None:
        lines.append(f"overhead {ir.overhead}")
    if ir.init is not None:
        lines.append("phase INIT")
        lines += [f"set {s.role} {s.symbol}" for s in ir.init]
    lines.append(f"phase COMPUTE {ir.compute_entry} {ir.compute_exit}")
    for (q, s), targets in ir.compute.items():
        body = " ; ".join(f"{t.amplitude} {t.write} {t.next_state} {t.move}" for t in targets)
        lines.append(f"rule {q} {s} -> {body}")
    w = ir.write
    lines += ["phase WRITE", f"copy {w.source} -> {' '.join(w.targets)} when {w.guard} {w.guard_symbol}"]
    return "\n".join(lines) + "\n"


def load_ir(path) -> MachineIR:
    return parse_ir(Path(path).read_text(encoding="utf-8"))


def with_overhead(ir: MachineIR, k: int) -> MachineIR:
    return replace(ir, overhead=k)
