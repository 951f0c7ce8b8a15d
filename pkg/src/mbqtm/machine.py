"""Machine triplet (alphabet, states, transition function) and its text format.

Machine files are UTF-8, line oriented.  A line starting with ``#`` is a
comment (the blank symbol itself only ever appears after a keyword)::

    machine hadamard
    alphabet # 0 1
    states q0 qf
    initial q0
    final qf
    directions LNR
    rule q0 0 -> 1/sqrt(2) 0 qf N ; 1/sqrt(2) 1 qf N

Each ``rule`` line lists the superposed targets of one column ``(state, symbol)``
as ``amplitude written-symbol next-state move`` separated by ``;``.  Several
rule lines may contribute to the same column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, NamedTuple

from .amplitude import Amplitude, parse_amplitude
from .errors import MachineError, ParseError

__all__ = [
    "BLANK",
    "SHIFT",
    "FORMAT_VERSION",
    "Transition",
    "Machine",
    "parse_machine",
    "format_machine",
    "load_machine",
    "complete_machine",
]

BLANK = "#"
SHIFT = {"L": -1, "N": 0, "R": 1}
DIRECTION_SETS = {"LR": ("L", "R"), "LNR": ("L", "N", "R")}
FORMAT_VERSION = 1

_ONE = Amplitude(1.0, "1")


class Transition(NamedTuple):
    amplitude: Amplitude
    write: str
    next_state: str
    move: str


Column = tuple  # (state, symbol)


@dataclass(frozen=True)
class Machine:
    name: str
    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    initial: str
    final: str
    directions: str
    delta: Mapping[tuple[str, str], tuple[Transition, ...]] = field(repr=False)

    def __post_init__(self):
        if BLANK not in self.alphabet:
            raise MachineError(f"alphabet must contain the blank symbol {BLANK!r}")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise MachineError("alphabet lists a symbol twice")
        if len(set(self.states)) != len(self.states):
            raise MachineError("state set lists a state twice")
        if self.directions not in DIRECTION_SETS:
            raise MachineError(f"direction set must be LR or LNR, got {self.directions!r}")
        for role, q in (("initial", self.initial), ("final", self.final)):
            if q not in self.states:
                raise MachineError(f"{role} state {q!r} is not declared")
        if self.initial == self.final:
            raise MachineError("final state must differ from the initial state")
        allowed = DIRECTION_SETS[self.directions]
        sigma, states = set(self.alphabet), set(self.states)
        for (q, s), targets in self.delta.items():
            if q not in states:
                raise MachineError(f"rule for undeclared state {q!r}")
            if s not in sigma:
                raise MachineError(f"rule for undeclared symbol {s!r}")
            for t in targets:
                if t.write not in sigma:
                    raise MachineError(f"column ({q}, {s}) writes undeclared symbol {t.write!r}")
                if t.next_state not in states:
                    raise MachineError(f"column ({q}, {s}) enters undeclared state {t.next_state!r}")
                if t.move not in allowed:
                    raise MachineError(
                        f"column ({q}, {s}) moves {t.move!r}, not in declared set {self.directions}"
                    )

    @cached_property
    def compiled(self) -> dict:
        """Column -> tuple of (complex amplitude, write, next state, head shift)."""
        return {
            col: tuple((t.amplitude.value, t.write, t.next_state, SHIFT[t.move]) for t in targets)
            for col, targets in self.delta.items()
        }

    @property
    def entry_count(self) -> int:
        return sum(len(v) for v in self.delta.values())

    @property
    def active_states(self) -> tuple[str, ...]:
        return tuple(q for q in self.states if q != self.final)

    def column(self, state: str, symbol: str) -> tuple[Transition, ...]:
        return self.delta.get((state, symbol), ())


def _tokens_after(keyword_line: str) -> list[str]:
    return keyword_line.split()[1:]


def _parse_target(chunk: str, lineno: int):
    parts = chunk.split()
    if len(parts) < 4:
        raise ParseError(
            f"target {chunk.strip()!r} needs 'amplitude symbol state direction'", line=lineno
        )
    ampl_text = " ".join(parts[:-3])
    try:
        ampl = parse_amplitude(ampl_text)
    except ParseError as exc:
        raise ParseError(f"bad amplitude {ampl_text!r}: {exc.message}", line=lineno, pos=exc.pos) from exc
    return ampl, parts[-3], parts[-2], parts[-1]


def parse_machine(text: str) -> Machine:
    """Parse a machine file.  Rejects undeclared tokens and duplicate target keys."""
    header: dict[str, list[str]] = {}
    rules: dict[tuple[str, str], list[Transition]] = {}
    seen: dict[tuple, int] = {}
    rule_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword = line.split()[0]
        if keyword == "rule":
            rule_lines.append((lineno, line))
        elif keyword in ("machine", "alphabet", "states", "initial", "final", "directions"):
            if keyword in header:
                raise ParseError(f"duplicate '{keyword}' declaration", line=lineno)
            header[keyword] = _tokens_after(line)
        else:
            raise ParseError(f"unknown directive {keyword!r}", line=lineno)

    for key, what in (("alphabet", "alphabet"), ("states", "state set"), ("initial", "initial state"),
                      ("final", "final state"), ("directions", "direction set")):
        if key not in header or not header[key]:
            raise ParseError(f"missing {what}")
    for key in ("initial", "final", "directions"):
        if len(header[key]) != 1:
            raise ParseError(f"'{key}' takes exactly one value")
    name = " ".join(header.get("machine", ["unnamed"]))
    alphabet = tuple(header["alphabet"])
    states = tuple(header["states"])
    directions = header["directions"][0]
    if directions not in DIRECTION_SETS:
        raise ParseError(f"direction set must be LR or LNR, got {directions!r}")
    initial, final = header["initial"][0], header["final"][0]
    if initial == final:
        raise ParseError(f"final state {final!r} must differ from initial state")

    sigma, qset = set(alphabet), set(states)
    allowed = DIRECTION_SETS[directions]
    for lineno, line in rule_lines:
        head, sep, body = line.partition("->")
        if not sep:
            raise ParseError("rule needs '->'", line=lineno)
        lhs = head.split()[1:]
        if len(lhs) != 2:
            raise ParseError("rule left side must be '<state> <symbol>'", line=lineno)
        q, s = lhs
        if q not in qset:
            raise ParseError(f"undeclared state {q!r}", line=lineno)
        if s not in sigma:
            raise ParseError(f"undeclared symbol {s!r}", line=lineno)
        for chunk in body.split(";"):
            ampl, w, nq, d = _parse_target(chunk, lineno)
            if w not in sigma:
                raise ParseError(f"undeclared symbol {w!r}", line=lineno)
            if nq not in qset:
                raise ParseError(f"undeclared state {nq!r}", line=lineno)
            if d not in allowed:
                raise ParseError(f"direction {d!r} not in declared set {directions}", line=lineno)
            key = (q, s, w, nq, d)
            if key in seen:
                raise ParseError(
                    f"duplicate rule for ({q}, {s}, {w}, {nq}, {d}), first given on line {seen[key]}",
                    line=lineno,
                )
            seen[key] = lineno
            rules.setdefault((q, s), []).append(Transition(ampl, w, nq, d))

    return Machine(
        name=name,
        alphabet=alphabet,
        states=states,
        initial=initial,
        final=final,
        directions=directions,
        delta={k: tuple(v) for k, v in rules.items()},
    )


def format_machine(m: Machine, comments: list[str] | None = None) -> str:
    lines = [f"# {c}" for c in comments or ()]
    lines += [
        f"machine {m.name}",
        "alphabet " + " ".join(m.alphabet),
        "states " + " ".join(m.states),
        f"initial {m.initial}",
        f"final {m.final}",
        f"directions {m.directions}",
    ]
    order_q = {q: i for i, q in enumerate(m.states)}
    order_s = {s: i for i, s in enumerate(m.alphabet)}
    for q, s in sorted(m.delta, key=lambda c: (order_q[c[0]], order_s[c[1]])):
        targets = " ; ".join(f"{t.amplitude} {t.write} {t.next_state} {t.move}" for t in m.delta[(q, s)])
        lines.append(f"rule {q} {s} -> {targets}")
    return "\n".join(lines) + "\n"


def load_machine(path) -> Machine:
    return parse_machine(Path(path).read_text(encoding="utf-8"))


def entry_directions(m: Machine) -> dict[str, str]:
    """Direction by which each non-initial state is entered.

    Raises MachineError when a state is entered from two directions, which
    breaks the unidirectional completion scheme.
    """
    dirs: dict[str, str] = {}
    for (q, s), targets in m.delta.items():
        if q == m.final:
            continue
        for t in targets:
            prev = dirs.setdefault(t.next_state, t.move)
            if prev != t.move:
                raise MachineError(
                    f"state {t.next_state!r} is entered moving both {prev} and {t.move} "
                    f"(column ({q}, {s}))"
                )
    return dirs


def complete_machine(m: Machine) -> Machine:
    """Fill every missing active column with a distinct unused basis target.

    Specified columns are kept as is.  Each missing column ``(q, s)`` with
    ``q != final`` gets a single amplitude-1 target ``(w, q', d)`` whose slot
    ``(w, q')`` is not touched by any specified column, with ``d`` the unique
    direction by which ``q'`` is already entered.  Both lists are walked in
    canonical order so the result is reproducible.  The missing columns are
    unreachable from legal starting configurations; completing them is what
    makes the evolution an isometry on the whole configuration space.
    """
    dirs = entry_directions(m)
    used = {(t.write, t.next_state) for q_s, ts in m.delta.items() if q_s[0] != m.final for t in ts}
    free = [
        (w, q)
        for q in m.states
        if q in dirs
        for w in m.alphabet
        if (w, q) not in used
    ]
    missing = [(q, s) for q in m.active_states for s in m.alphabet if (q, s) not in m.delta]
    if len(missing) > len(free):
        raise MachineError(
            f"cannot complete machine {m.name!r}: {len(missing)} unspecified columns "
            f"but only {len(free)} unused targets"
        )
    delta = dict(m.delta)
    for col, (w, q) in zip(missing, free):
        delta[col] = (Transition(_ONE, w, q, dirs[q]),)
    return Machine(m.name, m.alphabet, m.states, m.initial, m.final, m.directions, delta)
