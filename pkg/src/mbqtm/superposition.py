"""Sparse configuration-space states and the one-step evolution operator."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import ConsumedError, MbqtmError, PreconditionError
from .machine import BLANK, Machine

__all__ = [
    "PRUNE",
    "NORM_TOL",
    "Configuration",
    "Superposition",
    "step",
    "run",
    "marginal",
    "condition",
    "halting_time",
]

# amplitudes below PRUNE are dropped after every step to keep the support finite
PRUNE = 1e-14
NORM_TOL = 1e-9


@dataclass(frozen=True, order=True)
class Configuration:
    """Control state, head position and the non-blank part of the tape.

    ``tape`` is a sorted tuple of ``(cell, symbol)`` pairs without blanks, so
    equal configurations compare and hash equal.  Field order gives the
    canonical (state, head, tape) iteration order.
    """

    state: str
    head: int
    tape: tuple[tuple[int, str], ...] = ()

    @classmethod
    def make(cls, state: str, head: int, cells: Mapping[int, str]) -> "Configuration":
        return cls(state, head, tuple(sorted((i, s) for i, s in cells.items() if s != BLANK)))

    @classmethod
    def initial(cls, m: Machine, word: str | Iterable[str]) -> "Configuration":
        symbols = list(word)
        for s in symbols:
            if s not in m.alphabet or s == BLANK:
                raise PreconditionError(f"input symbol {s!r} is not a non-blank symbol of {m.name!r}")
        return cls.make(m.initial, 0, dict(enumerate(symbols)))

    def symbol_at(self, cell: int) -> str:
        for i, s in self.tape:
            if i == cell:
                return s
        return BLANK

    def written(self, cell: int, symbol: str) -> tuple[tuple[int, str], ...]:
        cells = dict(self.tape)
        if symbol == BLANK:
            cells.pop(cell, None)
        else:
            cells[cell] = symbol
        return tuple(sorted(cells.items()))

    def tape_string(self, lo: int | None = None, hi: int | None = None) -> str:
        cells = dict(self.tape)
        if lo is None:
            lo = min([self.head, *cells])
        if hi is None:
            hi = max([self.head, *cells])
        return "".join(cells.get(i, BLANK) for i in range(lo, hi + 1))

    def __str__(self):
        cells = dict(self.tape)
        lo = min([self.head, *cells])
        hi = max([self.head, *cells])
        body = " ".join(f"[{cells.get(i, BLANK)}]" if i == self.head else cells.get(i, BLANK)
                        for i in range(lo, hi + 1))
        return f"{self.state} @{self.head} ({lo}..{hi}): {body}"


class Superposition:
    """Finite linear combination of configurations.

    Amplitudes are immutable once built.  The only mutable piece is the
    ``consumed`` flag, set when a terminal measurement destroys the state;
    it is owned by the single harness driving the run.
    """

    __slots__ = ("_amps", "_consumed")

    def __init__(self, amplitudes: Mapping[Configuration, complex] | Iterable = (), prune: float = PRUNE):
        items = amplitudes.items() if isinstance(amplitudes, Mapping) else amplitudes
        kept = {}
        for c, a in items:
            a = complex(a)
            if not (math.isfinite(a.real) and math.isfinite(a.imag)):
                raise MbqtmError(f"non-finite amplitude on {c}")
            if abs(a) >= prune:
                kept[c] = a
        self._amps = dict(sorted(kept.items()))
        self._consumed = False

    @classmethod
    def basis(cls, config: Configuration) -> "Superposition":
        return cls({config: 1.0})

    @property
    def consumed(self) -> bool:
        return self._consumed

    def mark_consumed(self) -> None:
        self.require_live()
        self._consumed = True

    def require_live(self) -> None:
        if self._consumed:
            raise ConsumedError("superposition was consumed by a terminal measurement")

    def items(self) -> Iterator[tuple[Configuration, complex]]:
        return iter(self._amps.items())

    def amplitude(self, config: Configuration) -> complex:
        return self._amps.get(config, 0j)

    def __len__(self):
        return len(self._amps)

    def __contains__(self, config):
        return config in self._amps

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._amps.values())

    def inner(self, other: "Superposition") -> complex:
        """<self|other>, conjugate-linear in self."""
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        acc = 0j
        for c, a in small._amps.items():
            b = big._amps.get(c)
            if b is not None:
                acc += (a.conjugate() * b) if small is self else (b.conjugate() * a)
        return acc

    def is_close(self, other: "Superposition", tol: float = NORM_TOL) -> bool:
        keys = set(self._amps) | set(other._amps)
        return all(abs(self.amplitude(k) - other.amplitude(k)) <= tol for k in keys)

    def __repr__(self):
        return f"Superposition({len(self)} configurations, norm^2={self.norm_squared():.12g})"


def step(m: Machine, s: Superposition) -> Superposition:
    """Apply the evolution operator once.

    Configurations in the final state are stationary.  A missing column is
    the zero vector, so amplitude reaching it is lost (validation reports it).
    """
    s.require_live()
    out: dict[Configuration, complex] = defaultdict(complex)
    columns = m.compiled
    final = m.final
    for c, a in s.items():
        if c.state == final:
            out[c] += a
            continue
        for amp, write, nq, shift in columns.get((c.state, c.symbol_at(c.head)), ()):
            out[Configuration(nq, c.head + shift, c.written(c.head, write))] += a * amp
    return Superposition(out)


def run(m: Machine, word: str | Iterable[str], steps: int) -> Superposition:
    if steps < 0:
        raise PreconditionError(f"step count must be non-negative, got {steps}")
    s = Superposition.basis(Configuration.initial(m, word))
    for _ in range(steps):
        s = step(m, s)
    return s


def marginal(s: Superposition, cell: int) -> dict[str, float]:
    """Probability of each symbol at ``cell``."""
    s.require_live()
    acc: dict[str, list[float]] = defaultdict(list)
    for c, a in s.items():
        acc[c.symbol_at(cell)].append(abs(a) ** 2)
    return {sym: math.fsum(v) for sym, v in sorted(acc.items())}


def condition(s: Superposition, cell: int, symbol: str) -> Superposition:
    """Project onto ``tape[cell] == symbol`` and rescale by a positive real."""
    s.require_live()
    kept = {c: a for c, a in s.items() if c.symbol_at(cell) == symbol}
    weight = math.fsum(abs(a) ** 2 for a in kept.values())
    if weight <= 0.0:
        raise PreconditionError(f"symbol {symbol!r} has probability 0 at cell {cell}")
    scale = 1.0 / math.sqrt(weight)
    return Superposition({c: a * scale for c, a in kept.items()})


def halting_time(m: Machine, word: str | Iterable[str], max_steps: int = 10_000) -> int:
    """First step count at which every branch sits in the final state."""
    s = Superposition.basis(Configuration.initial(m, word))
    for t in range(max_steps + 1):
        if all(c.state == m.final for c, _ in s.items()):
            return t
        s = step(m, s)
    raise MbqtmError(f"machine {m.name!r} did not halt within {max_steps} steps")
