"""Unitarity checks for the evolution operator.

Two complementary tests:

* :func:`validate_wellformed` checks the local conditions on columns that
  are necessary for the operator to be an isometry: unit column norms,
  orthogonal columns, and vanishing overlaps between columns whose heads sit
  one or two cells apart and land on the same cell.
* :func:`check_unitarity_window` applies the operator to random states
  supported on a bounded tape window and compares inner products.

Configurations in the final state are frozen by :func:`~mbqtm.superposition.step`,
so both checks look at the evolution of non-final configurations.  Columns of
the final state, when a file spells them out, must be identity self-loops.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .machine import Machine
from .superposition import Configuration, Superposition, step

__all__ = [
    "WELLFORMED_TOL",
    "Failure",
    "WellformednessReport",
    "validate_wellformed",
    "UnitarityVerdict",
    "check_unitarity_window",
]

WELLFORMED_TOL = 1e-9
WINDOW_TOL = 1e-6
MAX_CLUSTER = 4096

# (left-head move, right-head move) pairs landing on the same cell, by head gap
_SEPARATED = {1: (("N", "L"), ("R", "N")), 2: (("R", "L"),)}


@dataclass(frozen=True)
class Failure:
    kind: str  # norm | orthogonality | separation | final-state
    columns: tuple
    value: complex

    def describe(self) -> str:
        cols = ", ".join("(" + ", ".join(c) + ")" for c in self.columns)
        if self.kind == "norm":
            return f"column {cols}: squared norm {self.value.real:.12g}, expected 1"
        if self.kind == "orthogonality":
            return f"columns {cols}: inner product {_fmt(self.value)}, expected 0"
        if self.kind == "separation":
            return f"targets {cols}: overlap {_fmt(self.value)} between heads one or two cells apart, expected 0"
        return f"final-state column {cols} is not an identity self-loop"


def _fmt(z: complex) -> str:
    return f"{z.real:.12g}" if abs(z.imag) < 1e-15 else f"{z.real:.12g}{z.imag:+.12g}i"


@dataclass
class WellformednessReport:
    machine: str
    label: str = "necessary conditions"
    norms: dict = field(default_factory=dict)
    inner_products: dict = field(default_factory=dict)
    max_separation_overlap: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def failing_columns(self) -> list:
        return [f.columns for f in self.failures]

    def describe(self) -> str:
        head = f"{self.machine}: {'pass' if self.passed else 'FAIL'} ({self.label})"
        return "\n".join([head, *("  " + f.describe() for f in self.failures)])

    def to_dict(self) -> dict:
        return {
            "machine": self.machine,
            "label": self.label,
            "passed": self.passed,
            "norms": {f"{q},{s}": v for (q, s), v in self.norms.items()},
            "max_column_overlap": max((abs(v) for v in self.inner_products.values()), default=0.0),
            "max_separation_overlap": self.max_separation_overlap,
            "failures": [f.describe() for f in self.failures],
        }


def validate_wellformed(m: Machine, tol: float = WELLFORMED_TOL) -> WellformednessReport:
    report = WellformednessReport(machine=m.name)
    vectors: dict[tuple[str, str], dict[tuple, complex]] = {}
    for q in m.active_states:
        for s in m.alphabet:
            vec: dict[tuple, complex] = defaultdict(complex)
            for amp, w, nq, shift in m.compiled.get((q, s), ()):
                vec[(w, nq, shift)] += amp
            vectors[(q, s)] = vec
            norm = sum(abs(a) ** 2 for a in vec.values())
            report.norms[(q, s)] = norm
            if abs(norm - 1.0) > tol:
                report.failures.append(Failure("norm", ((q, s),), complex(norm)))

    cols = list(vectors)
    for c1, c2 in itertools.combinations(cols, 2):
        v1, v2 = vectors[c1], vectors[c2]
        ip = sum(a.conjugate() * v2[k] for k, a in v1.items() if k in v2)
        report.inner_products[(c1, c2)] = ip
        if abs(ip) > tol:
            report.failures.append(Failure("orthogonality", (c1, c2), ip))

    # entries grouped by (next state, move): [((q, s, w), amplitude)]
    by_target: dict[tuple[str, str], list] = defaultdict(list)
    for (q, s), targets in m.delta.items():
        if q == m.final:
            continue
        for t in targets:
            by_target[(t.next_state, t.move)].append(((q, s, t.write), t.amplitude.value))
    worst = 0.0
    for gap, pairs in _SEPARATED.items():
        acc: dict[tuple, complex] = defaultdict(complex)
        for d_left, d_right in pairs:
            for (nq, d), left in by_target.items():
                if d != d_left:
                    continue
                for k1, a1 in left:
                    for k2, a2 in by_target.get((nq, d_right), ()):
                        acc[(k1, k2)] += a1 * a2.conjugate()
        for (k1, k2), v in sorted(acc.items()):
            worst = max(worst, abs(v))
            if abs(v) > tol:
                report.failures.append(Failure("separation", (k1, k2), v))
    report.max_separation_overlap = worst

    for s in m.alphabet:
        targets = m.delta.get((m.final, s))
        if targets is None:
            continue
        ok = (len(targets) == 1 and targets[0].write == s and targets[0].next_state == m.final
              and targets[0].move == "N" and abs(targets[0].amplitude.value - 1) <= tol)
        if not ok:
            report.failures.append(Failure("final-state", ((m.final, s),), 0j))
    return report


@dataclass
class UnitarityVerdict:
    machine: str
    passed: bool
    worst_deviation: float
    samples: int
    steps: int
    radius: int
    seed: int | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _cluster(m: Machine, background: dict, block: list[int], rng) -> list[Configuration]:
    shape = (len(m.alphabet) ** len(block), len(block), len(m.active_states))
    total = shape[0] * shape[1] * shape[2]
    picks = range(total) if total <= MAX_CLUSTER else sorted(rng.choice(total, MAX_CLUSTER, replace=False))
    configs = []
    for flat in picks:
        sym_idx, rest = divmod(int(flat), shape[1] * shape[2])
        head_idx, q_idx = divmod(rest, shape[2])
        cells = dict(background)
        for cell in reversed(block):
            sym_idx, k = divmod(sym_idx, len(m.alphabet))
            cells[cell] = m.alphabet[k]
        configs.append(Configuration.make(m.active_states[q_idx], block[head_idx], cells))
    return configs


def _random_state(configs, rng) -> Superposition:
    v = rng.normal(size=len(configs)) + 1j * rng.normal(size=len(configs))
    v /= np.linalg.norm(v)
    return Superposition(zip(configs, v.tolist()), prune=0.0)


def _evolve_split(m: Machine, s: Superposition, steps: int) -> list[Superposition]:
    """Evolve ``steps`` times, setting aside the part that halts at each step.

    Returns one superposition per halting step followed by the still-active
    part.  Halted branches of different ages are distinct histories, so they
    are compared separately instead of colliding in the frozen final state.
    """
    parts = []
    active = s
    for _ in range(steps):
        nxt = step(m, active)
        parts.append(Superposition((c, a) for c, a in nxt.items() if c.state == m.final))
        active = Superposition((c, a) for c, a in nxt.items() if c.state != m.final)
    parts.append(active)
    return parts


def check_unitarity_window(m: Machine, radius: int, steps: int, samples: int, seed: int | None = None,
                           tol: float = WINDOW_TOL) -> UnitarityVerdict:
    """Randomized isometry test on tape window ``[-radius, radius]``.

    Each sample fixes a random background tape inside the window and a block
    of three consecutive cells (any two configurations whose images overlap
    differ only inside such a block), then draws two random unit vectors over
    all non-final configurations that differ only inside the block.  The test
    compares ``<U^T phi, U^T psi>`` against ``<phi, psi>`` and both norms,
    keeping branches that halt at different steps apart (see _evolve_split).
    """
    if steps < 1:
        raise PreconditionError("steps must be at least 1")
    if radius < steps:
        raise PreconditionError(f"window radius {radius} is smaller than the step count {steps}")
    rng = np.random.default_rng(seed)
    width = min(3, 2 * radius + 1)
    worst = 0.0
    for _ in range(samples):
        start = int(rng.integers(-radius, radius - width + 2))
        block = list(range(start, start + width))
        background = {i: str(rng.choice(m.alphabet)) for i in range(-radius, radius + 1) if i not in block}
        configs = _cluster(m, background, block, rng)
        phi, psi = _random_state(configs, rng), _random_state(configs, rng)
        parts_phi, parts_psi = _evolve_split(m, phi, steps), _evolve_split(m, psi, steps)
        after = sum(a.inner(b) for a, b in zip(parts_phi, parts_psi))
        worst = max(
            worst,
            abs(after - phi.inner(psi)),
            abs(sum(p.norm_squared() for p in parts_phi) - 1.0),
            abs(sum(p.norm_squared() for p in parts_psi) - 1.0),
        )
    return UnitarityVerdict(m.name, worst <= tol, worst, samples, steps, radius, seed)
