"""The three measurement semantics.

* projective observation of a QTM, of the whole configuration or of one cell;
* bulk measurement, which returns p1 - p0 up to an in-band error and leaves
  the state untouched;
* the (epsilon, theta)-measurement, which is exact on eigenstates, otherwise
  in-band except with probability epsilon, and destroys the state.

Functions take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ModelViolation, PreconditionError
from .superposition import Configuration, Superposition, condition, marginal

__all__ = [
    "MODELS",
    "NOISE_KINDS",
    "EIGEN_TOL",
    "QubitMarginal",
    "MeasurementOutcome",
    "NoiseModel",
    "observe_full",
    "observe_cell",
    "qubit_marginal",
    "bulk_measure",
    "et_measure",
]

MODELS = ("qtm-observe", "qtm-partial", "bqtm-bulk", "mbqtm-et")
NOISE_KINDS = ("uniform", "adversarial-edge")
EIGEN_TOL = 1e-9
EDGE_GAP = 1e-12


@dataclass(frozen=True)
class QubitMarginal:
    p1: float
    p0: float

    def __post_init__(self):
        for name, v in (("p1", self.p1), ("p0", self.p0)):
            if not (-EIGEN_TOL <= v <= 1 + EIGEN_TOL):
                raise PreconditionError(f"{name}={v} is not a probability")
        if abs(self.p1 + self.p0 - 1.0) > EIGEN_TOL:
            raise PreconditionError(f"p1 + p0 = {self.p1 + self.p0}, expected 1")

    @classmethod
    def from_p1(cls, p1: float) -> "QubitMarginal":
        return cls(p1, 1.0 - p1)

    @property
    def expectation(self) -> float:
        """|alpha|^2 - |beta|^2, the value a bulk measurement estimates."""
        return self.p1 - self.p0

    @property
    def eigenvalue(self) -> int | None:
        """+1 or -1 when the cell is in an eigenstate, else None."""
        if self.p1 >= 1.0 - EIGEN_TOL:
            return 1
        if self.p1 <= EIGEN_TOL:
            return -1
        return None


@dataclass(frozen=True)
class MeasurementOutcome:
    model: str
    value: float
    value_unclamped: float
    fault: bool
    collapsed: bool
    theta: float | None = None
    epsilon: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise PreconditionError(f"unknown measurement model {self.model!r}")
        if self.model == "bqtm-bulk" and self.collapsed:
            raise PreconditionError("bulk measurement never collapses the state")
        if self.model == "mbqtm-et" and not self.collapsed:
            raise PreconditionError("(epsilon, theta)-measurement always collapses the state")
        if self.fault and self.model != "mbqtm-et":
            raise PreconditionError("only the (epsilon, theta)-measurement can fault")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NoiseModel:
    """Distribution of the error term inside the open band (-theta, theta).

    ``uniform`` draws it uniformly; ``adversarial-edge`` sits just inside the
    band edge with the sign alternating by trial index.
    """

    kind: str
    theta: float

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise PreconditionError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not (0.0 < self.theta < 0.5):
            raise PreconditionError(f"theta must lie in (0, 1/2), got {self.theta}")

    def sample(self, rng: np.random.Generator, trial: int = 0) -> float:
        if self.kind == "adversarial-edge":
            mag = self.theta - EDGE_GAP
            return mag if trial % 2 == 0 else -mag
        while True:
            e = self.theta * (2.0 * rng.random() - 1.0)
            if abs(e) < self.theta:
                return e


def _clamp(x: float) -> float:
    return min(1.0, max(-1.0, x))


def observe_full(s: Superposition, rng: np.random.Generator) -> tuple[Configuration, Superposition]:
    """Projective observation of the whole configuration."""
    s.require_live()
    configs, amps = zip(*s.items())
    probs = np.abs(np.asarray(amps)) ** 2
    idx = int(rng.choice(len(configs), p=probs / probs.sum()))
    c = configs[idx]
    return c, Superposition.basis(c)


def observe_cell(s: Superposition, cell: int, rng: np.random.Generator,
                 model: str = "qtm") -> tuple[str, Superposition]:
    """Partial observation of one tape cell; only legal for a plain QTM."""
    if model not in ("qtm", "qtm-partial", "qtm-observe"):
        raise ModelViolation(f"partial observation is not allowed under the {model!r} model")
    s.require_live()
    marg = marginal(s, cell)
    symbols = list(marg)
    probs = np.array([marg[x] for x in symbols])
    sym = symbols[int(rng.choice(len(symbols), p=probs / probs.sum()))]
    return sym, condition(s, cell, sym)


def qubit_marginal(s: Superposition, cell: int) -> QubitMarginal:
    """(p1, p0) at a decision cell; any other symbol signals a malformed machine."""
    marg = marginal(s, cell)
    stray = {k: v for k, v in marg.items() if k not in ("0", "1") and v > EIGEN_TOL}
    if stray:
        detail = ", ".join(f"{k!r}: {v:.6g}" for k, v in stray.items())
        raise PreconditionError(f"cell {cell} is not a qubit cell ({detail})")
    p1 = min(1.0, max(0.0, marg.get("1", 0.0)))
    p0 = min(1.0, max(0.0, marg.get("0", 0.0)))
    total = p1 + p0
    return QubitMarginal(p1 / total, p0 / total)


def bulk_measure(q: QubitMarginal, noise: NoiseModel, rng: np.random.Generator,
                 trial: int = 0, seed: int | None = None) -> MeasurementOutcome:
    """Non-collapsing ensemble reading of p1 - p0 with in-band noise."""
    raw = q.expectation + noise.sample(rng, trial)
    return MeasurementOutcome("bqtm-bulk", _clamp(raw), raw, False, False, noise.theta, None, seed)


def et_measure(q: QubitMarginal, epsilon: float, theta: float, rng: np.random.Generator,
               noise_kind: str = "uniform", trial: int = 0, superposition: Superposition | None = None,
               seed: int | None = None) -> MeasurementOutcome:
    """(epsilon, theta)-measurement under the abstract model.

    Eigenstates return exactly +1 or -1.  Otherwise a fault occurs with
    probability epsilon and returns a value drawn uniformly from the part of
    [-1, 1] outside the band; without a fault the value is in-band.  When
    ``superposition`` is supplied it is marked consumed.
    """
    if not (0.0 < epsilon < 0.5):
        raise PreconditionError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    noise = NoiseModel(noise_kind, theta)
    if superposition is not None:
        superposition.mark_consumed()
    eig = q.eigenvalue
    if eig is not None:
        return MeasurementOutcome("mbqtm-et", float(eig), float(eig), False, True, theta, epsilon, seed)
    mean = q.expectation
    if rng.random() < epsilon:
        lo_len = max(0.0, (mean - theta) - (-1.0))
        hi_len = max(0.0, 1.0 - (mean + theta))
        if lo_len + hi_len > 0.0:
            u = rng.random() * (lo_len + hi_len)
            raw = -1.0 + u if u < lo_len else mean + theta + (u - lo_len)
            return MeasurementOutcome("mbqtm-et", _clamp(raw), raw, True, True, theta, epsilon, seed)
        # the band covers [-1, 1]; no reading can be out of band
    raw = mean + noise.sample(rng, trial)
    return MeasurementOutcome("mbqtm-et", _clamp(raw), raw, False, True, theta, epsilon, seed)


def measure_distance(outcome: MeasurementOutcome, q: QubitMarginal) -> float:
    return math.fabs(outcome.value_unclamped - q.expectation)
