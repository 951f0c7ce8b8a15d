"""Modified bulk machine realised as n independent copies of one QTM.

Every member starts from the same input and evolves under the same
operator without intermediate observation, so the pre-measurement state is
shared: one state vector is evolved and the member outcomes are i.i.d. draws
from its marginal at the read-out cell.  The count of members reading 1 is
then a Binomial(n, p1) draw.  ``slow_path=True`` instead simulates every
member in full with its own generator, for validation.

Random streams: partition ``i`` of a run seeded with ``seed`` uses
``SeedSequence(seed, spawn_key=(0, i))``; member ``j`` on the slow path uses
``spawn_key=(1, j)``.  Reports depend only on (seed, n, partitions).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import PreconditionError
from .machine import Machine
from .measurement import QubitMarginal, observe_full, qubit_marginal
from .statistics import TailConvention, beyond_band, required_n
from .superposition import run

__all__ = [
    "SCALES",
    "EnsembleConfig",
    "EnsembleReport",
    "partition_sizes",
    "ensemble_counts",
    "ensemble_from_marginal",
    "ensemble_measure",
    "realize_mbqtm",
    "empirical_error_rate",
]

SCALES = ("probability", "plusminus")


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    seed: int
    partitions: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"ensemble size must be at least 1, got {self.n}")
        if not (1 <= self.partitions <= self.n):
            raise PreconditionError(f"partitions must lie in [1, n], got {self.partitions}")
        if self.seed < 0 or self.seed >= 2**64:
            raise PreconditionError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class EnsembleReport:
    n: int
    count_plus: int
    count_minus: int
    average: float
    exact_p1: float
    theta: float | None
    within_theta: bool | None
    scale: str
    seed: int
    partitions: int
    path: str = "binomial"

    def to_dict(self) -> dict:
        return asdict(self)


def partition_sizes(n: int, partitions: int) -> list[int]:
    base, extra = divmod(n, partitions)
    return [base + (i < extra) for i in range(partitions)]


def _partition_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, i)))


def _member_rng(seed: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, j)))


def ensemble_counts(p1: float, cfg: EnsembleConfig, repetitions: int | None = None):
    """count_plus for one run, or an array of ``repetitions`` independent runs."""
    if not (0.0 <= p1 <= 1.0):
        raise PreconditionError(f"p1 must lie in [0, 1], got {p1}")
    total = 0 if repetitions is None else np.zeros(repetitions, dtype=np.int64)
    for i, size in enumerate(partition_sizes(cfg.n, cfg.partitions)):
        total = total + _partition_rng(cfg.seed, i).binomial(size, p1, size=repetitions)
    return int(total) if repetitions is None else total


def _within(count_plus: int, n: int, p1: float, theta: float, scale: str) -> bool:
    band = theta if scale == "probability" else theta / 2.0
    return not bool(beyond_band(count_plus, n, p1, band))


def _report(count_plus: int, p1: float, cfg: EnsembleConfig, theta, scale, path) -> EnsembleReport:
    if scale not in SCALES:
        raise PreconditionError(f"scale must be one of {SCALES}, got {scale!r}")
    n = cfg.n
    return EnsembleReport(
        n=n,
        count_plus=count_plus,
        count_minus=n - count_plus,
        average=(2 * count_plus - n) / n,
        exact_p1=p1,
        theta=theta,
        within_theta=None if theta is None else _within(count_plus, n, p1, theta, scale),
        scale=scale,
        seed=cfg.seed,
        partitions=cfg.partitions,
        path=path,
    )


def ensemble_from_marginal(q: QubitMarginal, cfg: EnsembleConfig, theta: float | None = None,
                           scale: str = "plusminus") -> EnsembleReport:
    return _report(ensemble_counts(q.p1, cfg), q.p1, cfg, theta, scale, "binomial")


def ensemble_measure(m: Machine, word: str, steps: int, cell: int, cfg: EnsembleConfig,
                     theta: float | None = None, scale: str = "plusminus",
                     slow_path: bool = False) -> EnsembleReport:
    """Run the machine, then read ``cell`` on all n members at once."""
    state = run(m, word, steps)
    q = qubit_marginal(state, cell)
    if not slow_path:
        return ensemble_from_marginal(q, cfg, theta, scale)
    plus = 0
    for j in range(cfg.n):
        member = run(m, word, steps)
        config, _ = observe_full(member, _member_rng(cfg.seed, j))
        plus += config.symbol_at(cell) == "1"
    return _report(plus, q.p1, cfg, theta, scale, "members")


def realize_mbqtm(theta: float, epsilon: float, convention=TailConvention.TWO_SIDED) -> int:
    """Member count at which the ensemble meets the (epsilon, theta) contract."""
    return required_n(theta, epsilon, convention)


def empirical_error_rate(p1: float, n: int, theta: float, scale: str = "probability",
                         trials: int = 100_000, seed: int = 0, partitions: int = 1) -> float:
    """Monte Carlo estimate of P(|estimate - truth| >= theta).

    On the probability scale the estimate is count_plus / n against p1; on
    the plusminus scale it is the ensemble average against 2 p1 - 1.
    """
    if scale not in SCALES:
        raise PreconditionError(f"scale must be one of {SCALES}, got {scale!r}")
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    counts = ensemble_counts(p1, EnsembleConfig(n, seed, partitions), repetitions=trials)
    band = theta if scale == "probability" else theta / 2.0
    return float(np.mean(beyond_band(counts, n, p1, band)))


def mc_sigma(rate: float, trials: int) -> float:
    """Standard error of a Monte Carlo frequency."""
    return float(np.sqrt(max(rate * (1.0 - rate), 1.0 / trials) / trials))
