"""Acceptance criteria of the nine decision classes, checked on one input.

Exact mode works on the computed marginals.  Empirical mode replays the
measurement the class is defined with over seeded trials.  Strict
inequalities get a guard band of GUARD, and every comparison is reported in
``margins``.
"""

from __future__ import annotations

import inspect
import math
from fractions import Fraction

import numpy as np

from ..errors import PreconditionError
from ..measurement import NoiseModel, QubitMarginal, bulk_measure, et_measure, observe_cell, qubit_marginal
from ..ensemble import EnsembleConfig, ensemble_counts, realize_mbqtm
from ..statistics import TailConvention
from ..superposition import condition, run
from .instance import ClassId, DecisionProblemInstance, Verdict

__all__ = [
    "GUARD",
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
    "check",
    "fresh_seed",
]

GUARD = 1e-9
DEFAULT_TRIALS = 1000
THIRD = 1.0 / 3.0


def fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (2**63))


def _expect(inst: DecisionProblemInstance, *classes: ClassId) -> None:
    if inst.cls not in classes:
        raise PreconditionError(f"instance is {inst.cls.value}, checker expects {', '.join(c.value for c in classes)}")


def _final(inst: DecisionProblemInstance):
    return run(inst.machine, inst.input, inst.steps)


def _param(name: str, value, fallback):
    v = value if value is not None else fallback
    if v is None:
        raise PreconditionError(f"{name} is required (flag or instance line)")
    if not (0.0 < v < 0.5):
        raise PreconditionError(f"{name} must lie in (0, 1/2), got {v}")
    return float(v)


def _mode(mode: str) -> str:
    if mode not in ("exact", "empirical"):
        raise PreconditionError(f"mode must be exact or empirical, got {mode!r}")
    return mode


def _label(eig: int | None) -> str:
    return {1: "accept", -1: "reject"}.get(eig, "none")


def _fault_bound(epsilon: float, trials: int) -> float:
    return epsilon + 3.0 * math.sqrt(epsilon * (1.0 - epsilon) / trials)


def _empirical(inst, decision, margins, trials, seed, notes=()):
    return Verdict(inst.cls, decision != "none", decision, margins, "empirical", trials, seed, notes=list(notes))


# exact family -----------------------------------------------------------------

def check_eqp(inst: DecisionProblemInstance, mode: str = "exact", trials: int = DEFAULT_TRIALS,
              seed: int | None = None) -> Verdict:
    """Observation of the acceptance cell gives 1 (or 0) with probability 1."""
    _expect(inst, ClassId.EQP)
    state = _final(inst)
    q = qubit_marginal(state, inst.cell("acceptance"))
    margins = {"p1": q.p1, "p0": q.p0}
    if _mode(mode) == "exact":
        decision = _label(q.eigenvalue)
        return Verdict(inst.cls, decision != "none", decision, margins)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    seen = {observe_cell(state, inst.cell("acceptance"), rng)[0] for _ in range(trials)}
    margins["observed_symbols"] = sorted(seen)
    decision = {"1": "accept", "0": "reject"}.get(seen.pop()) if len(seen) == 1 else "none"
    return _empirical(inst, decision or "none", margins, trials, seed)


def check_ebqp(inst: DecisionProblemInstance, theta: float | None = None, mode: str = "exact",
               trials: int = DEFAULT_TRIALS, seed: int | None = None, noise: str | None = None) -> Verdict:
    """Bulk reading beyond 1 - theta (or below -1 + theta) with probability 1."""
    _expect(inst, ClassId.EBQP)
    theta = _param("theta", theta, inst.theta)
    q = qubit_marginal(_final(inst), inst.cell("acceptance"))
    margins = {"p1": q.p1, "expectation": q.expectation, "theta": theta}
    if _mode(mode) == "exact":
        decision = _label(q.eigenvalue)
        return Verdict(inst.cls, decision != "none", decision, margins)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    nm = NoiseModel(noise or inst.noise or "uniform", theta)
    values = [bulk_measure(q, nm, rng, t, seed).value for t in range(trials)]
    margins.update(min_value=min(values), max_value=max(values))
    decision = "accept" if min(values) > 1 - theta else "reject" if max(values) < -1 + theta else "none"
    return _empirical(inst, decision, margins, trials, seed)


def check_ebqp_star(inst: DecisionProblemInstance, epsilon: float | None = None, theta: float | None = None,
                    mode: str = "exact", trials: int = DEFAULT_TRIALS, seed: int | None = None,
                    noise: str | None = None) -> Verdict:
    """(epsilon, theta)-measurement beyond 1 - theta with probability 1.

    Only an eigenstate can meet a probability-1 requirement, because any
    other state faults with positive probability.
    """
    _expect(inst, ClassId.EBQP_STAR)
    epsilon = _param("epsilon", epsilon, inst.epsilon)
    theta = _param("theta", theta, inst.theta)
    q = qubit_marginal(_final(inst), inst.cell("acceptance"))
    margins = {"p1": q.p1, "expectation": q.expectation, "epsilon": epsilon, "theta": theta}
    if _mode(mode) == "exact":
        eig = q.eigenvalue
        if eig is not None:
            margins["value"] = float(eig)
            margins["slack"] = (eig - (1 - theta)) if eig > 0 else ((-1 + theta) - eig)
        return Verdict(inst.cls, eig is not None, _label(eig), margins)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    kind = noise or inst.noise or "uniform"
    values = [et_measure(q, epsilon, theta, rng, kind, t, seed=seed).value for t in range(trials)]
    margins.update(min_value=min(values), max_value=max(values))
    decision = "accept" if min(values) > 1 - theta else "reject" if max(values) < -1 + theta else "none"
    return _empirical(inst, decision, margins, trials, seed)


# bounded-error family -----------------------------------------------------------

def check_bqp(inst: DecisionProblemInstance, mode: str = "exact", trials: int = DEFAULT_TRIALS,
              seed: int | None = None) -> Verdict:
    """Observation gives 1 with probability above 2/3 (or 0 above 2/3)."""
    _expect(inst, ClassId.BQP)
    state = _final(inst)
    q = qubit_marginal(state, inst.cell("acceptance"))
    margins = {"p1": q.p1, "threshold": 2 / 3, "margin": q.p1 - 2 / 3}
    if _mode(mode) == "exact":
        if q.p1 > 2 / 3 + GUARD:
            decision = "accept"
        elif q.p0 > 2 / 3 + GUARD:
            decision = "reject"
            margins["margin"] = q.p0 - 2 / 3
        else:
            decision = "none"
        return Verdict(inst.cls, decision != "none", decision, margins)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    ones = sum(observe_cell(state, inst.cell("acceptance"), rng)[0] == "1" for _ in range(trials))
    freq = ones / trials
    margins["observed_p1"] = freq
    decision = "accept" if freq > 2 / 3 else "reject" if freq < 1 / 3 else "none"
    return _empirical(inst, decision, margins, trials, seed)


def check_bbqp(inst: DecisionProblemInstance, theta: float | None = None, mode: str = "exact",
               trials: int = DEFAULT_TRIALS, seed: int | None = None, noise: str | None = None) -> Verdict:
    """Bulk reading above 1/3 - theta (or below -1/3 + theta)."""
    _expect(inst, ClassId.BBQP)
    theta = _param("theta", theta, inst.theta)
    q = qubit_marginal(_final(inst), inst.cell("acceptance"))
    c = q.expectation
    margins = {"p1": q.p1, "expectation": c, "theta": theta, "lower": c - theta, "threshold": THIRD - theta}
    if _mode(mode) == "exact":
        decision = "accept" if c > THIRD + GUARD else "reject" if c < -THIRD - GUARD else "none"
        return Verdict(inst.cls, decision != "none", decision, margins)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    nm = NoiseModel(noise or inst.noise or "uniform", theta)
    values = [bulk_measure(q, nm, rng, t, seed).value for t in range(trials)]
    margins.update(min_value=min(values), max_value=max(values))
    decision = ("accept" if min(values) > THIRD - theta else
                "reject" if max(values) < -THIRD + theta else "none")
    return _empirical(inst, decision, margins, trials, seed)


def derive_bbqp_params(p_bound, shrink: float = 1e-9) -> tuple[float, dict]:
    """Largest precision turning a bounded-error machine into a bulk one.

    With p = P(read 1) > 2/3 and theta < p - 2/3 the in-band reading obeys
    2p - 1 - theta > 2p - 1 - p + 2/3 = p - 1/3 > 1/3.  The chain is
    evaluated in exact rational arithmetic at theta = theta_max (1 - shrink).
    """
    p = Fraction(p_bound)
    if p <= Fraction(2, 3):
        raise PreconditionError(f"p must exceed 2/3, got {p_bound}")
    if p > 1:
        raise PreconditionError(f"p must not exceed 1, got {p_bound}")
    theta_max = p - Fraction(2, 3)
    theta = theta_max * (1 - Fraction(shrink))
    lower = 2 * p - 1 - theta
    middle = 2 * p - 1 - p + Fraction(2, 3)
    holds = lower > middle > Fraction(1, 3)
    trace = {
        "p": float(p),
        "theta_max": float(theta_max),
        "theta": float(theta),
        "value_lower_bound": float(lower),
        "p_minus_third": float(middle),
        "slack_over_third": float(lower - Fraction(1, 3)),
        "holds": holds,
    }
    return float(theta_max), trace


def _threshold_votes(values, epsilon, trials, threshold):
    """accept/reject/none from in-band readings compared with +-threshold."""
    values = np.asarray(values)
    above = float(np.mean(values > threshold))
    below = float(np.mean(values < -threshold))
    bound = _fault_bound(epsilon, trials)
    if above > 0.5 and 1.0 - above <= bound:
        return "accept", above, bound
    if below > 0.5 and 1.0 - below <= bound:
        return "reject", below, bound
    return "none", max(above, below), bound


def check_bbqp_star(inst: DecisionProblemInstance, epsilon: float | None = None, theta: float | None = None,
                    n: int | None = None, mode: str = "exact", trials: int = DEFAULT_TRIALS,
                    seed: int | None = None, noise: str | None = None) -> Verdict:
    """(epsilon, theta)-measurement above 1/3 (or below -1/3).

    Exact mode accepts when 2 p1 - 1 - theta > 1/3, which holds under any
    in-band noise.  When that is inconclusive the check falls back to the
    empirical mode.  Empirical mode uses the abstract measurement when a
    noise kind is given, else an ensemble of n members per trial, and allows
    a failure fraction up to epsilon plus three standard errors.
    """
    _expect(inst, ClassId.BBQP_STAR)
    epsilon = _param("epsilon", epsilon, inst.epsilon)
    theta = _param("theta", theta, inst.theta)
    q = qubit_marginal(_final(inst), inst.cell("acceptance"))
    c = q.expectation
    margins = {"p1": q.p1, "expectation": c, "epsilon": epsilon, "theta": theta,
               "lower": c - theta, "upper": c + theta, "threshold": THIRD}
    notes = []
    if _mode(mode) == "exact":
        if c - theta > THIRD + GUARD:
            margins["slack"] = c - theta - THIRD
            return Verdict(inst.cls, True, "accept", margins)
        if c + theta < -THIRD - GUARD:
            margins["slack"] = -THIRD - (c + theta)
            return Verdict(inst.cls, True, "reject", margins)
        notes.append("exact bound inconclusive; fell back to empirical mode")
    seed = fresh_seed() if seed is None else seed
    kind = noise or inst.noise
    if kind is not None:
        rng = np.random.default_rng(seed)
        values = [et_measure(q, epsilon, theta, rng, kind, t, seed=seed).value for t in range(trials)]
        margins["realization"] = f"abstract measurement, {kind} noise"
    else:
        n = n or inst.n or realize_mbqtm(theta, epsilon)
        counts = ensemble_counts(q.p1, EnsembleConfig(n, seed), repetitions=trials)
        values = (2 * counts - n) / n
        margins["realization"] = f"ensemble of {n}"
        margins["n"] = n
    decision, frac, bound = _threshold_votes(values, epsilon, trials, THIRD)
    margins.update(success_fraction=frac, failure_bound=bound,
                   min_value=float(np.min(values)), max_value=float(np.max(values)))
    return _empirical(inst, decision, margins, trials, seed, notes)


# zero-error family --------------------------------------------------------------

def check_zqp(inst: DecisionProblemInstance, mode: str = "exact", trials: int = DEFAULT_TRIALS,
              seed: int | None = None) -> Verdict:
    """Halt cell reads 1 with probability above 1/2; then the decision cell is certain."""
    _expect(inst, ClassId.ZQP)
    state = _final(inst)
    halt, dec = inst.cell("halt"), inst.cell("decision")
    qh = qubit_marginal(state, halt)
    margins = {"p_halt": qh.p1, "halt_margin": qh.p1 - 0.5}
    if _mode(mode) == "exact":
        if qh.p1 <= 0.5 + GUARD:
            return Verdict(inst.cls, False, "none", margins, notes=["halt probability is not above 1/2"])
        qd = qubit_marginal(condition(state, halt, "1"), dec)
        margins["decision_p1"] = qd.p1
        decision = _label(qd.eigenvalue)
        notes = [] if decision != "none" else ["decision cell is not an eigenstate given halt = 1"]
        return Verdict(inst.cls, decision != "none", decision, margins, notes=notes)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    halted, symbols = 0, set()
    for _ in range(trials):
        h, post = observe_cell(state, halt, rng)
        if h == "1":
            halted += 1
            symbols.add(observe_cell(post, dec, rng)[0])
    margins.update(observed_p_halt=halted / trials, decision_symbols=sorted(symbols))
    decision = "none"
    if halted / trials > 0.5 and len(symbols) == 1:
        decision = {"1": "accept", "0": "reject"}.get(symbols.pop(), "none")
    return _empirical(inst, decision, margins, trials, seed)


def _halt_failure(c_h: float, n: int) -> float:
    """Normal-approximation P(ensemble average <= 0) for mean c_h > 0."""
    if c_h <= 0:
        return 1.0
    return TailConvention.TWO_SIDED.epsilon_for(c_h * math.sqrt(n))


def _zbqp_cells(inst, state):
    qh = qubit_marginal(state, inst.cell("halt"))
    qa = qubit_marginal(state, inst.cell("accept"))
    qr = qubit_marginal(state, inst.cell("reject"))
    return qh, qa, qr


def _zero_error_decision(qa: QubitMarginal, qr: QubitMarginal) -> str:
    if qa.eigenvalue == 1:
        return "accept"
    if qr.eigenvalue == -1:
        return "reject"
    return "none"


def check_zbqp(inst: DecisionProblemInstance, theta: float | None = None, mode: str = "exact",
               trials: int = DEFAULT_TRIALS, seed: int | None = None, noise: str | None = None) -> Verdict:
    """Bulk halt reading above 0 with probability 1, then an exact accept or reject cell."""
    _expect(inst, ClassId.ZBQP)
    theta = _param("theta", theta, inst.theta)
    qh, qa, qr = _zbqp_cells(inst, _final(inst))
    c_h = qh.expectation
    margins = {"p_halt": qh.p1, "halt_average": c_h, "halt_lower": c_h - theta,
               "accept_p1": qa.p1, "reject_p1": qr.p1, "theta": theta}
    if _mode(mode) == "exact":
        decision = _zero_error_decision(qa, qr) if c_h - theta > GUARD else "none"
        return Verdict(inst.cls, decision != "none", decision, margins)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    nm = NoiseModel(noise or inst.noise or "uniform", theta)
    halts = [bulk_measure(qh, nm, rng, t, seed).value for t in range(trials)]
    acc = [bulk_measure(qa, nm, rng, t, seed).value for t in range(trials)]
    rej = [bulk_measure(qr, nm, rng, t, seed).value for t in range(trials)]
    margins.update(min_halt=min(halts))
    decision = "none"
    if min(halts) > 0:
        if min(acc) > 1 - theta:
            decision = "accept"
        elif max(rej) < -1 + theta:
            decision = "reject"
    return _empirical(inst, decision, margins, trials, seed)


def check_zbqp_star(inst: DecisionProblemInstance, epsilon: float | None = None, theta: float | None = None,
                    n: int | None = None, mode: str = "exact", trials: int = DEFAULT_TRIALS,
                    seed: int | None = None, noise: str | None = None) -> Verdict:
    """Halt reading above 0 with probability above 1 - epsilon, then an exact cell.

    The halt test is the ensemble average of n members (default: the n that
    realises the (epsilon, theta) contract).  Exact mode requires the halt
    average minus theta to be positive and the normal-approximation
    probability of a non-positive ensemble average to be at most epsilon.
    The accept cell must then be the eigenstate |1> (reading +1) or the
    reject cell the eigenstate |0> (reading -1).
    """
    _expect(inst, ClassId.ZBQP_STAR)
    epsilon = _param("epsilon", epsilon, inst.epsilon)
    theta = _param("theta", theta, inst.theta)
    n = n or inst.n or realize_mbqtm(theta, epsilon)
    qh, qa, qr = _zbqp_cells(inst, _final(inst))
    c_h = qh.expectation
    margins = {"p_halt": qh.p1, "halt_average": c_h, "halt_lower": c_h - theta, "n": n,
               "accept_p1": qa.p1, "reject_p1": qr.p1, "epsilon": epsilon, "theta": theta}
    if _mode(mode) == "exact":
        fail = _halt_failure(c_h, n)
        margins["halt_failure"] = fail
        halt_ok = c_h - theta > GUARD and fail <= epsilon
        decision = _zero_error_decision(qa, qr) if halt_ok else "none"
        if decision == "accept":
            margins["accept_value"] = 1.0
            margins["reject_is_eigenstate"] = qr.eigenvalue is not None
        elif decision == "reject":
            margins["reject_value"] = -1.0
            margins["accept_is_eigenstate"] = qa.eigenvalue is not None
        notes = [] if halt_ok else ["halt average is not above 0 with the required confidence"]
        return Verdict(inst.cls, decision != "none", decision, margins, notes=notes)
    seed = fresh_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    kind = noise or inst.noise
    if kind is not None:
        halts = np.array([et_measure(qh, epsilon, theta, rng, kind, t, seed=seed).value for t in range(trials)])
    else:
        counts = ensemble_counts(qh.p1, EnsembleConfig(n, seed), repetitions=trials)
        halts = (2 * counts - n) / n
    kind = kind or "uniform"
    acc = [et_measure(qa, epsilon, theta, rng, kind, t, seed=seed).value for t in range(trials)]
    rej = [et_measure(qr, epsilon, theta, rng, kind, t, seed=seed).value for t in range(trials)]
    halt_fail = float(np.mean(halts <= 0))
    bound = _fault_bound(epsilon, trials)
    margins.update(halt_failure_fraction=halt_fail, failure_bound=bound,
                   accept_exact_fraction=float(np.mean(np.array(acc) == 1.0)),
                   reject_exact_fraction=float(np.mean(np.array(rej) == -1.0)))
    decision = "none"
    if halt_fail <= bound:
        if all(v == 1.0 for v in acc):
            decision = "accept"
        elif all(v == -1.0 for v in rej):
            decision = "reject"
    return _empirical(inst, decision, margins, trials, seed)


_DISPATCH = {
    ClassId.EQP: check_eqp,
    ClassId.EBQP: check_ebqp,
    ClassId.EBQP_STAR: check_ebqp_star,
    ClassId.BQP: check_bqp,
    ClassId.BBQP: check_bbqp,
    ClassId.BBQP_STAR: check_bbqp_star,
    ClassId.ZQP: check_zqp,
    ClassId.ZBQP: check_zbqp,
    ClassId.ZBQP_STAR: check_zbqp_star,
}


def check(inst: DecisionProblemInstance, **kwargs) -> Verdict:
    """Run the checker of the instance's class; unused keyword arguments are dropped."""
    fn = _DISPATCH[inst.cls]
    accepted = inspect.signature(fn).parameters
    verdict = fn(inst, **{k: v for k, v in kwargs.items() if k in accepted and v is not None})
    if verdict.k is None and inst.ir is not None:
        verdict.k = inst.ir.overhead
    return verdict
