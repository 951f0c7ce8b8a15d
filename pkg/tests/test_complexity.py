from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqtm.complexity import (
    ClassId,
    StepBudget,
    Verdict,
    check,
    check_bbqp,
    check_bbqp_star,
    check_bqp,
    check_ebqp,
    check_eqp,
    check_zbqp,
    check_zbqp_star,
    check_zqp,
    derive_bbqp_params,
    format_ir,
    load_instance,
    load_ir,
    lower,
    measured_overhead,
    parse_instance,
    parse_ir,
    transform_eqp_to_ebqp_star,
    transform_zqp_to_zbqp_star,
    zbqp_star_instance,
)
from mbqtm.errors import MachineError, ParseError, PreconditionError
from mbqtm.resources import DATA_DIR
from mbqtm.superposition import halting_time
from mbqtm.wellformed import check_unitarity_window, validate_wellformed

IRS = ["zqp-demo.mqir", "zqp-half.mqir", "zqp-noinit.mqir"]
WORDS = ["1" * k for k in range(1, 9)] + ["0" * k for k in range(1, 9)] + ["10", "0110", "1011"]


def even(x):
    return x.count("1") % 2 == 0


# --- instances and budgets -------------------------------------------------------

def test_budget():
    b = StepBudget((19, 2))
    assert b(4) == 27 and str(b) == "poly 19 2"
    assert b.shifted(4)(4) == 31
    assert StepBudget(constant=3)(100) == 3
    with pytest.raises(PreconditionError):
        StepBudget((1,), constant=2)


def test_instance_requires_cells():
    text = "class ZQP\nmachine zqp-coin.mqt\nbudget const 3\ncell halt -1\n"
    with pytest.raises(PreconditionError, match="decision"):
        parse_instance(text, DATA_DIR)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("class XQP\n", "unknown class"),
        ("class EQP\nbudget poly a\n", "budget"),
        ("class EQP\nbudget const 1\n", "exactly one"),
        ("class EQP\nmachine a\nmachine b\n", "duplicate"),
        ("class EQP\nwhat 1\n", "unknown directive"),
    ],
)
def test_instance_parse_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_instance(text)


def test_ir_instance_merges_cells():
    inst = load_instance("zqp-demo.inst")
    assert inst.cells == {"work": -1, "halt": -2, "decision": -3}
    assert inst.steps == 27


def test_verdict_exact_has_no_mc_fields():
    with pytest.raises(PreconditionError):
        Verdict(ClassId.EQP, True, "accept", mode="exact", trials=10)


# --- exact and bounded-error checkers --------------------------------------------

@pytest.mark.parametrize("name, decision", [("parity-eqp", "accept"), ("identity-eqp", "accept"),
                                            ("hadamard-eqp", "none")])
def test_eqp(name, decision):
    v = check(load_instance(f"{name}.inst"))
    assert v.decision == decision
    assert v.in_class_evidence == (decision != "none")


def test_eqp_empirical_agrees():
    inst = load_instance("parity-eqp.inst")
    v = check_eqp(inst, mode="empirical", trials=200, seed=1)
    assert v.decision == "accept" and v.trials == 200 and v.seed == 1
    v = check_eqp(load_instance("hadamard-eqp.inst"), mode="empirical", trials=200, seed=1)
    assert v.decision == "none"


def test_parity_reject_input():
    inst = replace(load_instance("parity-eqp.inst"), input="1001")
    assert check(inst).decision == "reject"


def test_eqp_to_ebqp_star():
    star = transform_eqp_to_ebqp_star(load_instance("parity-eqp.inst"))
    assert star.cls is ClassId.EBQP_STAR and star.machine == load_instance("parity-eqp.inst").machine
    v = check(star, epsilon=0.01, theta=2**-6)
    assert v.decision == "accept"
    for mode in ("exact", "empirical"):
        assert check(star, epsilon=0.0455, theta=2**-5, mode=mode, trials=300, seed=2).in_class_evidence
    with pytest.raises(PreconditionError, match="eigenstate"):
        transform_eqp_to_ebqp_star(load_instance("hadamard-eqp.inst"))


def test_ebqp_star_rejects_non_eigenstate():
    inst = replace(load_instance("hadamard-eqp.inst"), cls=ClassId.EBQP_STAR)
    assert not check(inst, epsilon=0.0455, theta=2**-5).in_class_evidence
    assert not check(inst, epsilon=0.0455, theta=2**-5, mode="empirical", trials=500, seed=3).in_class_evidence


def test_ebqp_bulk():
    inst = replace(load_instance("identity-eqp.inst"), cls=ClassId.EBQP)
    assert check_ebqp(inst, theta=0.1).decision == "accept"
    assert check_ebqp(inst, theta=0.1, mode="empirical", trials=100, seed=1).decision == "accept"


def test_bqp_and_bbqp_on_demo():
    base = load_instance("bqp-demo.inst")
    bqp = replace(base, cls=ClassId.BQP)
    assert check_bqp(bqp).decision == "accept"
    assert check_bqp(bqp, mode="empirical", trials=2000, seed=4).decision == "accept"
    bb = replace(base, cls=ClassId.BBQP)
    assert check_bbqp(bb, theta=1 / 24).decision == "accept"
    assert check_bbqp(bb, theta=1 / 24, mode="empirical", trials=300, seed=5, noise="adversarial-edge").decision == "accept"


def test_bbqp_star_exact_and_noise():
    inst = load_instance("bqp-demo.inst")
    v = check_bbqp_star(inst, theta=1 / 24)
    assert v.decision == "accept" and v.mode == "exact"
    assert v.margins["slack"] == pytest.approx(0.5 - 1 / 24 - 1 / 3)
    v = check_bbqp_star(inst, theta=1 / 24, mode="empirical", trials=1000, seed=7, noise="adversarial-edge")
    assert v.decision == "accept"
    assert 1 - v.margins["success_fraction"] <= v.margins["failure_bound"]


def test_bbqp_star_falls_back_when_inconclusive():
    v = check_bbqp_star(load_instance("bqp-demo.inst"), theta=0.2, seed=1, trials=300)
    assert v.mode == "empirical" and v.notes


@given(st.fractions(Fraction(2, 3), 1).filter(lambda p: p > Fraction(2, 3)))
def test_derive_bbqp_params_chain(p):
    theta_max, trace = derive_bbqp_params(p)
    assert trace["holds"]
    theta = (p - Fraction(2, 3)) * (1 - Fraction(1, 10**6))
    assert 2 * p - 1 - theta > Fraction(1, 3)
    assert theta_max == pytest.approx(float(p - Fraction(2, 3)))


@pytest.mark.parametrize("p", [Fraction(2, 3), 0.5, 1.5])
def test_derive_bbqp_params_domain(p):
    with pytest.raises(PreconditionError):
        derive_bbqp_params(p)


# --- zero-error family and the rewrite --------------------------------------------

def test_zqp_demo():
    inst = load_instance("zqp-demo.inst")
    v = check_zqp(inst)
    assert v.decision == "accept" and v.margins["p_halt"] == pytest.approx(0.75)
    v = check_zqp(inst, mode="empirical", trials=500, seed=3)
    assert v.decision == "accept"
    assert check_zqp(replace(inst, input="10")).decision == "reject"


def test_zqp_half_fails_halt_margin():
    inst = load_instance("zqp-demo.inst")
    ir = load_ir(DATA_DIR / "zqp-half.mqir")
    half = replace(inst, ir=ir, machine=lower(ir))
    assert not check_zqp(half).in_class_evidence


@pytest.mark.parametrize("name", IRS)
def test_lowered_irs_are_wellformed(name):
    m = lower(load_ir(DATA_DIR / name))
    assert validate_wellformed(m).passed
    assert check_unitarity_window(m, radius=3, steps=3, samples=6, seed=1).passed


@pytest.mark.parametrize("name", IRS)
def test_ir_round_trip(name):
    ir = load_ir(DATA_DIR / name)
    assert parse_ir(format_ir(ir)) == ir


def test_demo_halting_time():
    m = lower(load_ir(DATA_DIR / "zqp-demo.mqir"))
    for x in WORDS:
        assert halting_time(m, x) == 2 * len(x) + 19


@pytest.mark.parametrize("name, k", [("zqp-demo.mqir", 4), ("zqp-noinit.mqir", 10), ("zqp-half.mqir", 4)])
def test_transform_overhead_constant(name, k):
    ir = load_ir(DATA_DIR / name)
    out = transform_zqp_to_zbqp_star(ir)
    assert out.overhead == k
    assert set(measured_overhead(ir, out, WORDS)) == {k}
    assert validate_wellformed(lower(out)).passed
    assert parse_ir(format_ir(out)) == out


def test_transform_cells():
    out = transform_zqp_to_zbqp_star(load_ir(DATA_DIR / "zqp-demo.mqir"))
    assert out.cells == {"work": -1, "halt": -2, "accept": -3, "reject": -4}
    assert out.write.targets == ("accept", "reject")


@pytest.mark.parametrize("x", WORDS)
def test_zbqp_star_decisions(x):
    inst = zbqp_star_instance(replace(load_instance("zqp-demo.inst"), input=x))
    assert inst.steps == 2 * len(x) + 23
    v = check(inst)
    assert v.decision == ("accept" if even(x) else "reject")
    assert v.k == 4


def test_zbqp_star_empirical():
    inst = zbqp_star_instance(load_instance("zqp-demo.inst"))
    v = check_zbqp_star(inst, mode="empirical", trials=400, seed=9)
    assert v.decision == "accept"
    v = check_zbqp_star(inst, mode="empirical", trials=400, seed=9, noise="adversarial-edge")
    assert v.decision == "accept"


def test_zbqp_star_rejects_weak_halt():
    ir = load_ir(DATA_DIR / "zqp-half.mqir")
    inst = replace(load_instance("zqp-demo.inst"), ir=ir, machine=lower(ir))
    star = zbqp_star_instance(inst)
    assert not check_zbqp_star(star).in_class_evidence


def test_zbqp_bulk():
    inst = zbqp_star_instance(load_instance("zqp-demo.inst"))
    bulk = replace(inst, cls=ClassId.ZBQP)
    assert check_zbqp(bulk, theta=2**-5).decision == "accept"
    assert check_zbqp(bulk, theta=2**-5, mode="empirical", trials=200, seed=1).decision == "accept"


def test_transform_preconditions():
    ir = load_ir(DATA_DIR / "zqp-demo.mqir")
    with pytest.raises(MachineError):
        transform_zqp_to_zbqp_star(replace(ir, cells={k: v for k, v in ir.cells.items() if k != "halt"}))
    with pytest.raises(PreconditionError):
        zbqp_star_instance(load_instance("bqp-demo.inst"))


@pytest.mark.parametrize(
    "edit, fragment",
    [
        (lambda t: t.replace("cell work -1", "cell work 1"), "left of the input"),
        (lambda t: t.replace("phase WRITE\n", "").replace("copy work -> decision when halt 1\n", ""), "WRITE"),
        (lambda t: t.replace("rule n 0 -> 1 0 done R", "rule n 0 -> 1 0 s R"), "re-entered"),
        (lambda t: t.replace("copy work -> decision", "copy work -> halt"), "different cells"),
    ],
)
def test_ir_validation(edit, fragment):
    text = (DATA_DIR / "zqp-demo.mqir").read_text()
    with pytest.raises((ParseError, MachineError), match=fragment):
        parse_ir(edit(text))


@settings(max_examples=20, deadline=None)
@given(st.text(alphabet="01", min_size=1, max_size=8))
def test_zqp_and_star_agree(x):
    z = replace(load_instance("zqp-demo.inst"), input=x)
    assert check(z).decision == check(zbqp_star_instance(z)).decision
