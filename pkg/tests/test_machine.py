import pytest

from mbqtm.errors import MachineError, ParseError
from mbqtm.machine import complete_machine, entry_directions, format_machine, load_machine, parse_machine
from mbqtm.resources import DATA_DIR
from mbqtm.wellformed import validate_wellformed

BUNDLED = ["hadamard.mqt", "identity.mqt", "parity.mqt", "bqp-demo.mqt", "zqp-coin.mqt"]

HEADER = "machine t\nalphabet # 0 1\nstates q0 qf\ninitial q0\nfinal qf\ndirections LNR\n"


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip(name):
    m = load_machine(DATA_DIR / name)
    again = parse_machine(format_machine(m))
    assert again == m
    assert format_machine(again) == format_machine(m)


def test_hadamard_shape(machine):
    m = machine("hadamard.mqt")
    assert m.initial == "q0" and m.final == "qf"
    assert len(m.column("q0", "0")) == 2
    assert m.column("q0", "1")[1].amplitude.value == pytest.approx(-(2**-0.5))
    assert m.entry_count == 5


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("rule q0 0 1 0 qf N\n", "->"),
        ("rule q0 2 -> 1 0 qf N\n", "undeclared symbol"),
        ("rule q0 0 -> 1 0 qx N\n", "undeclared state"),
        ("rule q0 0 -> 1/0 0 qf N\n", "amplitude"),
        ("rule q0 0 -> 1 0 qf X\n", "direction"),
        ("bogus line\n", "unknown directive"),
    ],
)
def test_parse_errors_name_the_line(body, fragment):
    with pytest.raises(ParseError) as info:
        parse_machine(HEADER + body)
    assert fragment in str(info.value)
    assert info.value.line == 7


def test_missing_header():
    with pytest.raises(ParseError):
        parse_machine("machine t\nalphabet # 0\n")


def test_blank_required():
    with pytest.raises((ParseError, MachineError)):
        parse_machine(HEADER.replace("# 0 1", "0 1") + "rule q0 0 -> 1 0 qf N\n")


def test_entry_directions_conflict():
    text = (
        "machine t\nalphabet # 0 1\nstates q0 a qf\ninitial q0\nfinal qf\ndirections LNR\n"
        "rule q0 0 -> 1 0 a L\nrule q0 1 -> 1 1 a R\n"
    )
    with pytest.raises(MachineError, match="entered moving both"):
        entry_directions(parse_machine(text))


def test_completion_gives_wellformed_machine():
    text = (
        "machine t\nalphabet # 0 1\nstates q0 a qf\ninitial q0\nfinal qf\ndirections LNR\n"
        "rule q0 0 -> 1 1 a R\nrule a 1 -> 1 0 qf N\n"
    )
    m = parse_machine(text)
    assert not validate_wellformed(m).passed
    full = complete_machine(m)
    assert validate_wellformed(full).passed
    for col in m.delta:
        assert full.delta[col] == m.delta[col]
    assert len(full.delta) == len(full.active_states) * len(full.alphabet)
