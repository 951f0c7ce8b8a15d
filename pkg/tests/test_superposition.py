import itertools
import math

import numpy as np
import pytest
from scipy import sparse
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqtm.errors import ConsumedError, MbqtmError, PreconditionError
from mbqtm.superposition import Configuration, Superposition, condition, halting_time, marginal, run, step


def dense_evolution(m, word, steps, radius):
    """Brute-force oracle: explicit matrix over a finite tape window."""
    cells = range(-radius, radius + 1)
    tapes = list(itertools.product(m.alphabet, repeat=len(cells)))
    basis = [(q, h, t) for q in m.states for h in cells for t in tapes]
    index = {b: i for i, b in enumerate(basis)}
    rows, cols, vals = [], [], []
    shift = {"L": -1, "N": 0, "R": 1}
    for (q, h, t), i in index.items():
        if q == m.final:
            rows.append(i), cols.append(i), vals.append(1)
            continue
        sym = t[h + radius]
        for tr in m.column(q, sym):
            nh = h + shift[tr.move]
            if not (-radius <= nh <= radius):
                continue
            nt = t[: h + radius] + (tr.write,) + t[h + radius + 1:]
            rows.append(index[(tr.next_state, nh, nt)]), cols.append(i), vals.append(tr.amplitude.value)
    u = sparse.csr_matrix((vals, (rows, cols)), shape=(len(basis), len(basis)), dtype=complex)
    tape0 = tuple(word[c] if 0 <= c < len(word) else "#" for c in cells)
    v = np.zeros(len(basis), dtype=complex)
    v[index[(m.initial, 0, tape0)]] = 1
    for _ in range(steps):
        v = u @ v
    return {basis[i]: v[i] for i in np.flatnonzero(np.abs(v) > 1e-12)}


def as_dense(s, radius):
    out = {}
    for c, a in s.items():
        tape = tuple(c.symbol_at(i) for i in range(-radius, radius + 1))
        out[(c.state, c.head, tape)] = a
    return out


@pytest.mark.parametrize(
    "name, word, steps",
    [("hadamard.mqt", "0", 1), ("hadamard.mqt", "1", 2), ("parity.mqt", "110", 4),
     ("bqp-demo.mqt", "101", 3), ("zqp-coin.mqt", "", 3), ("identity.mqt", "01", 2)],
)
def test_matches_dense_oracle(machine, name, word, steps):
    m = machine(name)
    radius = max(len(word), steps)
    got = as_dense(run(m, word, steps), radius)
    want = dense_evolution(m, word, steps, radius)
    assert got.keys() == want.keys()
    for k in want:
        assert abs(got[k] - want[k]) < 1e-12


def test_hadamard_amplitudes(machine):
    s = run(machine("hadamard.mqt"), "1", 1)
    amps = {c.symbol_at(0): a for c, a in s.items()}
    assert amps["0"] == pytest.approx(2**-0.5)
    assert amps["1"] == pytest.approx(-(2**-0.5))


@given(st.text(alphabet="01", min_size=0, max_size=10))
@settings(max_examples=60, deadline=None)
def test_parity_writes_classical_parity(word):
    from mbqtm.machine import load_machine
    from mbqtm.resources import DATA_DIR

    m = load_machine(DATA_DIR / "parity.mqt")
    s = run(m, word, len(word) + 1)
    assert len(s) == 1
    (c, a), = s.items()
    assert c.state == m.final and abs(a) == pytest.approx(1)
    assert c.symbol_at(len(word)) == str(word.count("1") % 2)
    assert halting_time(m, word) == len(word) + 1


def test_norm_preserved_and_final_frozen(machine):
    m = machine("bqp-demo.mqt")
    s = run(m, "101", 3)
    assert s.norm_squared() == pytest.approx(1, abs=1e-12)
    later = run(m, "101", 10)
    assert later.is_close(s)


def test_marginal_and_condition(machine):
    s = run(machine("bqp-demo.mqt"), "101", 3)
    marg = marginal(s, -1)
    assert marg["1"] == pytest.approx(0.75)
    post = condition(s, -1, "1")
    assert post.norm_squared() == pytest.approx(1)
    assert marginal(post, -1)["1"] == pytest.approx(1)


def test_condition_on_impossible_symbol(machine):
    s = run(machine("parity.mqt"), "11", 3)
    with pytest.raises(PreconditionError):
        condition(s, 2, "1")


def test_consumed_state_refuses_use():
    s = Superposition.basis(Configuration.make("q0", 0, {}))
    s.mark_consumed()
    with pytest.raises(ConsumedError):
        s.require_live()


def test_bad_input_symbol(machine):
    with pytest.raises(PreconditionError):
        run(machine("parity.mqt"), "012", 1)


def test_negative_steps(machine):
    with pytest.raises(PreconditionError):
        run(machine("parity.mqt"), "0", -1)


def test_nonhalting_machine_reports(machine):
    m = machine("parity.mqt")
    with pytest.raises(MbqtmError):
        halting_time(m, "1111", max_steps=2)


def test_configuration_canonical_form():
    a = Configuration.make("q", 1, {0: "1", 3: "#", -2: "0"})
    b = Configuration.make("q", 1, {-2: "0", 0: "1"})
    assert a == b and hash(a) == hash(b)
    assert a.symbol_at(3) == "#"


def test_step_is_linear(machine):
    m = machine("hadamard.mqt")
    c0 = Configuration.initial(m, "0")
    c1 = Configuration.initial(m, "1")
    mix = Superposition({c0: 0.6, c1: 0.8j})
    out = step(m, mix)
    a, b = step(m, Superposition.basis(c0)), step(m, Superposition.basis(c1))
    for c, amp in out.items():
        assert amp == pytest.approx(0.6 * a.amplitude(c) + 0.8j * b.amplitude(c))
    assert math.isclose(out.norm_squared(), 1.0, rel_tol=1e-12)
