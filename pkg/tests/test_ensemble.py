import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mbqtm.ensemble import (
    EnsembleConfig,
    empirical_error_rate,
    ensemble_counts,
    ensemble_from_marginal,
    ensemble_measure,
    mc_sigma,
    partition_sizes,
    realize_mbqtm,
)
from mbqtm.errors import PreconditionError
from mbqtm.measurement import QubitMarginal
from mbqtm.statistics import binomial_error_probability


@given(st.integers(1, 10_000), st.integers(1, 64))
def test_partition_sizes(n, parts):
    if parts > n:
        return
    sizes = partition_sizes(n, parts)
    assert sum(sizes) == n and len(sizes) == parts
    assert max(sizes) - min(sizes) <= 1


@pytest.mark.parametrize("kwargs", [dict(n=0, seed=1), dict(n=4, seed=1, partitions=5), dict(n=4, seed=-1)])
def test_config_validation(kwargs):
    with pytest.raises(PreconditionError):
        EnsembleConfig(**kwargs)


def test_report_is_reproducible(machine):
    m = machine("hadamard.mqt")
    cfg = EnsembleConfig(1024, 42, partitions=4)
    a = ensemble_measure(m, "0", 1, 0, cfg, theta=2**-5)
    b = ensemble_measure(m, "0", 1, 0, cfg, theta=2**-5)
    assert a == b
    assert a.count_plus + a.count_minus == 1024
    assert a.average == (2 * a.count_plus - 1024) / 1024


def test_partitioning_changes_streams_not_law():
    q = QubitMarginal.from_p1(0.3)
    c1 = ensemble_counts(q.p1, EnsembleConfig(200, 5, 1), repetitions=20_000)
    c8 = ensemble_counts(q.p1, EnsembleConfig(200, 5, 8), repetitions=20_000)
    assert stats.ks_2samp(c1, c8).pvalue > 1e-3


@given(st.sampled_from([0.0, 1.0]), st.integers(1, 500), st.integers(0, 2**32))
def test_eigenstate_ensembles_are_exact(p1, n, seed):
    rep = ensemble_from_marginal(QubitMarginal.from_p1(p1), EnsembleConfig(n, seed), theta=0.01)
    assert rep.average == (1.0 if p1 == 1.0 else -1.0)
    assert rep.within_theta


def test_fast_path_matches_binomial_pmf():
    counts = ensemble_counts(0.5, EnsembleConfig(4, 123), repetitions=200_000)
    freq = np.bincount(counts, minlength=5)
    expected = stats.binom.pmf(np.arange(5), 4, 0.5) * counts.size
    assert stats.chisquare(freq, expected).pvalue > 1e-3


def _pooled(observed, expected, min_expected=5.0):
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs.append(acc_o), exp.append(acc_e)
            acc_o = acc_e = 0.0
    obs[-1] += acc_o
    exp[-1] += acc_e
    return np.array(obs), np.array(exp)


@pytest.mark.slow
def test_slow_path_agrees_with_binomial(machine):
    m = machine("bqp-demo.mqt")
    n, reps = 64, 1000
    slow = [ensemble_measure(m, "101", 3, -1, EnsembleConfig(n, seed), slow_path=True).count_plus
            for seed in range(reps)]
    fast = ensemble_counts(0.75, EnsembleConfig(n, 10_000), repetitions=reps)
    pmf = stats.binom.pmf(np.arange(n + 1), n, 0.75) * reps
    for sample in (slow, fast):
        obs, exp = _pooled(np.bincount(sample, minlength=n + 1), pmf)
        assert stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 0.001


def test_slow_path_report(machine):
    rep = ensemble_measure(machine("hadamard.mqt"), "0", 1, 0, EnsembleConfig(32, 1), slow_path=True)
    assert rep.path == "members" and rep.n == 32


def test_error_rate_matches_exact_tail():
    for n in (256, 1024):
        rate = empirical_error_rate(0.5, n, 2**-5, trials=50_000, seed=3)
        exact = binomial_error_probability(0.5, n, 2**-5)
        assert abs(rate - exact) < 5 * mc_sigma(exact, 50_000)


def test_error_rate_plusminus_scale():
    rate = empirical_error_rate(0.5, 1024, 2**-5, scale="plusminus", trials=50_000, seed=4)
    exact = binomial_error_probability(0.5, 1024, 2**-5, scale="plusminus")
    assert abs(rate - exact) < 5 * mc_sigma(exact, 50_000)


@given(st.floats(0.05, 0.95), st.integers(10, 2000), st.floats(0.01, 0.2))
@settings(max_examples=25, deadline=None)
def test_error_rate_property(p1, n, theta):
    rate = empirical_error_rate(p1, n, theta, trials=4000, seed=9)
    exact = binomial_error_probability(p1, n, theta)
    assert abs(rate - exact) < 6 * mc_sigma(exact, 4000)


def test_realize_mbqtm():
    assert realize_mbqtm(2**-5, 0.0455) == 1024
