# third party
import numpy as np
import pytest
from scipy import stats as reference

# Continuum absolute
from continuum_sim.exceptions.exceptions import DegenerateSamples, DomainError, InsufficientSamples
from continuum_sim.stats import summarize, t_cdf, t_pdf, t_quantile, welch_t_test


def _cases(seed, n=100):
    rng = np.random.default_rng(seed)
    return zip(rng.uniform(-6.0, 6.0, n), rng.uniform(1.0, 200.0, n), rng.uniform(0.001, 0.999, n))


def test_t_cdf_matches_reference():
    for x, df, _ in _cases(0):
        assert t_cdf(x, df) == pytest.approx(reference.t.cdf(x, df), rel=1e-6)


def test_t_pdf_matches_reference():
    for x, df, _ in _cases(1):
        assert t_pdf(x, df) == pytest.approx(reference.t.pdf(x, df), rel=1e-6)


def test_t_quantile_matches_reference():
    for _, df, p in _cases(2):
        assert t_quantile(p, df) == pytest.approx(reference.t.ppf(p, df), rel=1e-6, abs=1e-9)


def test_t_quantile_inverts_t_cdf():
    for p in (0.01, 0.2, 0.5, 0.8, 0.975):
        assert t_cdf(t_quantile(p, 7.0), 7.0) == pytest.approx(p, rel=1e-9)
    assert t_quantile(0.975, 9) == pytest.approx(2.262157, rel=1e-6)
    assert t_cdf(0.0, 3.0) == pytest.approx(0.5)


@pytest.mark.parametrize("prob", [0.0, 1.0, -0.5])
def test_t_quantile_domain(prob):
    with pytest.raises(DomainError):
        t_quantile(prob, 5.0)


def test_non_positive_degrees_of_freedom():
    with pytest.raises(DomainError):
        t_cdf(1.0, 0.0)


def test_welch_matches_reference():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 3.0), rng.integers(2, 30))
        b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 3.0), rng.integers(2, 30))
        ours = welch_t_test(a, b)
        theirs = reference.ttest_ind(a, b, equal_var=False)
        assert ours.t_statistic == pytest.approx(theirs.statistic, rel=1e-6)
        assert ours.p_value == pytest.approx(theirs.pvalue, rel=1e-6, abs=1e-12)
        assert ours.method == "welch"


def test_welch_known_example():
    result = welch_t_test([1, 2, 3, 4, 5], [6, 7, 8, 9, 10], metric_id="latency_ms")
    assert result.t_statistic == pytest.approx(-5.0)
    assert result.degrees_of_freedom == pytest.approx(8.0)
    assert result.p_value == pytest.approx(0.001052, rel=1e-3)
    assert result.significant
    assert result.metric_id == "latency_ms"


def test_welch_degenerate_samples():
    with pytest.warns(DegenerateSamples):
        same = welch_t_test([2.0, 2.0, 2.0], [2.0, 2.0])
    assert same.degenerate and same.p_value == 1.0 and not same.significant
    with pytest.warns(DegenerateSamples):
        apart = welch_t_test([2.0, 2.0], [3.0, 3.0])
    assert apart.p_value == 0.0 and apart.significant


def test_welch_needs_two_samples():
    with pytest.raises(InsufficientSamples):
        welch_t_test([1.0], [1.0, 2.0])


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, 4.0, 5.0], metric_id="energy_wh_per_day")
    assert s.n == 5
    assert s.mean == pytest.approx(3.0)
    assert s.sample_std == pytest.approx(np.std([1, 2, 3, 4, 5], ddof=1))
    assert s.ci95_halfwidth == pytest.approx(reference.t.ppf(0.975, 4) * s.sample_std / np.sqrt(5))
    assert s.ci95 == pytest.approx((3.0 - s.ci95_halfwidth, 3.0 + s.ci95_halfwidth))
    with pytest.raises(InsufficientSamples):
        summarize([1.0])


def test_confidence_interval_coverage():
    rng = np.random.default_rng(17)
    trials = 4000
    covered = 0
    for _ in range(trials):
        s = summarize(rng.normal(10.0, 2.0, 10))
        low, high = s.ci95
        covered += low <= 10.0 <= high
    assert covered / trials == pytest.approx(0.95, abs=0.02)


def test_p_values_are_uniform_under_the_null():
    rng = np.random.default_rng(23)
    p = np.array([welch_t_test(rng.normal(0, 1, 10), rng.normal(0, 1, 12)).p_value for _ in range(2000)])
    assert np.mean(p < 0.05) == pytest.approx(0.05, abs=0.02)
    assert reference.kstest(p, "uniform").pvalue > 0.001
