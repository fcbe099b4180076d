# stdlib
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

# third party
import numpy as np
from scipy.special import betainc, betaincinv, gammaln

# Continuum absolute
from continuum_sim.exceptions.exceptions import DegenerateSamples, DomainError, InsufficientSamples

SIGNIFICANCE_LEVEL = 0.05
NEWTON_STEPS = 4


@dataclass(frozen=True)
class SummaryStatistics:
    n: int
    mean: float
    sample_std: float
    ci95_halfwidth: Optional[float]
    metric_id: str = ""

    @property
    def ci95(self):
        if self.ci95_halfwidth is None:
            return None
        return (self.mean - self.ci95_halfwidth, self.mean + self.ci95_halfwidth)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    significant: bool
    degenerate: bool = False
    method: str = "welch"
    metric_id: str = ""


def _check_df(function_name: str, df: float) -> None:
    if not df > 0 or math.isnan(df):
        raise DomainError(function_name, f"degrees of freedom must be > 0, got {df!r}.")


def t_pdf(x: float, df: float) -> float:
    _check_df("t_pdf", df)
    log_density = (
        gammaln((df + 1.0) / 2.0)
        - gammaln(df / 2.0)
        - 0.5 * math.log(df * math.pi)
        - (df + 1.0) / 2.0 * math.log1p(x * x / df)
    )
    return math.exp(log_density)


def t_cdf(x: float, df: float) -> float:
    """Student's t CDF through the regularized incomplete beta function."""
    _check_df("t_cdf", df)
    if math.isnan(x):
        raise DomainError("t_cdf", "x is NaN.")
    if x == 0:
        return 0.5
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + x * x)))
    return 1.0 - tail if x > 0 else tail


def t_quantile(prob: float, df: float) -> float:
    """
    Inverse of t_cdf. The incomplete beta inverse gives the starting point, which Newton
    steps on the density then refine.
    """
    _check_df("t_quantile", df)
    if not 0.0 < prob < 1.0:
        raise DomainError("t_quantile", f"probability must lie in (0, 1), got {prob!r}.")
    if prob == 0.5:
        return 0.0
    sign = 1.0 if prob > 0.5 else -1.0
    z = float(betaincinv(df / 2.0, 0.5, 2.0 * min(prob, 1.0 - prob)))
    x = sign * math.sqrt(df * (1.0 / z - 1.0)) if z > 0 else sign * math.inf
    for _ in range(NEWTON_STEPS):
        if not math.isfinite(x):
            break
        density = t_pdf(x, df)
        if density <= 0:
            break
        step = (t_cdf(x, df) - prob) / density
        x -= step
        if abs(step) <= 1e-14 * max(1.0, abs(x)):
            break
    return x


def summarize(samples: Sequence[float], metric_id: str = "") -> SummaryStatistics:
    """
    Mean, sample standard deviation and the 95% confidence half-width from Student's t.

    Args:
        samples (Sequence[float]): One value per run.
        metric_id (str): Name carried into the result.
    """
    values = np.asarray(samples, dtype=float)
    n = len(values)
    if n < 2:
        raise InsufficientSamples(n, 2)
    std = float(values.std(ddof=1))
    half = t_quantile(0.975, n - 1) * std / math.sqrt(n)
    return SummaryStatistics(n=n, mean=float(values.mean()), sample_std=std, ci95_halfwidth=half, metric_id=metric_id)


def welch_t_test(a: Sequence[float], b: Sequence[float], metric_id: str = "") -> TTestResult:
    """
    Two-sided Welch (unequal variance) t-test with Welch-Satterthwaite degrees of freedom.

    When both samples have zero variance the test is degenerate: p is 1 if the means are
    equal and 0 otherwise, and a DegenerateSamples warning is issued.
    """
    x, y = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    for sample in (x, y):
        if len(sample) < 2:
            raise InsufficientSamples(len(sample), 2)
    nx, ny = len(x), len(y)
    vx, vy = float(x.var(ddof=1)) / nx, float(y.var(ddof=1)) / ny
    diff = float(x.mean()) - float(y.mean())
    se2 = vx + vy

    if se2 == 0:
        warnings.warn(DegenerateSamples(f"Both samples of {metric_id or 'the t-test'} have zero variance."))
        if diff == 0:
            return TTestResult(0.0, float(nx + ny - 2), 1.0, False, degenerate=True, metric_id=metric_id)
        return TTestResult(math.copysign(math.inf, diff), float(nx + ny - 2), 0.0, True, degenerate=True, metric_id=metric_id)

    t = diff / math.sqrt(se2)
    df = se2 * se2 / (vx * vx / (nx - 1) + vy * vy / (ny - 1))
    p = min(1.0, max(0.0, 2.0 * t_cdf(-abs(t), df)))
    return TTestResult(t, df, p, p < SIGNIFICANCE_LEVEL, metric_id=metric_id)
