from .ttest import (  # noqa: F401
    SummaryStatistics,
    TTestResult,
    summarize,
    t_cdf,
    t_pdf,
    t_quantile,
    welch_t_test,
)
