from pulse_iv.inference.acceptance import (
    Scaling,
    TestConfig,
    TestResult,
    ar_accepts,
    ar_statistic,
    chi2_quantile,
    test_statistic,
)
from pulse_iv.inference.weak_instruments import WeakInstrumentReport, weak_instrument_stat
