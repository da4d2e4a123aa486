"""Robust change-point detection for high-dimensional time series.

The test statistic compares spatial signs of pairwise differences across a
candidate split and self-normalizes with recursive subsample statistics, so
no tail moments or nuisance covariances are ever estimated. Calibration uses
a simulated dimension-free limit law for the exact series length at hand, and
multiple change points come from a recursive search over seeded intervals.

Quick start::

    import numpy as np
    from signseg import SnChangePointTest, SbsSegmenter

    x = np.random.default_rng(7).standard_normal((100, 200))
    x[50:] += 0.3
    print(SnChangePointTest().fit(x).pvalue_)
    print(SbsSegmenter().fit_predict(x))
"""
from ._validation import DomainError, IntervalTooShort, as_data_matrix
from .data import (
    EmptyInput,
    OrientationWarning,
    ParseError,
    RandomStream,
    SegmentTriple,
    load_csv,
    loads_csv,
    save_csv,
    transpose_guard,
)
from .intervals import SeededIntervalSet, seeded_intervals
from .kernels import (
    MeanStatTable,
    PairwiseSignCache,
    d_mean,
    d_mean_oracle,
    d_sign_fast,
    d_sign_oracle,
    spatial_sign,
)
from .limit import (
    FormatError,
    NoncentralShift,
    QuantileTable,
    TableStore,
    VersionError,
    load_table,
    p_value,
    save_table,
    simulate_limit,
)
from .segmenter import (
    ChangePointResult,
    Detection,
    SbsSegmenter,
    SegmenterConfig,
    segment,
)
from .simlab import (
    DgpConfig,
    ExperimentReport,
    HillEstimate,
    ari,
    dense_shift,
    draw_dgp,
    hill,
    mse_mhat,
    segmentation_experiment,
    single_change_config,
    size_power_experiment,
    sparse_shift,
    three_change_config,
)
from .statistics import (
    SnChangePointTest,
    SnStatResult,
    self_normalizer,
    sn_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "IntervalTooShort",
    "as_data_matrix",
    "ParseError",
    "EmptyInput",
    "OrientationWarning",
    "RandomStream",
    "SegmentTriple",
    "load_csv",
    "loads_csv",
    "save_csv",
    "transpose_guard",
    "spatial_sign",
    "PairwiseSignCache",
    "MeanStatTable",
    "d_sign_oracle",
    "d_sign_fast",
    "d_mean",
    "d_mean_oracle",
    "sn_statistic",
    "self_normalizer",
    "SnStatResult",
    "SnChangePointTest",
    "simulate_limit",
    "QuantileTable",
    "NoncentralShift",
    "p_value",
    "save_table",
    "load_table",
    "TableStore",
    "FormatError",
    "VersionError",
    "seeded_intervals",
    "SeededIntervalSet",
    "segment",
    "SegmenterConfig",
    "ChangePointResult",
    "Detection",
    "SbsSegmenter",
    "DgpConfig",
    "draw_dgp",
    "dense_shift",
    "sparse_shift",
    "single_change_config",
    "three_change_config",
    "size_power_experiment",
    "segmentation_experiment",
    "ExperimentReport",
    "ari",
    "mse_mhat",
    "hill",
    "HillEstimate",
    "__version__",
]
