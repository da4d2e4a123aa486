import numpy as np
import pytest

from signseg import TableStore


@pytest.fixture(scope="session")
def table_dir(tmp_path_factory):
    """Shared on-disk cache for full-size (B=50,000) null tables."""
    return tmp_path_factory.mktemp("tables")


@pytest.fixture(scope="session")
def big_store(table_dir):
    """Production-fidelity table store; simulation cost is paid once."""
    return TableStore(directory=table_dir, B=50_000)


@pytest.fixture(scope="session")
def fast_store(tmp_path_factory):
    """Small-B store for tests that need p-values but not tight quantiles.

    B=2000 keeps the smallest reachable p-value (1/2001) below the default
    segmentation threshold, so detection logic still exercises fully.
    """
    return TableStore(directory=tmp_path_factory.mktemp("fast_tables"), B=2000,
                      base_seed=9091)


@pytest.fixture
def shifted_series():
    """A 40x8 Gaussian sample with one strong mean shift after time 20."""
    rng = np.random.default_rng(11)
    x = rng.standard_normal((40, 8))
    x[20:] += 1.5
    return x
