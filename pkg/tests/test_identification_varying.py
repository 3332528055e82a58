import numpy as np
import pytest

from config.run_config import TuningConfig
from utils.distributions import ShiftedUniformValues, UniformValues
from utils.equilibrium import AuctionDesign
from utils.error_handler import DomainError, InconsistentDataError
from utils.identification import id_fp_vary_unknown, id_sp_vary_invalid_set, id_vary_known
from utils.identification.varying_population import activity_matrix, top_two_cells
from utils.simulator import InfoStructure, PopulationSpec, observe, simulate


def _observed(fmt, level, support, size, seed=0, dist=None, **info):
    batch = simulate(dist or UniformValues(), AuctionDesign(fmt, "reserve", level), PopulationSpec(support=support), size, seed=seed)
    return observe(batch, InfoStructure(**info))


def test_vary_known_second_price():
    ds3 = _observed("second_price", 0.5, ((3, 1.0),), 500_000, seed=1, drop_at_reserve=True)
    ds2 = _observed("second_price", 0.5, ((2, 1.0),), 500_000, seed=2, drop_at_reserve=True)
    result = id_vary_known(ds3, ds2, 3, 2)

    assert result.alpha_star.point == pytest.approx(0.5, abs=0.05)
    assert set(result.thresholds) == {3, 2}
    grid = np.arange(0.6, 0.95, 0.05)
    assert np.max(np.abs(result.value_at(grid) - grid)) < 0.05


def test_vary_known_first_price():
    ds3 = _observed("first_price", 0.5, ((3, 1.0),), 1_000_000, seed=3)
    ds2 = _observed("first_price", 0.5, ((2, 1.0),), 1_000_000, seed=4)
    result = id_vary_known(ds2, ds3, 2, 3)
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.1)
    assert "curvature_high" in result.diagnostics.extras


def test_vary_known_rejects_equal_sizes():
    ds = _observed("second_price", 0.5, ((2, 1.0),), 2_000)
    with pytest.raises(DomainError):
        id_vary_known(ds, ds, 2, 2)


def test_vary_known_rejects_mismatched_reserves():
    ds3 = _observed("second_price", 0.3, ((3, 1.0),), 50_000, seed=1, drop_at_reserve=True)
    ds2 = _observed("second_price", 0.6, ((2, 1.0),), 50_000, seed=2, drop_at_reserve=True)
    with pytest.raises(InconsistentDataError):
        id_vary_known(ds3, ds2, 3, 2)


def test_fp_vary_unknown_recovers_alpha():
    ds = _observed("first_price", 0.3, ((2, 0.5), (3, 0.5)), 500_000, observe_nobs=True)
    result = id_fp_vary_unknown(ds, TuningConfig(chain_rule_slope=True))
    assert result.n_recovered == 3
    assert result.alpha_star.point == pytest.approx(0.3, abs=0.05)
    assert 0.0 <= result.diagnostics.extras["p_hat"] <= 1.0


def test_top_two_cells_requires_two_sizes():
    ds = _observed("first_price", 0.0, ((2, 1.0),), 2_000, observe_nobs=True)
    with pytest.raises(InconsistentDataError):
        top_two_cells(ds)


def test_sp_vary_invalid_set_contains_truth():
    ds = _observed(
        "second_price",
        1.0 / 3.0,
        ((1, 0.4), (2, 0.6)),
        500_000,
        dist=ShiftedUniformValues(lo=0.25, hi=1.0),
        observe_nobs=True,
        observe_invalid_count=True,
    )
    result = id_sp_vary_invalid_set(ds)
    assert result.alpha_star.contains(1.0 / 3.0, tolerance=0.004 + 1e-12)
    assert result.v_band
    pmf = result.diagnostics.extras["population_pmf"]
    assert sum(pmf.values()) == pytest.approx(1.0, abs=0.05)


def test_sp_vary_invalid_set_rejects_first_price():
    ds = _observed("first_price", 0.5, ((2, 1.0),), 2_000, observe_nobs=True, observe_invalid_count=True)
    with pytest.raises(DomainError):
        id_sp_vary_invalid_set(ds)


def test_activity_matrix_columns_are_binomial():
    matrix = activity_matrix(0.4, 3)
    np.testing.assert_allclose(matrix.sum(axis=0), np.ones(4))
    np.testing.assert_allclose(activity_matrix(0.0, 2), np.eye(3))


def test_sp_vary_invalid_set_shrinks_with_sample_size():
    widths = {}
    for size in (10_000, 1_000_000):
        ds = _observed("second_price", 0.3, ((2, 0.5), (3, 0.5)), size, observe_nobs=True, observe_invalid_count=True)
        result = id_sp_vary_invalid_set(ds)
        widths[size] = result.alpha_star.width
    assert result.alpha_star.contains(0.3, tolerance=0.004 + 1e-12)
    assert widths[1_000_000] <= widths[10_000]
