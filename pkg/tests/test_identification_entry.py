import numpy as np
import pytest

from config.run_config import TuningConfig
from utils.distributions import UniformValues
from utils.equilibrium import AuctionDesign
from utils.error_handler import DomainError, NotIdentifiedError
from utils.identification import id_entry_vary_known_set, id_entry_vary_unknown
from utils.simulator import InfoStructure, PopulationSpec, observe, simulate


def _observed(fmt, cost, support, size, seed=0, **info):
    batch = simulate(UniformValues(), AuctionDesign(fmt, "entry_cost", cost), PopulationSpec(support=support), size, seed=seed)
    return observe(batch, InfoStructure(**info))


def _closest(region, target):
    points = np.asarray(region)
    return float(np.min(np.max(np.abs(points - np.asarray(target)), axis=1)))


def test_entry_vary_known_set_second_price_contains_truth():
    ds3 = _observed("second_price", 0.25, ((3, 1.0),), 200_000, seed=1)
    ds2 = _observed("second_price", 0.25, ((2, 1.0),), 200_000, seed=2)
    result = id_entry_vary_known_set(ds3, ds2, 3, 2)

    truth = (0.25 ** (1 / 3), 0.5)
    assert _closest(result.region, truth) <= 0.02
    low, high = result.entry_cost_band
    assert low - 0.05 <= 0.25 <= high + 0.05
    assert set(result.thresholds) == {3, 2}


def test_entry_vary_known_set_orders_region_like_inputs():
    ds3 = _observed("second_price", 0.25, ((3, 1.0),), 100_000, seed=3)
    ds2 = _observed("second_price", 0.25, ((2, 1.0),), 100_000, seed=4)
    flipped = id_entry_vary_known_set(ds2, ds3, 2, 3)
    assert _closest(flipped.region, (0.5, 0.25 ** (1 / 3))) <= 0.02


def test_entry_vary_known_set_rejects_equal_sizes():
    ds = _observed("second_price", 0.25, ((2, 1.0),), 2_000)
    with pytest.raises(DomainError):
        id_entry_vary_known_set(ds, ds, 2, 2)


def test_entry_vary_unknown_first_price_point():
    ds = _observed("first_price", 0.2, ((2, 0.5), (3, 0.5)), 500_000, observe_nobs=True)
    result = id_entry_vary_unknown(ds, TuningConfig(chain_rule_slope=True))
    assert result.n_recovered == 3
    assert result.alpha_star.point == pytest.approx(0.2 ** (1 / 3), abs=0.05)
    assert result.entry_cost == pytest.approx(0.2, abs=0.05)


def test_entry_vary_unknown_second_price_region():
    ds = _observed("second_price", 0.2, ((2, 0.5), (3, 0.5)), 300_000, observe_nobs=True)
    result = id_entry_vary_unknown(ds)
    assert result.n_recovered == 3
    assert _closest(result.region, (0.2 ** (1 / 3), 0.2 ** 0.5)) <= 0.02


def test_entry_vary_unknown_second_price_needs_three_bidders():
    ds = _observed("second_price", 0.2, ((1, 0.5), (2, 0.5)), 5_000, observe_nobs=True)
    with pytest.raises(NotIdentifiedError):
        id_entry_vary_unknown(ds)


def test_entry_vary_known_set_shrinks_with_sample_size():
    sizes = {}
    for size in (10_000, 1_000_000):
        ds3 = _observed("second_price", 0.25, ((3, 1.0),), size, seed=0)
        ds2 = _observed("second_price", 0.25, ((2, 1.0),), size, seed=1)
        sizes[size] = len(id_entry_vary_known_set(ds3, ds2, 3, 2).region)
    assert 0 < sizes[1_000_000] <= sizes[10_000]
