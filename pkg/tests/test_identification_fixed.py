import numpy as np
import pytest

from config.run_config import TuningConfig
from utils.distributions import UniformValues
from utils.equilibrium import AuctionDesign
from utils.error_handler import ConfigError, NotIdentifiedError
from utils.identification import id_entry_fixed, id_fixed_nobs, id_fp_fixed_invalid, id_sp_fixed_price_only
from utils.simulator import InfoStructure, PopulationSpec, observe, simulate


CHAIN = TuningConfig(chain_rule_slope=True)
CHECK_GRID = np.arange(0.6, 0.95, 0.05)


def _observed(fmt, truncation, level, n=2, size=200_000, seed=0, **info):
    batch = simulate(UniformValues(), AuctionDesign(fmt, truncation, level), PopulationSpec.fixed(n), size, seed=seed)
    return observe(batch, InfoStructure(**info))


def _value_error(result):
    return float(np.max(np.abs(result.value_at(CHECK_GRID) - CHECK_GRID)))


def test_sp_fixed_price_only_recovers_reserve_quantile():
    result = id_sp_fixed_price_only(_observed("second_price", "reserve", 0.5), 2)
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.01)
    assert result.diagnostics.extras["reserve_price"] == pytest.approx(0.5)
    assert _value_error(result) < 0.03


def test_sp_fixed_price_only_with_three_bidders():
    result = id_sp_fixed_price_only(_observed("second_price", "reserve", 0.5, n=3), 3)
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.01)


def test_sp_fixed_price_only_nonbinding_reserve():
    result = id_sp_fixed_price_only(_observed("second_price", "reserve", 0.0, size=20_000), 2)
    assert result.alpha_star.point == 0.0
    assert any("不具約束力" in w for w in result.diagnostics.warnings)


def test_sp_fixed_price_only_rejects_first_price():
    with pytest.raises(ConfigError):
        id_sp_fixed_price_only(_observed("first_price", "reserve", 0.5, size=1_000), 2)


def test_fp_fixed_invalid_and_slope_variants():
    ds = _observed("first_price", "reserve", 0.5, observe_invalid_count=True)
    chain = id_fp_fixed_invalid(ds, 2, CHAIN)
    printed = id_fp_fixed_invalid(ds, 2)

    assert chain.alpha_star.point == pytest.approx(0.5, abs=0.01)
    assert printed.alpha_star.point == chain.alpha_star.point
    assert _value_error(chain) < 0.05
    assert chain.diagnostics.extras["slope_variant"] == "chain_rule"
    assert printed.diagnostics.extras["slope_variant"] == "printed"
    assert printed.diagnostics.residuals["slope_variant_gap"] > 0.05


def test_fixed_nobs_recovers_n_and_alpha():
    result = id_fixed_nobs(_observed("second_price", "reserve", 0.5, n=3, observe_nobs=True))
    assert result.n_recovered == 3
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.01)
    assert result.entry_cost is None


def test_fixed_nobs_first_price_entry_cost():
    ds = _observed("first_price", "entry_cost", 0.25, observe_nobs=True)
    result = id_fixed_nobs(ds, CHAIN)
    assert result.n_recovered == 2
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.01)
    assert result.entry_cost == pytest.approx(0.25, abs=0.03)


def test_entry_fixed_second_price():
    result = id_entry_fixed(_observed("second_price", "entry_cost", 0.25), 2)
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.01)
    assert result.entry_cost == pytest.approx(0.25, abs=0.02)
    assert result.diagnostics.extras["zero_price_share"] == pytest.approx(2 / 3, abs=0.01)


def test_entry_fixed_first_price_needs_invalid_count():
    with pytest.raises(NotIdentifiedError):
        id_entry_fixed(_observed("first_price", "entry_cost", 0.25, size=5_000), 2)

    ds = _observed("first_price", "entry_cost", 0.25, observe_invalid_count=True)
    result = id_entry_fixed(ds, 2, CHAIN)
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.01)
    assert result.entry_cost == pytest.approx(0.25, abs=0.03)
