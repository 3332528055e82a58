import pytest

from config.constants import CONCLUSION_TABLE, TABLE_COLUMNS, TABLE_ROWS
from config.run_config import AssumptionsConfig, TuningConfig
from utils.distributions import UniformValues
from utils.equilibrium import AuctionDesign
from utils.error_handler import ConfigError, NotIdentifiedError
from utils.identification import classify_information, lookup_estimator, run_estimator
from utils.simulator import InfoStructure, PopulationSpec, observe, simulate


def _observed(fmt="second_price", truncation="reserve", level=0.5, size=20_000, **info):
    batch = simulate(UniformValues(), AuctionDesign(fmt, truncation, level), PopulationSpec.fixed(2), size, seed=7)
    return observe(batch, InfoStructure(**info))


def test_table_covers_every_cell():
    assert len(CONCLUSION_TABLE) == len(TABLE_ROWS) * len(TABLE_COLUMNS)
    unidentified = {key for key, (status, _) in CONCLUSION_TABLE.items() if status == "none"}
    assert unidentified == {
        ("fixed_known_price", "first_price", "reserve"),
        ("fixed_known_price", "first_price", "entry_cost"),
        ("varying_unknown_nobs", "second_price", "reserve"),
    }


@pytest.mark.parametrize(
    "info, assumptions, expected",
    [
        ({}, {"known_n": [2]}, "fixed_known_price"),
        ({"observe_invalid_count": True}, {"known_n": [2]}, "fixed_known_invalid"),
        ({"observe_nobs": True}, {}, "fixed_unknown_nobs"),
        ({"observe_nobs": True}, {"varying_n": True}, "varying_unknown_nobs"),
        ({"observe_nobs": True, "observe_invalid_count": True}, {"varying_n": True}, "varying_unknown_nobs_invalid"),
    ],
)
def test_classify_information(info, assumptions, expected):
    ds = _observed(size=500, **info)
    assert classify_information([ds], AssumptionsConfig(**assumptions)) == expected


def test_classify_two_datasets_needs_two_sizes():
    ds = _observed(size=500)
    assert classify_information([ds, ds], AssumptionsConfig(known_n=[3, 2])) == "varying_known_above"
    with pytest.raises(ConfigError):
        classify_information([ds, ds], AssumptionsConfig(known_n=[3]))


def test_classify_without_any_count_information():
    with pytest.raises(NotIdentifiedError):
        classify_information([_observed(size=500)], AssumptionsConfig())


def test_lookup_estimator():
    assert lookup_estimator("fixed_known_price", "second_price", "reserve") == ("point", "sp_fixed_price_only")
    assert lookup_estimator("varying_unknown_nobs_invalid", "second_price", "reserve") == ("set", "sp_vary_invalid_set")
    with pytest.raises(NotIdentifiedError):
        lookup_estimator("fixed_known_price", "first_price", "reserve")
    with pytest.raises(NotIdentifiedError):
        lookup_estimator("varying_unknown_nobs", "second_price", "reserve")
    with pytest.raises(ConfigError):
        lookup_estimator("nonexistent", "second_price", "reserve")


def test_auto_routes_to_table_estimator():
    result = run_estimator("auto", [_observed()], AssumptionsConfig(known_n=[2]))
    assert result.estimator == "sp_fixed_price_only"
    assert result.alpha_star.point == pytest.approx(0.5, abs=0.02)


def test_auto_refuses_first_price_with_prices_only():
    with pytest.raises(NotIdentifiedError):
        run_estimator("auto", [_observed("first_price")], AssumptionsConfig(known_n=[2]))


def test_explicit_estimator_needs_known_sizes():
    with pytest.raises(ConfigError):
        run_estimator("sp_fixed_price_only", [_observed()], AssumptionsConfig())
    with pytest.raises(ConfigError):
        run_estimator("no_such_estimator", [_observed()], AssumptionsConfig(known_n=[2]))


def test_jackknife_standard_error():
    ds = _observed(observe_nobs=True)
    result = run_estimator("fixed_nobs", [ds], tuning=TuningConfig(jackknife=True, jackknife_folds=5))
    spread = result.diagnostics.standard_errors["alpha_star"]
    assert 0.0 < spread < 0.05
