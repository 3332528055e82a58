import pytest
from pydantic import ValidationError

from config.run_config import DesignConfig, PopulationConfig, RunConfig


def test_defaults_and_json_round_trip(tmp_path):
    config = RunConfig()
    assert config.design.alpha0 == 0.5
    assert config.estimator == "auto"

    path = tmp_path / "run.json"
    path.write_text(config.to_json(), encoding="utf-8")
    assert RunConfig.from_json(path) == config


def test_overrides_take_precedence():
    config = RunConfig().with_overrides(seed=9, L_total=500, known_n=[3, 2], grid_step=0.01, chain_rule_slope=True)
    assert config.seed == 9
    assert config.L_total == 500
    assert config.assumptions.known_n == [3, 2]
    assert config.tuning.grid_step_1d == 0.01
    assert config.tuning.grid_step_2d == 0.01
    assert config.tuning.chain_rule_slope


def test_output_dir_from_env(monkeypatch, tmp_path):
    monkeypatch.setenv("AUCTION_OUTPUT_DIR", str(tmp_path))
    assert RunConfig().output.out_dir == str(tmp_path)


def test_design_validation():
    with pytest.raises(ValidationError):
        DesignConfig(truncation="reserve")
    with pytest.raises(ValidationError):
        DesignConfig(truncation="reserve", alpha0=1.0)
    with pytest.raises(ValidationError):
        DesignConfig(truncation="entry_cost")
    assert DesignConfig(truncation="reserve", optimal_screening=True).alpha0 is None


def test_population_must_be_a_pmf():
    with pytest.raises(ValidationError):
        PopulationConfig(support=[(2, 0.5), (3, 0.4)])
    with pytest.raises(ValidationError):
        PopulationConfig(support=[(0, 1.0)])


def test_estimator_requirements():
    with pytest.raises(ValidationError):
        RunConfig(estimator="fp_fixed_invalid", assumptions={"known_n": [2]})
    with pytest.raises(ValidationError):
        RunConfig(estimator="vary_known", assumptions={"known_n": [2]})
    with pytest.raises(ValidationError):
        RunConfig(estimator="made_up")
    config = RunConfig(estimator="sp_vary_invalid_set", info={"observe_nobs": True, "observe_invalid_count": True})
    assert config.estimator == "sp_vary_invalid_set"


def test_numbered_estimator_aliases():
    assert RunConfig(estimator="prop1", assumptions={"known_n": [2]}).estimator == "sp_fixed_price_only"
    config = RunConfig(estimator="prop8", info={"observe_nobs": True})
    assert config.estimator == "fixed_nobs"
    assert RunConfig().with_overrides(estimator="prop4", known_n=[3, 2]).estimator == "vary_known"
