import pytest

from config.constants import TABLE_COLUMNS, TABLE_ROWS
from config.run_config import TuningConfig
from utils.error_handler import ConfigError
from utils.identification import run_estimator
from utils.verification import SuiteReport, cell_scenario, matrix_frame, roundtrip_cases, run_suite, score_result


def test_optimal_screening_suite_passes():
    report = run_suite("lemma1")
    assert report.passed, [e["name"] for e in report.entries if e.get("passed") is False]
    assert report.to_dict()["failures"] == 0
    # 第一價格、風險趨避的賣方，最適篩選水準會隨 N 改變
    assert any("crra" in name and "first_price" in name for name in report.summary["n_dependent_first_price_risk_averse"])


def test_unknown_suite():
    with pytest.raises(ConfigError):
        run_suite("everything")
    with pytest.raises(ConfigError):
        cell_scenario("no_such_row", "first_price", "reserve")


def test_cell_scenarios_cover_table():
    for row in TABLE_ROWS:
        for fmt, truncation in TABLE_COLUMNS:
            scenario = cell_scenario(row, fmt, truncation)
            assert scenario.fmt == fmt
            assert scenario.truncation == truncation

    entry = cell_scenario("varying_unknown_nobs", "first_price", "entry_cost")
    assert entry.top_size == 3
    assert entry.thresholds()[3] > entry.thresholds()[2]
    assert len(cell_scenario("varying_known_above", "second_price", "reserve").populations) == 2
    # 三個無法識別的格子不做往返
    assert len(roundtrip_cases()) == len(TABLE_ROWS) * len(TABLE_COLUMNS) - 3 + 2


def test_score_result_point_case():
    scenario = cell_scenario("fixed_known_price", "second_price", "reserve")
    datasets = scenario.simulate(100_000, seed=0)
    tuning = TuningConfig()
    result = run_estimator("sp_fixed_price_only", datasets, scenario.assumptions, tuning)
    scored = score_result(scenario, "sp_fixed_price_only", result, tuning)
    assert scored["kind"] == "point"
    assert scored["passed"]
    assert scored["alpha_error"] <= 0.01


def test_matrix_frame_shape():
    report = SuiteReport(suite="table", size=None, seed=0, summary={"matrix": {"fixed_known_price": {"second_price/reserve": "✓"}}})
    frame = matrix_frame(report)
    assert frame.shape == (len(TABLE_ROWS), len(TABLE_COLUMNS))
    assert frame.loc["fixed_known_price", "second_price/reserve"] == "✓"


def _failed(report):
    return [e["name"] for e in report.entries if e.get("passed") is False]


def test_counterexample_suite_passes():
    report = run_suite("counterexamples")
    assert report.passed, _failed(report)
    twins = [e for e in report.entries if e["name"].startswith("fp_twin:reserve:alpha2")]
    assert len(twins) == 3
    assert all(e["ks"] <= 0.01 and e["value_gap"] > 0.05 for e in twins)


def test_roundtrip_suite_passes():
    report = run_suite("roundtrip")
    assert report.passed, _failed(report)
    assert any(e.get("kind") == "set" for e in report.entries)


def test_table_suite_passes():
    report = run_suite("table")
    assert report.passed, _failed(report)
    outcomes = [cell for row in report.summary["matrix"].values() for cell in row.values()]
    assert outcomes.count("×") == 3
