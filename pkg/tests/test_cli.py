import json

import pandas as pd
import pytest

from config.run_config import RunConfig
from utils.cli import main


@pytest.fixture(autouse=True)
def _output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("AUCTION_OUTPUT_DIR", str(tmp_path / "default"))


def _simulate(tmp_path, name, *extra):
    out = tmp_path / name
    assert main(["simulate", "--seed", "3", "--out", str(out), *extra]) == 0
    return out / "dataset.csv"


def test_simulate_then_identify(tmp_path):
    dataset = _simulate(tmp_path, "sp", "--size", "40000")
    assert dataset.exists()

    assert main(["identify", str(dataset), "--known-n", "2"]) == 0
    result = json.loads((dataset.parent / "result.json").read_text(encoding="utf-8"))
    assert result["estimator"] == "sp_fixed_price_only"
    assert result["alpha_star"]["point"] == pytest.approx(0.5, abs=0.02)
    assert result["config"]["assumptions"]["known_n"] == [2]


def test_identify_first_price_prices_only_is_not_identified(tmp_path):
    config = RunConfig().model_copy(deep=True)
    config.design.format = "first_price"
    path = tmp_path / "fp.json"
    path.write_text(config.to_json(), encoding="utf-8")

    dataset = _simulate(tmp_path, "fp", "--config", str(path), "--size", "5000")
    assert main(["identify", str(dataset), "--known-n", "2"]) == 3
    assert not (dataset.parent / "result.json").exists()


def test_identify_missing_observable(tmp_path):
    dataset = _simulate(tmp_path, "plain", "--size", "2000")
    assert main(["identify", str(dataset), "--estimator", "fixed_nobs"]) == 2


def test_io_errors(tmp_path):
    assert main(["identify", str(tmp_path / "missing.csv"), "--known-n", "2"]) == 5
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 5


def test_types_file_replay(tmp_path):
    types = tmp_path / "types.json"
    types.write_text(json.dumps({"reserve": 2.5, "bids": [[3, 4], [2, 3], [1, 2]]}), encoding="utf-8")
    dataset = _simulate(tmp_path, "replay", "--types-file", str(types))
    frame = pd.read_csv(dataset)
    assert list(frame["transaction_price"]) == [3.0, 2.5]


def test_empty_simulation(tmp_path):
    dataset = _simulate(tmp_path, "empty", "--size", "0")
    assert pd.read_csv(dataset).empty


def test_verify_and_report(tmp_path):
    out = tmp_path / "verify"
    assert main(["verify", "lemma1", "--out", str(out)]) == 0
    report = json.loads((out / "verify_lemma1.json").read_text(encoding="utf-8"))
    assert report["passed"]
    assert report["config"]["seed"] == 0

    assert main(["report", str(out / "verify_lemma1.json"), "--csv"]) == 0
    assert (out / "verify_lemma1.csv").exists()


def test_report_result_grid(tmp_path):
    dataset = _simulate(tmp_path, "grid", "--size", "20000")
    assert main(["identify", str(dataset), "--known-n", "2"]) == 0
    assert main(["report", str(dataset.parent / "result.json"), "--csv"]) == 0
    grid = pd.read_csv(dataset.parent / "result.csv")
    assert list(grid.columns[:2]) == ["alpha", "value"]
    assert grid["value"].is_monotonic_increasing


def test_unknown_suite_is_rejected_by_parser():
    with pytest.raises(SystemExit):
        main(["verify", "everything"])


def test_identify_accepts_numbered_estimator_and_slope_flag(tmp_path):
    dataset = _simulate(tmp_path, "numbered", "--size", "40000")
    assert main(["identify", str(dataset), "--estimator", "prop1", "--known-n", "2", "--prop2-chainrule"]) == 0
    result = json.loads((dataset.parent / "result.json").read_text(encoding="utf-8"))
    assert result["estimator"] == "sp_fixed_price_only"
    assert result["config"]["estimator"] == "sp_fixed_price_only"
    assert result["config"]["tuning"]["chain_rule_slope"] is True
