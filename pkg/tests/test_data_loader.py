import json

import numpy as np
import pandas as pd
import pytest

from utils.data_loader import read_dataset, resolve_output_dir, sidecar_path, write_dataset
from utils.distributions import UniformValues
from utils.equilibrium import AuctionDesign
from utils.error_handler import DataIOError
from utils.simulator import InfoStructure, PopulationSpec, observe, raw_from_bids, simulate


def _dataset(info: InfoStructure, seed: int = 4):
    batch = simulate(UniformValues(), AuctionDesign("second_price", "reserve", 0.5), PopulationSpec.fixed(2), 2_000, seed=seed)
    return observe(batch, info)


def test_write_and_read_preserve_observables(tmp_path):
    ds = _dataset(InfoStructure(observe_nobs=True, observe_invalid_count=True))
    path = write_dataset(ds, tmp_path / "dataset.csv", {"seed": 4})

    loaded = read_dataset(path)
    assert loaded.L == ds.L
    assert loaded.invalid_count == ds.invalid_count
    assert loaded.fmt == "second_price"
    assert loaded.truncation == "reserve"
    np.testing.assert_array_equal(loaded.n_obs, ds.n_obs)
    np.testing.assert_allclose(loaded.prices, ds.prices, atol=1e-12)
    assert loaded.metadata["config"] == {"seed": 4}


def test_csv_columns_and_missing_nobs(tmp_path):
    ds = _dataset(InfoStructure())
    path = write_dataset(ds, tmp_path / "prices.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["auction_id", "transaction_price", "n_obs"]
    assert frame["n_obs"].isna().all()

    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    assert meta["L_invalid"] is None
    assert meta["info_structure"]["observe_nobs"] is False


def test_same_seed_gives_identical_files(tmp_path):
    first = write_dataset(_dataset(InfoStructure(observe_nobs=True)), tmp_path / "a.csv", {"seed": 4})
    second = write_dataset(_dataset(InfoStructure(observe_nobs=True)), tmp_path / "b.csv", {"seed": 4})
    assert first.read_bytes() == second.read_bytes()
    assert sidecar_path(first).read_bytes() == sidecar_path(second).read_bytes()


def test_external_csv_without_sidecar(tmp_path):
    path = tmp_path / "external.csv"
    pd.DataFrame({"auction_id": [0, 1, 2], "transaction_price": [0.7, 0.6, 0.9], "n_obs": [2, 1, 2]}).to_csv(path, index=False)

    ds = read_dataset(path)
    assert ds.has_nobs
    assert ds.fmt is None
    assert list(ds.prices_with(2)) == [0.7, 0.9]


def test_worked_example_round_trip(tmp_path):
    batch = raw_from_bids([[3, 4], [2, 3], [1, 2]], "second_price", 2.5)
    ds = observe(batch, InfoStructure(observe_nobs=True, observe_invalid_count=True))
    loaded = read_dataset(write_dataset(ds, tmp_path / "worked.csv"))
    assert list(loaded.prices) == [3.0, 2.5]
    assert loaded.invalid_count == 1


def test_read_errors(tmp_path):
    with pytest.raises(DataIOError):
        read_dataset(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("id,price\n1,0.5\n", encoding="utf-8")
    with pytest.raises(DataIOError):
        read_dataset(bad)


def test_resolve_output_dir_uses_env(tmp_path, monkeypatch):
    target = tmp_path / "runs"
    monkeypatch.setenv("AUCTION_OUTPUT_DIR", str(target))
    assert resolve_output_dir() == target
    assert target.exists()
    assert resolve_output_dir(str(tmp_path / "explicit")) == tmp_path / "explicit"
