import numpy as np
import pytest

from utils.distributions import UniformValues
from utils.equilibrium import AuctionDesign
from utils.error_handler import DomainError, MissingObservableError
from utils.simulator import InfoStructure, PopulationSpec, observe, raw_from_bids, simulate


WORKED_BIDS = [[3, 4], [2, 3], [1, 2]]


def test_worked_example_second_price():
    batch = raw_from_bids(WORKED_BIDS, "second_price", 2.5)
    ds = observe(batch, InfoStructure(observe_nobs=True, observe_invalid_count=True))

    assert ds.L == 2
    assert ds.invalid_count == 1
    assert list(ds.prices) == [3.0, 2.5]
    assert list(ds.n_obs) == [2, 1]


def test_worked_example_first_price():
    batch = raw_from_bids(WORKED_BIDS, "first_price", 2.5)
    ds = observe(batch, InfoStructure(observe_nobs=True))

    assert list(ds.prices) == [4.0, 3.0]
    assert list(ds.n_obs) == [2, 1]
    with pytest.raises(MissingObservableError):
        ds.invalid_count


def test_raw_auction_view():
    batch = raw_from_bids(WORKED_BIDS, "second_price", 2.5)
    auction = batch[1]
    assert auction.n_bidders == 2
    assert auction.bids == (3.0,)
    assert auction.price == 2.5
    assert batch[2].price is None


def test_same_seed_same_data_any_worker_count():
    dist = UniformValues()
    design = AuctionDesign("first_price", "reserve", 0.5)
    population = PopulationSpec(support=((2, 0.5), (3, 0.5)))
    first = simulate(dist, design, population, 30_000, seed=11, workers=1, block_size=4_096)
    second = simulate(dist, design, population, 30_000, seed=11, workers=4, block_size=4_096)
    np.testing.assert_array_equal(first.n_act, second.n_act)
    np.testing.assert_array_equal(np.nan_to_num(first.price), np.nan_to_num(second.price))

    other = simulate(dist, design, population, 30_000, seed=12)
    assert not np.array_equal(np.nan_to_num(first.price), np.nan_to_num(other.price))


def test_second_price_reserve_shares():
    batch = simulate(UniformValues(), AuctionDesign("second_price", "reserve", 0.5), PopulationSpec.fixed(2), 200_000, seed=3)
    ds = observe(batch, InfoStructure(observe_nobs=True, observe_invalid_count=True))

    total = ds.L + ds.invalid_count
    assert ds.invalid_count / total == pytest.approx(0.25, abs=0.005)
    at_reserve = np.mean(ds.prices == 0.5)
    assert at_reserve == pytest.approx(2 / 3, abs=0.005)
    assert ds.prices.min() == pytest.approx(0.5)


def test_drop_at_reserve_removes_mass_point():
    batch = simulate(UniformValues(), AuctionDesign("second_price", "reserve", 0.5), PopulationSpec.fixed(3), 20_000, seed=5)
    ds = observe(batch, InfoStructure(drop_at_reserve=True))
    assert np.all(ds.prices > 0.5)


def test_first_price_entry_prices_start_at_zero():
    batch = simulate(UniformValues(), AuctionDesign("first_price", "entry_cost", 0.25), PopulationSpec.fixed(2), 50_000, seed=1)
    ds = observe(batch, InfoStructure())
    assert batch.thresholds[2] == pytest.approx(0.5)
    assert ds.prices.min() == pytest.approx(0.0, abs=0.01)
    assert ds.prices.max() <= 0.375 + 1e-9


def test_fold_out_keeps_remaining_rows():
    batch = simulate(UniformValues(), AuctionDesign("second_price", "reserve", 0.5), PopulationSpec.fixed(2), 1_000, seed=2)
    ds = observe(batch, InfoStructure(observe_invalid_count=True))
    folded = ds.fold_out(0, 5)
    assert folded.L < ds.L
    assert np.all(folded.frame["auction_id"].to_numpy() % 5 != 0)


def test_zero_auctions_and_invalid_population():
    batch = simulate(UniformValues(), AuctionDesign("second_price", "reserve", 0.5), PopulationSpec.fixed(2), 0)
    ds = observe(batch, InfoStructure())
    assert ds.L == 0
    with pytest.raises(DomainError):
        PopulationSpec(support=((2, 0.5), (3, 0.4)))
    with pytest.raises(DomainError):
        PopulationSpec(support=((2, 0.5), (3, 0.5 + 1e-10)))
    with pytest.raises(DomainError):
        simulate(UniformValues(), AuctionDesign("second_price", "reserve", 0.5), PopulationSpec.fixed(2), -1)
