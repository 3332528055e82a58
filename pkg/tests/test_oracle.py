import numpy as np
import pytest

from utils.distributions import UniformValues
from utils.equilibrium import AuctionDesign
from utils.error_handler import DomainError, EmptySampleError
from utils.empirics import EmpiricalQuantile
from utils.oracle import construct_fp_twin, ks_distance, prop5_counterexample, simulate_twin, sp_unknown_n_counterexample
from utils.simulator import InfoStructure, PopulationSpec, observe, simulate


def _uniform_fp_transaction(u):
    """U[0,1]、N=2、α0=0.5 的第一價格成交價分位數。"""
    top = np.sqrt(0.25 + 0.75 * np.asarray(u))
    return top / 2 + 0.125 / top


def test_ks_distance():
    assert ks_distance([0.1, 0.2, 0.3], [0.1, 0.2, 0.3]) == 0.0
    assert ks_distance([0.0, 0.1], [0.9, 1.0]) == 1.0
    with pytest.raises(EmptySampleError):
        ks_distance([], [0.5])


def test_twin_at_true_level_recovers_values():
    twin = construct_fp_twin(_uniform_fp_transaction, 2, 0.5)
    assert twin.valid
    assert twin.values[0] == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(twin.values, twin.alphas, atol=1e-5)


def test_twin_reserve_equals_lowest_price():
    for alpha2 in (0.2, 0.65):
        twin = construct_fp_twin(_uniform_fp_transaction, 2, alpha2)
        assert twin.values[0] == pytest.approx(0.5, abs=1e-12)
        assert float(twin.distribution().values(alpha2)) == pytest.approx(0.5, abs=1e-12)


def test_twin_at_other_level_differs_from_truth():
    twin = construct_fp_twin(_uniform_fp_transaction, 2, 0.35)
    assert twin.valid
    assert np.all(np.diff(twin.values) >= 0)
    assert np.max(np.abs(twin.values - twin.alphas)) > 0.05


def test_twin_rejects_bad_arguments():
    with pytest.raises(DomainError):
        construct_fp_twin(_uniform_fp_transaction, 1, 0.35)
    with pytest.raises(DomainError):
        construct_fp_twin(_uniform_fp_transaction, 2, 1.0)


@pytest.fixture(scope="module")
def uniform_fp_prices():
    batch = simulate(UniformValues(), AuctionDesign("first_price", "reserve", 0.5), PopulationSpec.fixed(2), 1_000_000, seed=1)
    return observe(batch, InfoStructure()).prices


@pytest.mark.parametrize("alpha2", [0.2, 0.35, 0.5, 0.65])
def test_twin_prices_match_original(uniform_fp_prices, alpha2):
    twin = construct_fp_twin(_uniform_fp_transaction, 2, alpha2)
    replay = simulate_twin(twin, 1_000_000, seed=2)
    assert ks_distance(uniform_fp_prices, replay.prices) <= 0.01


def test_twin_from_empirical_prices(uniform_fp_prices):
    q = EmpiricalQuantile.from_samples(uniform_fp_prices)
    twin = construct_fp_twin(q, 2, 0.65, grid_points=201)
    assert twin.values[0] == pytest.approx(q.minimum)
    replay = simulate_twin(twin, 1_000_000, seed=3)
    assert ks_distance(uniform_fp_prices, replay.prices) <= 0.01


def test_sp_unknown_n_counterexample_matches():
    first, second, checks = sp_unknown_n_counterexample(200_000, seed=0)
    failed = [c["name"] for c in checks if not c["passed"]]
    assert failed == []
    assert first.invalid_count / (first.L + first.invalid_count) == pytest.approx(0.25, abs=0.01)
    assert second.invalid_count / (second.L + second.invalid_count) == pytest.approx(0.2, abs=0.01)
    assert prop5_counterexample is sp_unknown_n_counterexample
