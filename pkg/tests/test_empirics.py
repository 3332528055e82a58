import numpy as np
import pandas as pd
import pytest

from utils.empirics import (
    EmpiricalQuantile,
    count_stats,
    default_bandwidth,
    ecdf,
    eq_deriv,
    eq_eval,
    eq_second_deriv,
    eq_secant,
    mass_at,
    split_counts,
)
from utils.error_handler import DomainError, EmptySampleError, MissingObservableError
from utils.distributions import ShiftedUniformValues, UniformValues
from utils.equilibrium import AuctionDesign
from utils.simulator import InfoStructure, ObservedDataset, PopulationSpec, observe, simulate


def _uniform_grid(n: int = 10_001) -> EmpiricalQuantile:
    return EmpiricalQuantile.from_samples(np.linspace(0.0, 1.0, n))


def test_type7_interpolation():
    q = EmpiricalQuantile.from_samples([3.0, 1.0, 2.0, 4.0])
    assert eq_eval(q, 0.0) == 1.0
    assert eq_eval(q, 1.0) == 4.0
    assert eq_eval(q, 0.5) == pytest.approx(2.5)
    np.testing.assert_allclose(eq_eval(q, np.array([1 / 3, 2 / 3])), [2.0, 3.0])


def test_derivatives_of_linear_and_quadratic_quantiles():
    q = _uniform_grid()
    assert eq_deriv(q, 0.5, 0.01) == pytest.approx(1.0, rel=1e-6)
    assert eq_deriv(q, 0.0, 0.01) == pytest.approx(1.0, rel=1e-6)
    assert eq_deriv(q, 1.0, 0.01) == pytest.approx(1.0, rel=1e-6)
    assert eq_secant(q, 0.2, 0.6) == pytest.approx(1.0)

    squares = EmpiricalQuantile.from_samples(np.linspace(0.0, 1.0, 10_001) ** 2)
    assert eq_second_deriv(squares, 0.5, 0.05) == pytest.approx(2.0, rel=1e-3)
    assert eq_second_deriv(squares, 0.0, 0.05) == pytest.approx(2.0, rel=1e-3)


def test_bandwidth_and_domain_errors():
    assert default_bandwidth(100_000) == pytest.approx(0.5 * 100_000 ** (-0.2))
    q = _uniform_grid(11)
    with pytest.raises(DomainError):
        eq_eval(q, 1.5)
    with pytest.raises(DomainError):
        eq_deriv(q, 0.5, 0.7)
    with pytest.raises(EmptySampleError):
        EmpiricalQuantile.from_samples([])


def test_mass_and_ecdf():
    q = EmpiricalQuantile.from_samples([0.5, 0.5, 0.5, 0.7, 0.9])
    assert mass_at(q, 0.5) == pytest.approx(0.6)
    assert mass_at(q, 0.51, eps=0.02) == pytest.approx(0.6)
    assert mass_at(q, 0.6) == 0.0
    assert split_counts(q, 0.7) == (3, 1, 1)
    assert ecdf(q, 0.7) == pytest.approx(0.8)
    assert mass_at(EmpiricalQuantile.from_samples([2.5, 2.5, 3.0]), 2.5) == pytest.approx(2 / 3)


def test_mass_and_strict_fractions_partition_the_sample():
    rng = np.random.default_rng(5)
    samples = np.concatenate([np.full(40, 0.5), rng.uniform(0.5, 1.0, 160).round(2)])
    q = EmpiricalQuantile.from_samples(samples)
    for v in (0.5, 0.75, 0.8, 1.2, float(samples[17])):
        below = float(np.mean(samples < v))
        above = float(np.mean(samples > v))
        assert mass_at(q, v) + below + above == pytest.approx(1.0, abs=1e-12)


def test_mass_at_reserve_in_simulation():
    batch = simulate(UniformValues(), AuctionDesign("second_price", "reserve", 0.5), PopulationSpec.fixed(2), 200_000, seed=1)
    q = EmpiricalQuantile.from_samples(observe(batch, InfoStructure()).prices)
    assert mass_at(q, 0.5) == pytest.approx(2 / 3, abs=0.01)


def _counts_dataset(n_obs, invalid=None):
    frame = pd.DataFrame(
        {
            "auction_id": np.arange(len(n_obs)),
            "transaction_price": np.linspace(0.5, 1.0, len(n_obs)),
            "n_obs": pd.array(n_obs, dtype="Int64"),
        }
    )
    info = InfoStructure(observe_nobs=True, observe_invalid_count=invalid is not None)
    return ObservedDataset(frame=frame, info=info, L_invalid=invalid)


def test_count_stats_with_and_without_invalid():
    stats = count_stats(_counts_dataset([1, 2, 2, 2]))
    assert stats.share(2) == pytest.approx(0.75)
    assert stats.max_n_obs == 2
    assert stats.invalid_share is None
    assert stats.total_valid == 4

    stats = count_stats(_counts_dataset([1, 2, 2, 2], invalid=4))
    assert stats.share(1) == pytest.approx(1 / 4)
    assert sum(stats.shares.values()) == pytest.approx(1.0, abs=1e-12)
    assert stats.invalid_share == pytest.approx(0.5)
    assert stats.share(3) == 0.0
    np.testing.assert_array_equal(stats.outcome_counts(), [4, 1, 3])

    assert count_stats(_counts_dataset([3, 3, 3])).shares == {3: 1.0}


def test_count_stats_invalid_only():
    frame = pd.DataFrame({"auction_id": [0, 1], "transaction_price": [0.6, 0.7], "n_obs": pd.array([pd.NA] * 2, dtype="Int64")})
    ds = ObservedDataset(frame=frame, info=InfoStructure(observe_invalid_count=True), L_invalid=2)
    stats = count_stats(ds)
    assert stats.shares == {}
    assert stats.invalid_share == pytest.approx(0.5)
    with pytest.raises(MissingObservableError):
        stats.require_max()


def test_count_stats_shares_normalized_over_valid_auctions():
    # N ∈ {1: 0.4, 2: 0.6}，價值 U[1/4, 1]，保留價 0.5
    population = PopulationSpec(support=((1, 0.4), (2, 0.6)))
    design = AuctionDesign("second_price", "reserve", 1 / 3)
    batch = simulate(ShiftedUniformValues(lo=0.25, hi=1.0), design, population, 200_000, seed=2)
    stats = count_stats(observe(batch, InfoStructure(observe_nobs=True, observe_invalid_count=True)))
    assert stats.share(1) == pytest.approx(2 / 3, abs=0.01)
    assert stats.share(2) == pytest.approx(1 / 3, abs=0.01)
    assert sum(stats.shares.values()) == pytest.approx(1.0, abs=1e-12)
    assert stats.invalid_share == pytest.approx(0.2, abs=0.01)


def test_count_stats_requires_nobs():
    frame = pd.DataFrame({"auction_id": [0], "transaction_price": [0.6], "n_obs": pd.array([pd.NA], dtype="Int64")})
    with pytest.raises(MissingObservableError):
        count_stats(ObservedDataset(frame=frame, info=InfoStructure()))
