import numpy as np
import pytest

from utils.distributions import PowerLawValues, TabulatedQuantile, UniformValues, crra, risk_neutral
from utils.equilibrium import (
    AuctionDesign,
    entry_payoff,
    entry_threshold,
    fp_bid_entry,
    fp_bid_reserve,
    fp_bid_reserve_sensitivity,
    fp_bid_reserve_vec,
    optimal_screening,
    screening_foc,
    seller_payoff,
    seller_payoff_curve,
)
from utils.error_handler import DomainError, RootBracketError


def test_fp_bid_reserve_uniform_closed_form():
    dist = UniformValues()
    # N=2、α0=0.5：b(α) = α/2 + 0.125/α
    assert fp_bid_reserve(dist, 2, 0.5, 1.0) == pytest.approx(0.625)
    assert fp_bid_reserve(dist, 2, 0.5, 0.5) == pytest.approx(0.5)
    grid = np.array([0.6, 0.8, 1.0])
    np.testing.assert_allclose(fp_bid_reserve_vec(dist, 2, 0.5, grid), grid / 2 + 0.125 / grid, rtol=1e-10)


def test_fp_bid_reserve_domain():
    with pytest.raises(DomainError):
        fp_bid_reserve(UniformValues(), 2, 0.5, 0.4)
    with pytest.raises(DomainError):
        fp_bid_reserve(UniformValues(), 0, 0.5, 0.6)


def test_fp_bid_sensitivity():
    dist = UniformValues()
    assert fp_bid_reserve_sensitivity(dist, 2, 0.5, 1.0) == pytest.approx(0.5)
    assert fp_bid_reserve_sensitivity(dist, 3, 0.0, 0.7) == 0.0


def test_entry_threshold_and_bid():
    dist = UniformValues()
    # V(α) α = F
    assert entry_threshold(dist, 2, 0.25) == pytest.approx(0.5)
    assert entry_threshold(dist, 3, 0.125) == pytest.approx(0.5)
    # 門檻類型出價 0
    assert fp_bid_entry(dist, 2, 0.25, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert fp_bid_entry(dist, 2, 0.25, 1.0) == pytest.approx(0.375)
    with pytest.raises(RootBracketError):
        entry_threshold(dist, 2, 1.5)


def test_entry_payoff_maximized_by_truthful_type():
    dist = UniformValues()
    own = entry_payoff(dist, 2, 0.25, 0.8, 0.8)
    for beta in (0.55, 0.7, 0.9, 1.0):
        assert entry_payoff(dist, 2, 0.25, 0.8, beta) <= own + 1e-12
    # 門檻類型的期望收益為 0
    assert entry_payoff(dist, 2, 0.25, 0.5, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_design_validation():
    design = AuctionDesign("first_price", "entry_cost", 0.25)
    assert design.is_first_price and design.is_entry
    assert design.threshold(UniformValues(), 2) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        AuctionDesign("second_price", "reserve", 1.0)
    with pytest.raises(ValueError):
        AuctionDesign("dutch", "reserve", 0.5)


@pytest.mark.parametrize(
    "dist,prefs,fmt,expected",
    [
        (UniformValues(), risk_neutral(0.0), "first_price", 0.5),
        (UniformValues(), risk_neutral(0.0), "second_price", 0.5),
        (UniformValues(), risk_neutral(0.5), "second_price", 0.75),
        (PowerLawValues(exponent=1.5), risk_neutral(0.0), "first_price", 0.6),
        (UniformValues(), crra(0.5, 0.0), "second_price", 1.0 / 3.0),
        (PowerLawValues(exponent=1.5), crra(0.5, 0.0), "second_price", 0.75 / 1.75),
    ],
)
def test_optimal_screening_known_roots(dist, prefs, fmt, expected):
    root = optimal_screening(dist, prefs, fmt)
    assert root == pytest.approx(expected, abs=1e-9)
    assert abs(screening_foc(dist, prefs, fmt, 2, root)) < 1e-8


def test_optimal_screening_independent_of_n_when_risk_neutral():
    roots = {n: optimal_screening(UniformValues(), risk_neutral(0.2), "first_price", n) for n in (2, 4, 6)}
    assert max(roots.values()) - min(roots.values()) < 1e-9


def test_seller_payoff_matches_revenue_formula():
    dist = UniformValues()
    # 兩人、U[0,1]、保留價 0.5 的期望收益 5/12
    assert seller_payoff(dist, risk_neutral(), "second_price", 2, 0.5) == pytest.approx(5 / 12)
    assert seller_payoff(dist, risk_neutral(), "first_price", 2, 0.5) == pytest.approx(5 / 12)


def test_payoff_curve_agrees_with_quad_and_peaks_at_root():
    dist = UniformValues()
    prefs = crra(0.5, 0.1)
    grid = np.linspace(0.0, 1.0, 2001)
    for fmt in ("first_price", "second_price"):
        curve = seller_payoff_curve(dist, prefs, fmt, 3, grid)
        assert curve[800] == pytest.approx(seller_payoff(dist, prefs, fmt, 3, grid[800]), rel=1e-7)
        root = optimal_screening(dist, prefs, fmt, 3)
        assert abs(grid[int(np.argmax(curve))] - root) <= grid[1] - grid[0]


def test_optimal_screening_rejects_outside_option_at_top():
    for v0 in (1.0, 1.2):
        with pytest.raises(DomainError):
            optimal_screening(UniformValues(), risk_neutral(v0), "second_price")


KINKED = TabulatedQuantile(alphas=(0.0, 0.25, 0.5, 0.75, 1.0), values_at=(0.0, 0.2, 0.45, 0.75, 1.0))


def _away_from_knots(grid, knots, gap=1e-4):
    if len(knots) == 0:
        return np.asarray(grid)
    return np.array([a for a in grid if np.min(np.abs(np.asarray(knots) - a)) > gap])


@pytest.mark.parametrize("dist", [PowerLawValues(exponent=1.5), KINKED], ids=["power_law", "tabulated"])
@pytest.mark.parametrize("n_bidders", [2, 3, 5])
def test_bids_solve_the_equilibrium_equation(dist, n_bidders):
    # b(α) + α b′(α)/(N−1) = V(α)
    h = 1e-5
    cost = 0.1
    cases = [
        (0.4, lambda a: fp_bid_reserve(dist, n_bidders, 0.4, a)),
        (entry_threshold(dist, n_bidders, cost), lambda a: fp_bid_entry(dist, n_bidders, cost, a)),
    ]
    for lower, bid in cases:
        grid = _away_from_knots(np.linspace(lower + 0.01, 0.99, 41), dist.knots)
        for a in grid:
            slope = (bid(a + h) - bid(a - h)) / (2 * h)
            residual = bid(a) + a * slope / (n_bidders - 1) - float(dist.values(a))
            assert abs(residual) <= 1e-6


def test_tabulated_with_many_knots():
    knots = np.linspace(0.0, 1.0, 1001)
    dist = TabulatedQuantile(alphas=tuple(knots), values_at=tuple(knots))
    assert fp_bid_reserve(dist, 2, 0.5, 0.8) == pytest.approx(0.8 / 2 + 0.125 / 0.8, rel=1e-10)
    assert fp_bid_entry(dist, 2, 0.25, 1.0) == pytest.approx(0.375, rel=1e-9)
    assert seller_payoff(dist, risk_neutral(), "second_price", 2, 0.5) == pytest.approx(5 / 12, rel=1e-8)
    assert seller_payoff(dist, risk_neutral(), "first_price", 2, 0.5) == pytest.approx(5 / 12, rel=1e-8)
    prefs = crra(0.5, 0.0)
    expected = screening_foc(UniformValues(), prefs, "first_price", 2, 0.5)
    assert screening_foc(dist, prefs, "first_price", 2, 0.5) == pytest.approx(expected, abs=1e-8)
