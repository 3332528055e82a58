import numpy as np
import pytest

from utils.distributions import (
    PowerLawValues,
    ShiftedUniformValues,
    TabulatedQuantile,
    UniformValues,
    check_regularity,
    crra,
    distribution_from_config,
    preferences_from_config,
    quantile,
    quantile_deriv,
    risk_neutral,
    virtual_value,
)
from utils.error_handler import DomainError


def test_uniform_quantile_and_virtual_value():
    dist = UniformValues()
    assert quantile(dist, 0.3) == pytest.approx(0.3)
    assert quantile_deriv(dist, 0.7) == pytest.approx(1.0)
    # J(α) = 2α − 1
    assert virtual_value(dist, 0.5) == pytest.approx(0.0)
    assert virtual_value(dist, 0.75) == pytest.approx(0.5)


def test_shifted_uniform_matches_affine_map():
    dist = ShiftedUniformValues(lo=0.25, hi=1.0)
    grid = np.linspace(0.0, 1.0, 5)
    np.testing.assert_allclose(quantile(dist, grid), 0.25 + 0.75 * grid)


def test_power_law_quantile_and_integral():
    dist = PowerLawValues(exponent=1.5)
    assert quantile(dist, 0.25) == pytest.approx(0.125)
    # ∫_0^1 V′(t) t dt = k / (k + 1)
    assert float(dist.slope_power_integral(0.0, 1.0, 1)) == pytest.approx(1.5 / 2.5)


def test_power_law_derivative_diverges_at_zero():
    with pytest.raises(DomainError):
        quantile_deriv(PowerLawValues(exponent=0.5), 0.0)


def test_alpha_outside_unit_interval_rejected():
    with pytest.raises(DomainError):
        quantile(UniformValues(), 1.2)
    with pytest.raises(DomainError):
        quantile(UniformValues(), -0.1)


def test_tabulated_quantile_interpolates_and_integrates():
    dist = TabulatedQuantile(alphas=(0.0, 0.5, 1.0), values_at=(0.0, 0.25, 1.0))
    assert quantile(dist, 0.25) == pytest.approx(0.125)
    assert quantile(dist, 0.75) == pytest.approx(0.625)
    # 內部節點取中央差分
    assert quantile_deriv(dist, 0.5) == pytest.approx(1.0)
    # ∫_0^1 V′(t) dt = V(1) − V(0)
    assert float(dist.slope_power_integral(0.0, 1.0, 0)) == pytest.approx(1.0)


def test_tabulated_quantile_requires_increasing_values():
    with pytest.raises(DomainError):
        TabulatedQuantile(alphas=(0.0, 0.5, 1.0), values_at=(0.0, 0.5, 0.4))
    with pytest.raises(DomainError):
        TabulatedQuantile(alphas=(0.1, 1.0), values_at=(0.0, 1.0))


def test_regularity_report():
    assert check_regularity(UniformValues()).is_regular
    # 在中段拉平的分位數會讓 J 下降
    bumpy = TabulatedQuantile(alphas=(0.0, 0.4, 0.6, 1.0), values_at=(0.0, 0.6, 0.61, 1.0))
    report = check_regularity(bumpy)
    assert not report.is_regular
    assert report.violations


def test_seller_preferences():
    assert risk_neutral(0.2).is_risk_neutral
    prefs = crra(0.5, 0.0)
    assert not prefs.is_risk_neutral
    assert float(prefs.utility(0.25)) == pytest.approx(0.5)
    assert float(prefs.marginal_utility(0.25)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        crra(1.5)


def test_from_config_dicts():
    dist = distribution_from_config({"family": "power_law", "exponent": 2.0})
    assert isinstance(dist, PowerLawValues)
    assert dist.to_dict()["exponent"] == 2.0
    with pytest.raises(DomainError):
        distribution_from_config({"family": "power_law"})
    with pytest.raises(DomainError):
        distribution_from_config({"family": "lognormal"})

    prefs = preferences_from_config({"utility": "crra", "rho": 0.5, "outside_option": 0.1})
    assert prefs.rho == 0.5
    assert prefs.outside_option == 0.1
