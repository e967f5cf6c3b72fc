import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from modalreg.bandwidth import bandwidth_cap, km_bandwidth, rate_adjusted, select_bandwidth, select_bandwidths
from modalreg.config import ModeConfig
from modalreg.errors import DomainError
from modalreg.qr import QuantileProcess
from modalreg.simlab import DgpSpec, sample_dgp


def test_km_reference_value():
    expected = 1000 ** (-1 / 3) * norm.ppf(0.975) ** (2 / 3) * (1.5 * norm.pdf(0)) ** (1 / 3)
    assert km_bandwidth(0.5, 1000) == pytest.approx(expected, rel=1e-12)
    assert km_bandwidth(0.5, 1000) == pytest.approx(0.13198, abs=5e-5)


def test_km_smaller_in_tails():
    assert km_bandwidth(0.9, 1000) < km_bandwidth(0.5, 1000)


@given(st.floats(0.001, 0.999), st.integers(2, 10**7))
def test_km_symmetry(tau, n):
    assert km_bandwidth(tau, n) == pytest.approx(km_bandwidth(1 - tau, n), rel=1e-9)


@given(st.floats(0.02, 0.98), st.integers(10, 10**6), st.integers(10, 10**6))
def test_rate_exponent(tau, n1, n2):
    ratio = rate_adjusted(tau, n1) / rate_adjusted(tau, n2)
    assert ratio == pytest.approx((n2 / n1) ** (1 / 6), rel=1e-10)


def test_pilot_value_and_cap():
    assert rate_adjusted(0.5, 1000) == pytest.approx(0.4174, abs=2e-4)
    cfg = ModeConfig()
    assert bandwidth_cap(cfg) == pytest.approx(0.45 - 0.9 / 99)
    data = sample_dgp(DgpSpec("case2", 1000, seed=0)).data
    plan = select_bandwidth(data, [1, 0.5], cfg)
    assert 0 < plan.final <= bandwidth_cap(cfg)
    assert plan.pilot == pytest.approx(min(0.4174, bandwidth_cap(cfg)), abs=2e-4)
    assert plan.final == pytest.approx(min(rate_adjusted(plan.tau_prelim, 1000), bandwidth_cap(cfg)))


def test_small_n_hits_cap_with_diagnostic():
    data = sample_dgp(DgpSpec("case2", 20, seed=0)).data
    plan = select_bandwidth(data, [1, 0.5])
    assert any("capped" in msg for msg in plan.diagnostics)
    assert plan.final < 0.5


def test_fixed_point_at_median_level():
    """When the preliminary level is 1/2 the final rule returns the default pilot."""
    taus = ModeConfig().grid()
    proc = QuantileProcess(taus, ((taus - 0.5) ** 3 + taus)[:, None])
    final, prelim, _ = select_bandwidths(proc, np.array([[1.0]]), 1000, ModeConfig(), pilot=0.03)
    assert abs(prelim[0] - 0.5) < 0.01
    assert final[0] == pytest.approx(rate_adjusted(prelim[0], 1000))
    assert final[0] == pytest.approx(rate_adjusted(0.5, 1000), rel=1e-3)


def test_large_n_shrinks():
    assert rate_adjusted(0.5, 10**6) < rate_adjusted(0.5, 1000)


def test_domain_errors():
    with pytest.raises(DomainError):
        km_bandwidth(0.0, 100)
    with pytest.raises(DomainError):
        km_bandwidth(0.5, 1)
    with pytest.raises(DomainError):
        km_bandwidth(0.5, 100, alpha=1.5)
