import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdiqss.sources import (
    ThermalSource,
    herald_click_prob,
    herald_prob_per_slot,
    herald_prob_within,
    thermal_pmf,
    thermal_tail,
    truncation_order,
)


def test_pmf_examples():
    assert thermal_pmf(1.0, 0) == pytest.approx(0.5)
    assert thermal_pmf(1.0, 1) == pytest.approx(0.25)
    assert thermal_pmf(0.005, 1) == pytest.approx(0.005 / 1.005**2, rel=1e-14)
    assert thermal_pmf(0.0, 0) == 1.0
    assert thermal_pmf(0.0, 3) == 0.0


def test_pmf_rejects_negative():
    with pytest.raises(ValueError):
        thermal_pmf(-0.1, 1)
    with pytest.raises(ValueError):
        thermal_pmf(0.1, -1)


@pytest.mark.parametrize("mu", [1e-4, 0.005, 0.1, 0.781, 1.0, 5.0])
def test_pmf_normalization(mu):
    src = ThermalSource.adaptive(mu)
    assert abs(src.pmf().sum() - 1.0) < 1e-12
    assert thermal_tail(mu, src.k_max) < 1e-15


def test_truncation_is_minimal():
    for mu in (0.01, 0.5, 2.0):
        k = truncation_order(mu)
        assert thermal_tail(mu, k) < 1e-15
        assert k == 1 or thermal_tail(mu, k - 1) >= 1e-15


@pytest.mark.parametrize("eta", [0.0, 0.3, 0.93, 1.0])
def test_click_prob_matches_binomial_sum(eta):
    # Probability of >= 1 detected photon out of k, summed term by term.
    for k in range(0, 51):
        direct = sum(math.comb(k, i) * eta**i * (1 - eta) ** (k - i) for i in range(1, k + 1))
        assert herald_click_prob(k, eta) == pytest.approx(direct, abs=1e-13)


def test_per_slot_herald_brute_force():
    mu, eta = 0.781, 0.93
    p = sum(mu**k / (1 + mu) ** (k + 1) * (1 - (1 - eta) ** k) for k in range(1, 201))
    assert herald_prob_per_slot(mu, eta) == pytest.approx(p, rel=1e-13)
    # Thermal light through a lossy trigger stays thermal: mean eta*mu.
    assert herald_prob_per_slot(mu, eta) == pytest.approx(1 - 1 / (1 + eta * mu), rel=1e-12)


def test_herald_within():
    assert herald_prob_within(0, 0.3) == 0.0
    assert herald_prob_within(1, 0.3) == pytest.approx(0.3)
    assert herald_prob_within(3, 0.3) == pytest.approx(1 - 0.7**3)
    assert herald_prob_within(5, 1.0) == 1.0
    with pytest.raises(ValueError):
        herald_prob_within(-1, 0.3)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-4, 3.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_herald_monotone(mu, eta1, eta2):
    lo, hi = sorted((eta1, eta2))
    assert herald_prob_per_slot(mu, lo) <= herald_prob_per_slot(mu, hi) + 1e-15
    assert 0.0 <= herald_prob_per_slot(mu, hi) <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-4, 10.0))
def test_pmf_sums_to_one_property(mu):
    assert abs(float(np.sum(ThermalSource.adaptive(mu).pmf())) - 1.0) < 1e-12
