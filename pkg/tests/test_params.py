import math

import pytest

from mdiqss.params import (
    ConfigError,
    SimParams,
    channel_transmittance,
    load_config,
    parse_config,
    user_separation,
    write_config,
)


def test_defaults():
    p = SimParams()
    assert (p.p_d, p.e_q, p.e_d, p.eta_D, p.eta_d) == (1e-7, 0.015, 0.015, 0.93, 0.93)
    assert (p.f_ec, p.T_QM, p.alpha, p.N, p.K) == (1.16, 0.98, 0.2, 40, 8)
    assert (p.mu, p.omega) == (0.005, 0.0005)


def test_override_and_comments():
    p = parse_config("# comment\n\nN = 5\nT_QM=0.7  \n")
    assert p.N == 5 and p.T_QM == 0.7 and p.K == 8


def test_range_error_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("N = 5\n\nT_QM = 1.5\n")
    assert err.value.line == 3
    assert "T_QM" in str(err.value)


@pytest.mark.parametrize(
    "text, line",
    [("bogus = 1\n", 1), ("N = 4\nN = 5\n", 2), ("mu = abc\n", 1), ("K = 2.5\n", 1), ("alpha\n", 1), ("mu = nan\n", 1)],
)
def test_bad_configs(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line


def test_omega_must_be_below_mu():
    with pytest.raises(ConfigError):
        SimParams(mu=0.001, omega=0.001)


def test_round_trip(tmp_path):
    p = SimParams(N=7, T_QM=0.81, L_km=12.5)
    path = tmp_path / "c.cfg"
    write_config(p, path)
    assert load_config(path) == p


def test_transmittance():
    assert channel_transmittance(0.2, 0) == 1.0
    assert channel_transmittance(0.2, 50) == pytest.approx(0.1)
    assert channel_transmittance(0.2, 100) == pytest.approx(0.01)
    assert SimParams(L_km=200).T_c == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        channel_transmittance(0.2, -1)


def test_user_separation():
    assert user_separation(261) == pytest.approx(452.07, abs=0.01)
    assert user_separation(1.0) == pytest.approx(math.sqrt(3))
