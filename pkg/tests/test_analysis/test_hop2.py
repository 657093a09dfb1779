import math

import numpy as np
import pytest as _pytest

from mbm_relay import analysis, specfun
from mbm_relay.analysis import SystemConfig
from mbm_relay.channel import ChannelParams, sample_complex_fading
from mbm_relay.errors import ConfigurationError, DomainError


def _slope(values, omegas):
    return -math.log10(values[1] / values[0]) / math.log10(
        omegas[1] / omegas[0]
    )


class TestMgf:
    def test_unit_at_zero_and_nonincreasing(self):
        s = np.array([0.0, 0.1, 1.0, 10.0, 100.0])

        mgf = analysis.mgf_phi(s, ChannelParams(1, 2), samples=20_000)

        assert mgf[0] == 1.0
        assert np.all(np.diff(mgf) <= 0)

    def test_deterministic(self):
        s = np.array([0.5, 5.0])
        params = ChannelParams(2, 2)

        assert np.array_equal(
            analysis.mgf_phi(s, params, samples=20_000),
            analysis.mgf_phi(s, params, samples=20_000),
        )

    def test_rayleigh_rayleigh_mean(self):
        # E[Phi] = 2 E|g h|^2 = 2, so M'(0) = -2
        s = np.array([1e-4])
        mgf = analysis.mgf_phi(s, ChannelParams(1, 1), samples=400_000)

        assert (1.0 - mgf[0]) / 1e-4 == _pytest.approx(2.0, rel=0.02)

    def test_conditional_mean_rayleigh_fading(self):
        # m_h = 1: E[exp(-s Phi) | g1, g2] = 1 / (1 + s g1 + s g2)
        first = np.array([0.2, 1.0, 3.0])
        second = np.array([0.5, 2.0, 0.01])

        value = analysis._conditional_mgf(4.0, first, second, 1)

        assert np.allclose(value, 1.0 / (1.0 + 4.0 * (first + second)))

    @_pytest.mark.parametrize("m_h", [2, 3, 6])
    def test_conditional_mean_against_sampled_fades(self, m_h):
        rng = np.random.default_rng(31)
        g1, g2, s = 0.7, 1.6, 0.8
        h1 = sample_complex_fading(m_h, rng, 1_000_000)
        h2 = sample_complex_fading(m_h, rng, 1_000_000)
        phi = np.abs(math.sqrt(g1) * h1 - math.sqrt(g2) * h2) ** 2

        value = analysis._conditional_mgf(
            s, np.array([g1]), np.array([g2]), m_h
        )

        assert value[0] == _pytest.approx(np.mean(np.exp(-s * phi)), rel=0.01)

    @_pytest.mark.parametrize(
        ("m_g", "expected"), [(1, 1.0), (2, 2.0 / 3.0)]
    )
    def test_density_at_zero_is_finite(self, m_g, expected):
        # s M(s) -> f_Phi(0) = E[1 / (g1 + g2)] for m_h = 1, finite for
        # every m_g because g1 + g2 has shape 2 m_g >= 2
        s = np.array([1e5, 1e6])

        mgf = analysis.mgf_phi(s, ChannelParams(m_g, 1), samples=400_000)

        assert s[1] * mgf[1] == _pytest.approx(s[0] * mgf[0], rel=1e-3)
        assert s[1] * mgf[1] == _pytest.approx(expected, rel=0.03)

    def test_sample_floor(self):
        with _pytest.raises(ConfigurationError):
            analysis.mgf_phi(np.array([1.0]), ChannelParams(1, 1), samples=100)


class TestHop2Bound:
    def test_craig_and_direct_estimators_agree(self):
        config = SystemConfig.create(2, 1, 1, 1, omega1=100.0)

        craig = analysis.hop2_sep_bound(config, mgf_samples=1_000_000)
        direct = analysis.hop2_union_bound_mc(config, samples=1_000_000)

        assert craig == _pytest.approx(direct, rel=0.03)

    @_pytest.mark.parametrize("n_r", [1, 2])
    def test_diversity_equals_receive_antennas(self, n_r):
        omegas = (1e3, 1e4)
        values = [
            analysis.hop2_sep_bound(
                SystemConfig.create(4, 1, 2, n_r, omega1=w),
                mgf_samples=1_000_000,
            )
            for w in omegas
        ]

        assert _slope(values, omegas) == _pytest.approx(n_r, abs=0.3)

    @_pytest.mark.slow
    def test_craig_and_direct_estimators_agree_tightly(self):
        config = SystemConfig.create(2, 1, 1, 1, omega1=100.0)

        craig = analysis.hop2_sep_bound(config, mgf_samples=10_000_000)
        direct = analysis.hop2_union_bound_mc(config, samples=10_000_000)

        assert craig == _pytest.approx(direct, rel=0.02)

    @_pytest.mark.parametrize("n_r", [1, 2, 4])
    def test_top_decade_slope(self, n_r):
        omegas = (1e4, 1e5)
        values = [
            analysis.hop2_sep_bound(
                SystemConfig.create(4, 2, 2, n_r, omega1=w)
            )
            for w in omegas
        ]

        assert _slope(values, omegas) == _pytest.approx(n_r, abs=0.2)

    @_pytest.mark.parametrize("n_r", [1, 2, 4])
    def test_asymptote_tracks_bound(self, n_r):
        ratios = []
        for omega in (1e4, 1e5):
            config = SystemConfig.create(4, 2, 2, n_r, omega1=omega)
            ratios.append(
                analysis.hop2_sep_asymptotic(config)
                / analysis.hop2_sep_bound(config)
            )

        assert ratios[1] == _pytest.approx(ratios[0], rel=0.2)

    def test_more_antennas_help(self):
        values = [
            analysis.hop2_sep_bound(
                SystemConfig.create(4, 1, 2, n_r, omega1=100.0),
                mgf_samples=50_000,
            )
            for n_r in (1, 2, 4)
        ]

        assert values == sorted(values, reverse=True)

    def test_bpsk_prefactor(self):
        # N log2 N / 2 = 1 for two patterns
        assert analysis._union_prefactor(2) == 1.0
        assert analysis._union_prefactor(16) == 32.0


class TestHop2Asymptotic:
    def test_closed_value(self):
        # N = 2, N_R = 1, zeta(1, 1) = 1: 2 * 1 * 2^-1 * 2 / 1 * zeta / Omega
        config = SystemConfig.create(2, 1, 1, 1, omega1=1e3)

        assert analysis.hop2_sep_asymptotic(config) == _pytest.approx(2e-3)

    def test_worked_example(self):
        # m_g = 1, m_h = 2, N = 2, N_R = 1, zeta = 2/3: 2 zeta / 100
        config = SystemConfig.create(2, 1, 2, 1, omega1=100.0)

        assert analysis.hop2_sep_asymptotic(config) == _pytest.approx(
            0.01333, abs=5e-6
        )

    @_pytest.mark.parametrize("n_r", [1, 2, 6])
    def test_slope(self, n_r):
        omegas = (1e4, 1e5)
        values = [
            analysis.hop2_sep_asymptotic(
                SystemConfig.create(16, 1, 6, n_r, omega1=w)
            )
            for w in omegas
        ]

        assert _slope(values, omegas) == _pytest.approx(n_r, abs=1e-9)

    def test_zero_snr(self):
        config = SystemConfig.create(2, 1, 1, 1, omega1=0.0)

        with _pytest.raises(DomainError):
            analysis.hop2_sep_asymptotic(config)


class TestGains:
    def test_report(self):
        config = SystemConfig.create(16, 1, 6, 2, omega1=1.0)

        report = analysis.gains(config)

        assert report.diversity_hop1 == 6
        assert report.diversity_hop2 == 2
        assert report.overall_diversity == 2
        assert report.zeta == specfun.meijer_g_zeta(1, 6)
        assert report.upsilon == analysis.upsilon(config.hop1, 16)
        assert report.array_gain_hop2 > 0

    def test_shadowing_limited_first_hop(self):
        config = SystemConfig.create(2, 1, 6, 6, omega1=1.0)

        report = analysis.gains(config)

        assert report.diversity_hop1 == 2
        assert report.overall_diversity == 2


class TestEndToEnd:
    def test_weaker_hop(self):
        assert analysis.e2e_sep(1e-3, 1e-5) == 1e-3
        assert analysis.e2e_sep(1e-6, 1e-5) == 1e-5

    @_pytest.mark.parametrize(("hop1", "hop2"), [(-0.1, 0.1), (0.1, 1.5)])
    def test_domain(self, hop1, hop2):
        with _pytest.raises(DomainError):
            analysis.e2e_sep(hop1, hop2)

    @_pytest.mark.parametrize(
        ("order", "expected"), [(2, 2.0), (4, 4.0), (16, 6.0)]
    )
    def test_theoretical_diversity(self, order, expected):
        # m_g = 1, m_h = 6, N_R = 6: diversity min(min(M, 6), 6)
        omegas = (1e5, 1e6)
        values = []
        for omega in omegas:
            config = SystemConfig.create(order, 1, 6, 6, omega1=omega)
            values.append(
                analysis.e2e_sep(
                    analysis.hop1_sep_closed(config),
                    min(1.0, analysis.hop2_sep_asymptotic(config)),
                )
            )

        assert _slope(values, omegas) == _pytest.approx(expected, abs=0.3)
