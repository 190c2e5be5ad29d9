import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polaron_spectra import cqed_me
from polaron_spectra.analysis_scenarios import cavity_to_zpl_ratio
from polaron_spectra.errors import ZeroLinewidth
from polaron_spectra.phonon_bath import (ALPHA_INAS_PS2, OMEGA_P_INAS, PhononBathParams, displacement_average,
                                         phase_function, phase_zero)
from polaron_spectra.photonic_reservoir import CrowBand, LorentzianCavity, golden_rule_rate, propagator
from polaron_spectra.reservoir_me import (ZplRates, absorption_spectrum, emission_spectrum_projected,
                                          polarization_spectrum, se_rate)
from polaron_spectra.analysis_scenarios import find_peaks_refined
from polaron_spectra.units_numerics import FrequencyGrid, Spectrum, mev_to_radps, radps_to_uev, uev_to_radps

from conftest import lorentzian


def test_phonon_free_purcell_rate(resonant_cavity, no_phonons):
    r = se_rate(resonant_cavity, no_phonons)
    assert radps_to_uev(r.rate) == pytest.approx(615.4, rel=1e-3)
    assert r.rate == pytest.approx(r.bare_rate, rel=1e-10)
    assert r.modification == pytest.approx(1.0)


@pytest.mark.parametrize("d_meV", [-2.0, -1.0, 1.0, 2.0])
def test_high_q_rate_matches_cqed_gamma_tilde(bath4k, d_meV):
    cav = LorentzianCavity.from_uev(d_meV, 100.0, 100.0)
    a = se_rate(cav, bath4k).rate
    b = cqed_me.gamma_tilde_P(cav, bath4k)
    assert a == pytest.approx(b, rel=0.05)


@pytest.mark.parametrize("d_meV", [-2.0, -1.0, 1.0, 2.0])
def test_rate_gap_is_the_cavity_damped_sideband(bath4k, d_meV):
    # gamma_tilde_P drops the cavity decay inside the phonon kernel; restoring it by
    # brute-force quadrature must account for the whole difference
    cav = LorentzianCavity.from_uev(d_meV, 100.0, 100.0)
    t = np.linspace(0.0, 40.0, 40001)
    phi = phase_function(t, bath4k)
    f = (np.exp(phi) - 1) * (np.exp(-0.5 * cav.kappa * t) - 1) * np.exp(-1j * cav.center * t)
    missing = 2 * displacement_average(bath4k) ** 2 * cav.g ** 2 * np.trapezoid(f.real, t)
    gap = se_rate(cav, bath4k).rate - cqed_me.gamma_tilde_P(cav, bath4k)
    assert gap == pytest.approx(missing, rel=1e-4)


def test_time_and_frequency_routes_agree(bath4k):
    cav = LorentzianCavity.from_uev(1.0, 300.0, 100.0)
    a = se_rate(cav, bath4k, route="time")
    b = se_rate(cav, bath4k, route="frequency")
    assert a.rate == pytest.approx(b.rate, rel=1e-3)
    assert a.lamb == pytest.approx(b.lamb, rel=1e-2, abs=1e-6)


def test_golden_rule_limit_without_phonons(no_phonons):
    crow = CrowBand.default()
    for qd in (crow.center, crow.center + 1.0, crow.upper + 0.5):
        assert se_rate(crow, no_phonons, qd).rate == pytest.approx(golden_rule_rate(qd, crow), rel=1e-2)


def test_crow_se_modification_signs():
    p40 = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, 40.0)
    crow = CrowBand.default()
    assert se_rate(crow, p40, crow.upper + mev_to_radps(1.0)).modification > 1
    assert se_rate(crow, p40, crow.upper - mev_to_radps(0.3)).modification < 1


def test_lorentzian_without_phonons(no_phonons):
    z = ZplRates.from_uev(5.0, 5.0)
    det = np.linspace(-0.2, 0.2, 81)
    s = polarization_spectrum(z, None, no_phonons, det)
    assert np.allclose(s.values, lorentzian(det, 0.5 * z.total), rtol=1e-12)


def test_red_sideband_stronger_at_low_temperature(bath4k):
    z = ZplRates.from_uev(5.0, 5.0)
    det = FrequencyGrid.from_mev(-4, 4, 1601).values
    s = polarization_spectrum(z, None, bath4k, det)
    zpl = lorentzian(det, 0.5 * z.total) * np.exp(-phase_zero(bath4k))
    side = s.values - zpl
    assert side[det < -0.3].sum() > side[det > 0.3].sum()


def test_zero_phonon_weight_sum_rule(bath4k):
    """The ZPL carries a fraction <B>^2 of the line; sidebands the rest."""
    z = ZplRates.from_uev(5.0, 5.0)
    det = np.linspace(-mev_to_radps(8), mev_to_radps(8), 16001)
    s = polarization_spectrum(z, None, bath4k, det)
    hw = 0.5 * z.total
    total = np.sum(0.5 * (s.values[1:] + s.values[:-1]) * np.diff(det))
    # the ZPL term is a unit-weight Lorentzian; its share inside the window is 2 arctan(D / hw)
    zpl = 2.0 * np.arctan(det[-1] / hw)
    frac = (total - zpl) / (total - zpl + np.pi)
    assert frac == pytest.approx(1 - np.exp(-phase_zero(bath4k)), rel=2e-2)


def test_split_and_direct_routes_agree(bath4k):
    z = ZplRates.from_uev(50.0, 50.0)
    det = np.linspace(-2, 2, 41)
    a = polarization_spectrum(z, None, bath4k, det, route="split").values
    b = polarization_spectrum(z, None, bath4k, det, route="direct").values
    assert np.max(np.abs(a - b)) < 2e-3 * a.max()


def test_absorption_mirrors_emission(bath4k, no_phonons):
    z = ZplRates.from_uev(5.0, 5.0)
    det = np.linspace(-5, 5, 201)
    em = polarization_spectrum(z, None, bath4k, det).normalized().values
    ab = absorption_spectrum(z, None, bath4k, det).normalized().values
    assert np.max(np.abs(ab - em[::-1])) < 1e-6
    assert ab[det > 0.5].sum() > ab[det < -0.5].sum()
    e0 = polarization_spectrum(z, None, no_phonons, det).values
    a0 = absorption_spectrum(z, None, no_phonons, det).values
    assert np.allclose(e0, a0, rtol=1e-12)


def test_zero_linewidth_rejected(bath4k):
    with pytest.raises(ZeroLinewidth):
        polarization_spectrum(ZplRates(), None, bath4k, np.array([0.0]))


def test_off_resonant_cavity_fed_only_with_phonons(bath4k, no_phonons):
    cav = LorentzianCavity.from_uev(-2.0, 180.0, 100.0)
    z = ZplRates.from_uev(5.0, 55.0)
    det = FrequencyGrid.from_mev(-3, 1, 2001)
    on = emission_spectrum_projected(cav, z, bath4k, det)
    off = emission_spectrum_projected(cav, z, no_phonons, det)
    r_on = cavity_to_zpl_ratio(on, cav.center, cav.kappa)
    r_off = cavity_to_zpl_ratio(off, cav.center, cav.kappa)
    assert r_on > 10 * r_off
    assert find_peaks_refined(on).count == 2


def test_crow_three_peaks_lower_edge_stronger():
    p40 = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, 40.0)
    crow = CrowBand.default()
    from polaron_spectra.analysis_scenarios import crow_spectrum, feeding_ratios
    s = crow_spectrum(crow, p40, ZplRates.from_uev(1.0, 1.0), crow.center)
    assert find_peaks_refined(s).count == 3
    ru, rl = feeding_ratios(s, crow, crow.center)
    assert rl > ru


def test_low_q_cavity_keeps_non_lorentzian_shape(bath4k):
    cav = LorentzianCavity.from_uev(-2.0, 2400.0, 100.0)
    z = ZplRates.from_uev(5.0, 55.0)
    det = FrequencyGrid.from_mev(-5, 3, 1601).values
    s = emission_spectrum_projected(cav, z, bath4k, det)
    # a plain Lorentzian ZPL times the filter leaves almost nothing 1 meV to the red
    plain = propagator(det, cav) * lorentzian(det, 0.5 * z.total)
    plain /= plain.max()
    k = np.argmin(np.abs(det - mev_to_radps(-1.0)))
    assert s.values[k] > 5 * plain[k]


@pytest.mark.parametrize("d_meV", [1.0, 2.0, 3.0, 4.0])
def test_red_cavity_fed_more_than_blue(bath4k, d_meV):
    z = ZplRates.from_uev(5.0, 55.0)
    ratios = []
    for sign in (-1, 1):
        cav = LorentzianCavity.from_uev(sign * d_meV, 65.0, 100.0)
        lo, hi = min(0, sign * d_meV) - 1, max(0, sign * d_meV) + 1
        s = emission_spectrum_projected(cav, z, bath4k, FrequencyGrid.from_mev(lo, hi, 2001))
        ratios.append(cavity_to_zpl_ratio(s, cav.center, cav.kappa))
    assert ratios[0] > ratios[1]


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3))
def test_normalization_invariance(scale):
    cav = LorentzianCavity.from_uev(1.0, 100.0, 100.0)
    z = ZplRates.from_uev(5.0, 55.0)
    p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, 4.0)
    det = np.linspace(-1, 3, 101)
    s0 = polarization_spectrum(z, se_rate(cav, p), p, det)
    a = Spectrum(det, propagator(det, cav) * s0.values).normalized().values
    b = Spectrum(det, scale * propagator(det, cav) * s0.values).normalized().values
    assert np.allclose(a, b, rtol=1e-14, atol=1e-16)


def test_rates_validation():
    with pytest.raises(ValueError):
        ZplRates(-1.0, 0.0, 0.0)
    z = ZplRates.from_uev(5, 55, 1)
    assert z.total == pytest.approx(uev_to_radps(61))
