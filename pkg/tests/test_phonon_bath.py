import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from polaron_spectra.errors import InsufficientModes, NegativeFrequency
from polaron_spectra.phonon_bath import (ALPHA_INAS_PS2, OMEGA_P_INAS, PhononBathParams,
                                         bath_correlation, discretize_modes, displacement_average,
                                         phase_function, phase_function_quad, phase_zero,
                                         polaron_green_functions, polaron_shift,
                                         polaron_shift_closed_form, spectral_density)
from polaron_spectra.reservoir_me import ZplRates
from polaron_spectra.cqed_me import weak_coupling_rates
from polaron_spectra.photonic_reservoir import LorentzianCavity
from polaron_spectra.units_numerics import KB_MEV_PER_K, HBAR_MEV_PS, mev_to_radps, phonon_kernel_integral
from polaron_spectra.phonon_bath import shared_bath


def test_spectral_density_values(bath4k):
    assert spectral_density(0.0, bath4k) == 0.0
    assert spectral_density(OMEGA_P_INAS, bath4k) == pytest.approx(0.12761, rel=1e-4)
    with pytest.raises(NegativeFrequency):
        spectral_density(-1.0, bath4k)


def test_spectral_density_peak_at_sqrt3_cutoff(bath4k):
    res = optimize.minimize_scalar(lambda w: -spectral_density(w, bath4k),
                                   bounds=(0.1, 5.0), method="bounded", options={"xatol": 1e-10})
    assert res.x == pytest.approx(np.sqrt(3) * OMEGA_P_INAS, rel=1e-6)


def test_phase_at_zero_temperature(bath0k):
    assert phase_zero(bath0k) == pytest.approx(ALPHA_INAS_PS2 * OMEGA_P_INAS ** 2, rel=1e-6)
    assert ALPHA_INAS_PS2 * OMEGA_P_INAS ** 2 == pytest.approx(0.138490, abs=1e-6)


def test_zero_temperature_phase_has_power_law_tail(bath0k):
    # at T = 0 the small-w end of the integrand leaves Re phi(t) ~ -alpha / t^2,
    # so phi(100 ps) is ~6e-6 rather than exponentially small
    for t in (50.0, 100.0):
        assert phase_function(t, bath0k).real == pytest.approx(-ALPHA_INAS_PS2 / t ** 2, rel=2e-2)


def test_phase_function_matches_direct_quadrature(bath4k):
    t = np.array([0.0, 0.3, 1.0, 2.5, 7.0])
    quad = np.array([phase_function_quad(x, bath4k) for x in t])
    assert np.allclose(phase_function(t, bath4k), quad, rtol=1e-7, atol=1e-10)


def test_phase_decays(bath4k):
    assert abs(phase_function(100.0, bath4k)) < 1e-6


def test_displacement_average(bath0k, bath4k, no_phonons):
    assert displacement_average(no_phonons) == 1.0
    assert displacement_average(bath0k) == pytest.approx(0.93310, abs=1e-5)
    assert displacement_average(bath4k) == pytest.approx(0.915, abs=0.005)


def test_bath_correlation_limits(bath0k, bath4k, no_phonons):
    assert bath_correlation(0.0, bath0k) == pytest.approx(1.0, abs=1e-14)
    assert np.exp(-phase_zero(bath0k)) == pytest.approx(0.87068, abs=1e-5)
    assert bath_correlation(100.0, bath0k).real == pytest.approx(0.87068, abs=2e-5)
    assert bath_correlation(100.0, bath4k) == pytest.approx(np.exp(-phase_zero(bath4k)), abs=1e-8)
    assert np.allclose(bath_correlation(np.linspace(0, 10, 7), no_phonons), 1.0)


def test_polaron_shift(bath4k, no_phonons):
    assert polaron_shift(no_phonons) == 0.0
    assert polaron_shift(bath4k) == pytest.approx(0.26371, abs=1e-5)
    assert polaron_shift(bath4k) * HBAR_MEV_PS == pytest.approx(0.17358, abs=1e-5)
    assert polaron_shift(bath4k) == pytest.approx(polaron_shift_closed_form(bath4k), rel=1e-6)
    doubled = PhononBathParams(2 * ALPHA_INAS_PS2, OMEGA_P_INAS, 4.0)
    assert polaron_shift(doubled) == pytest.approx(2 * polaron_shift(bath4k), rel=1e-9)


def test_polaron_green_functions(bath0k, bath4k, no_phonons):
    gg, gu = polaron_green_functions(0.0, bath0k)
    assert gg == pytest.approx(0.00836, abs=1e-5)
    assert gu == pytest.approx(0.12097, abs=1e-5)
    gg, gu = polaron_green_functions(100.0, bath4k)
    assert abs(gg) < 1e-8 and abs(gu) < 1e-6
    gg, gu = polaron_green_functions(np.linspace(0, 5, 6), no_phonons)
    assert np.all(gg == 0) and np.all(gu == 0)


def test_phase_time_reversal(bath0k):
    """phi(-t) from the defining integral is conj(phi(t))."""
    t = np.array([0.4, 1.3, 3.0])
    fwd = np.array([phase_function_quad(x, bath0k) for x in t])
    a, wp = bath0k.alpha, bath0k.omega_p
    from scipy import integrate
    # the defining integral evaluated at -t (phase_function_quad itself only takes t >= 0)
    back = np.array([integrate.quad(lambda w: a * w * np.exp(-w * w / (2 * wp * wp)) * np.cos(-w * x), 0, 12 * wp)[0]
                     - 1j * integrate.quad(lambda w: a * w * np.exp(-w * w / (2 * wp * wp)) * np.sin(-w * x), 0, 12 * wp)[0]
                     for x in t])
    assert np.allclose(back, np.conj(fwd), atol=1e-10)
    assert np.all(fwd.imag <= 0)


@pytest.mark.parametrize("T", [4.0, 40.0])
@pytest.mark.parametrize("d_meV", [0.5, 1.0, 2.0])
def test_detailed_balance_of_sideband_transform(T, d_meV):
    p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, T)
    bath = shared_bath(p)
    f = lambda t: np.expm1(bath.phi(t))
    d = mev_to_radps(d_meV)
    up = 2 * phonon_kernel_integral(f, d).real
    down = 2 * phonon_kernel_integral(f, -d).real
    assert up / down == pytest.approx(np.exp(-d_meV / (KB_MEV_PER_K * T)), rel=1e-3)


def test_discretization_sum_rules(bath0k, bath4k):
    modes = discretize_modes(bath0k, 200)
    assert np.sum(modes.coupling ** 2 / modes.omega ** 2) == pytest.approx(phase_zero(bath0k), rel=1e-2)
    modes4 = discretize_modes(bath4k, 200)
    assert np.sum(modes4.coupling ** 2 / modes4.omega) == pytest.approx(polaron_shift(bath4k), rel=1e-2)
    assert np.all(np.diff(modes.omega) > 0) and np.all(modes.omega > 0)


def test_discrete_phase_reconstruction(bath4k):
    modes = discretize_modes(bath4k, 200)
    t = np.linspace(0, 10, 201)
    cont = phase_function(t, bath4k)
    assert np.max(np.abs(modes.phase(t) - cont)) < 0.01 * abs(cont[0])


def test_discretization_edge_cases(no_phonons, bath4k):
    assert np.all(discretize_modes(no_phonons, 50).coupling == 0)
    with pytest.raises(InsufficientModes):
        discretize_modes(bath4k, 9)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.1, max_value=30.0), st.floats(min_value=0.01, max_value=10.0))
def test_occupation_is_bose(T, w):
    p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, T)
    modes = discretize_modes(p, 10, w_max=max(w, 4 * OMEGA_P_INAS))
    x = HBAR_MEV_PS * modes.omega / (KB_MEV_PER_K * T)
    assert np.allclose(modes.occupation, np.exp(-x) / -np.expm1(-x), rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.0, max_value=0.2), st.floats(min_value=0.0, max_value=50.0))
def test_displacement_average_in_unit_interval(alpha, T):
    b = displacement_average(PhononBathParams(alpha, OMEGA_P_INAS, T))
    assert 0.0 < b <= 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        PhononBathParams(-0.1, OMEGA_P_INAS, 4.0)
    with pytest.raises(ValueError):
        PhononBathParams(0.06, 0.0, 4.0)
    with pytest.raises(ValueError):
        PhononBathParams(0.06, 1.0, -1.0)


@pytest.mark.parametrize("T", [5e-324, 1e-300, 1e-13])
def test_vanishing_temperature_is_the_zero_temperature_bath(bath0k, T):
    tiny = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, T)
    assert phase_zero(tiny) == phase_zero(bath0k)
    assert displacement_average(tiny) == displacement_average(bath0k)
