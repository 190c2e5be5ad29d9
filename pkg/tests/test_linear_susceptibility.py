import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from polaron_spectra.analysis_scenarios import find_peaks_refined
from polaron_spectra.errors import ZeroLinewidth
from polaron_spectra.linear_susceptibility import (SusceptibilityParams, bare_susceptibility, cavity_spectrum,
                                                   full_susceptibility, phonon_self_energy,
                                                   rotating_susceptibility)
from polaron_spectra.phonon_bath import ALPHA_INAS_PS2, OMEGA_P_INAS, PhononBathParams, phase_function_quad, phase_zero
from polaron_spectra.photonic_reservoir import LorentzianCavity
from polaron_spectra.units_numerics import FrequencyGrid, mev_to_radps, uev_to_radps


@pytest.fixture(scope="module")
def dot():
    return SusceptibilityParams.from_uev(5.0, 55.0)


def test_zero_linewidth_rejected():
    with pytest.raises(ZeroLinewidth):
        SusceptibilityParams(0.0)


def test_transform_against_brute_force(bath4k, dot):
    hw = 0.5 * dot.gamma_x
    t = np.linspace(0.0, 30.0, 3001)
    phi = np.array([phase_function_quad(x, bath4k) for x in t])
    for d_meV in (-2.0, -1.0, 1.0, 2.0):
        d = mev_to_radps(d_meV)
        side = simpson(np.exp(-hw * t) * np.expm1(phi) * np.exp(1j * d * t), x=t)
        ref = 1j * np.exp(-phase_zero(bath4k)) * (1.0 / (hw - 1j * d) + side)
        got = rotating_susceptibility(np.array([d]), bath4k, dot)[0]
        assert abs(got - ref) / abs(ref) < 1e-5


def test_absorption_sideband_sits_on_the_blue_side(bath4k, dot):
    det = mev_to_radps(np.array([-1.0, 1.0]))
    red, blue = bare_susceptibility(det, bath4k, dot).values.imag
    assert blue > 3 * red


@settings(max_examples=15, deadline=None)
@given(temperature=st.floats(0.5, 50.0), d_meV=st.floats(-4.0, 4.0))
def test_absorption_is_nonnegative(dot, temperature, d_meV):
    p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, temperature)
    chi = rotating_susceptibility(np.array([mev_to_radps(d_meV)]), p, dot)[0]
    assert chi.imag > -1e-6 * abs(rotating_susceptibility(np.array([0.0]), p, dot)[0])


def test_self_energy_vanishes_without_phonons(no_phonons, dot):
    sigma = phonon_self_energy(FrequencyGrid.from_mev(-2, 2, 41), no_phonons, dot)
    assert np.max(np.abs(sigma)) < 1e-12


def test_full_susceptibility_without_cavity_is_near_the_rotating_form(bath4k, dot):
    det = FrequencyGrid.from_mev(-0.3, 0.3, 61).values
    full = full_susceptibility(det, bath4k, dot)
    rwa = rotating_susceptibility(det, bath4k, dot)
    # counter-rotating corrections are of order offset / optical frequency
    assert np.max(np.abs(full - rwa)) / np.max(np.abs(rwa)) < 1e-3


def test_phonon_free_cavity_spectrum_is_two_lorentzian(no_phonons):
    g, kappa, gx = uev_to_radps(100.0), uev_to_radps(65.0), uev_to_radps(60.0)
    s = SusceptibilityParams(gx, LorentzianCavity(0.0, kappa, g))
    grid = FrequencyGrid.from_mev(-0.4, 0.4, 401)
    spec = cavity_spectrum(grid, no_phonons, s)
    d = grid.values
    coupled = kappa * np.abs(g / ((d + 0.5j * kappa) * (d + 0.5j * gx) - g * g)) ** 2
    coupled /= coupled.max()
    assert np.max(np.abs(spec.values - coupled)) < 2e-3
    pk = find_peaks_refined(spec)
    assert pk.count == 2
    assert pk.heights[0] == pytest.approx(pk.heights[1], rel=1e-2)


def test_phonons_make_the_doublet_asymmetric(bath4k, resonant_cavity, dot):
    s = SusceptibilityParams(dot.gamma_x, resonant_cavity)
    pk = find_peaks_refined(cavity_spectrum(FrequencyGrid.from_mev(-0.4, 0.4, 401), bath4k, s))
    assert pk.count == 2 and abs(pk.heights[0] / pk.heights[1] - 1) > 0.02
