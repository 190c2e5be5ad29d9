import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polaron_spectra import cqed_me
from polaron_spectra.analysis_scenarios import compare_spectra, find_peaks_refined
from polaron_spectra.correlation_expansion import (CAVITY, PAIR_LABELS, SIGMA, BlockHierarchy, ExpansionConfig,
                                                   assemble_hierarchy, assemble_pair_hierarchy,
                                                   ibm_polarization_trace, inverted_atom_seeds,
                                                   propagate_one_time, pumped_steady_state, regression_seed,
                                                   two_time_spectrum)
from polaron_spectra.errors import InsufficientModes
from polaron_spectra.phonon_bath import DiscretizedPhononModes, discretize_modes, shared_bath
from polaron_spectra.photonic_reservoir import LorentzianCavity
from polaron_spectra.reservoir_me import ZplRates
from polaron_spectra.units_numerics import FrequencyGrid, uev_to_radps

from conftest import max_rel


def _small_modes(params, n=12):
    return discretize_modes(params, n)


def _single_mode_hierarchy(modes, det, kappa, g, z):
    system = [[-0.5 * z.total, -1j * g], [-1j * g, -(1j * det + 0.5 * kappa)]]
    return BlockHierarchy(modes, system, [-1j, 0.0], [1.0, 0.0])


# ---------------------------------------------------------------- exact few-mode oracle

def _exact_single_mode(omega, lam, nth, det, kappa, g, z, offsets, nmax=10):
    """Inverted-dot cavity spectrum from the full dot x cavity x phonon Liouvillian."""
    sm = np.kron(np.kron([[0, 1], [0, 0]], np.eye(2)), np.eye(nmax))
    a = np.kron(np.kron(np.eye(2), [[0, 1], [0, 0]]), np.eye(nmax))
    b = np.kron(np.eye(4), np.diag(np.sqrt(np.arange(1, nmax)), 1))
    sp, ad, bd = sm.T, a.T, b.T
    H = det * ad @ a + omega * bd @ b + g * (sp @ a + ad @ sm) + lam * sp @ sm @ (b + bd)
    dim = H.shape[0]
    eye = np.eye(dim)

    def dissipator(c, rate):
        cdc = c.T @ c
        return rate * (np.kron(c, c) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))

    L = (-1j * (np.kron(H, eye) - np.kron(eye, H.T)) + dissipator(a, kappa)
         + dissipator(sm, z.gamma0) + dissipator(sp @ sm, z.gamma_d))
    excitations = np.diag(sp @ sm + ad @ a).round().astype(int)
    one, zero = excitations == 1, excitations == 0
    pn = nth ** np.arange(nmax) / (1 + nth) ** (np.arange(nmax) + 1)
    rho0 = np.kron(np.kron(np.diag([0.0, 1.0]), np.diag([1.0, 0.0])), np.diag(pn / pn.sum()))
    m11 = np.outer(one, one).ravel()
    acc = np.zeros(dim * dim, dtype=complex)
    acc[m11] = np.linalg.solve(L[np.ix_(m11, m11)], -rho0.ravel()[m11])
    seed = (acc.reshape(dim, dim) @ ad).ravel()
    m10 = np.outer(one, zero).ravel()
    L10 = L[np.ix_(m10, m10)]
    out = []
    for d in offsets:
        y = np.zeros(dim * dim, dtype=complex)
        y[m10] = np.linalg.solve(-1j * d * np.eye(m10.sum()) - L10, seed[m10])
        out.append(np.trace(a @ y.reshape(dim, dim)).real)
    return np.array(out)


def _expanded_single_mode(omega, lam, nth, det, kappa, g, z, offsets):
    modes = DiscretizedPhononModes(np.array([omega]), np.array([lam]), np.array([nth]))
    cav = LorentzianCavity(0.0, kappa, g)
    pairs = assemble_pair_hierarchy(modes, cav, z, bare_detuning=det)
    single = _single_mode_hierarchy(modes, det, kappa, g, z)
    seed = regression_seed(inverted_atom_seeds(pairs), pairs.layout, CAVITY, single.layout)
    return np.array([single.solve_shifted(-1j * d, seed)[CAVITY].real for d in offsets])


def test_single_mode_against_exact_liouvillian():
    z = ZplRates(0.05, 0.05, 0.0)
    offsets = np.linspace(-2.5, 1.5, 81)
    errors = []
    for lam in (0.05, 0.1, 0.2):
        exact = _exact_single_mode(1.0, lam, 0.17, -0.2, 0.2, 0.3, z, offsets)
        ce = _expanded_single_mode(1.0, lam, 0.17, -0.2, 0.2, 0.3, z, offsets)
        errors.append(max_rel(ce, exact))
    assert errors[0] < 1e-5 and errors[1] < 1e-3 and errors[2] < 2e-2
    # dropped three-phonon correlations: the error grows much faster than lambda^2
    assert errors[1] / errors[0] > 16


# ---------------------------------------------------------------- hierarchy plumbing

def test_insufficient_modes(bath4k, resonant_cavity, dot_rates):
    with pytest.raises(InsufficientModes):
        ExpansionConfig(n_modes=5)
    tiny = DiscretizedPhononModes(np.ones(3), np.ones(3), np.zeros(3))
    with pytest.raises(InsufficientModes):
        assemble_hierarchy(tiny, resonant_cavity, dot_rates)


@pytest.mark.parametrize("pairs", [False, True])
def test_sparse_matrix_matches_block_apply(bath4k, resonant_cavity, dot_rates, pairs):
    modes = _small_modes(bath4k)
    build = assemble_pair_hierarchy if pairs else assemble_hierarchy
    h = build(modes, LorentzianCavity.from_uev(0.3, 65.0, 100.0), dot_rates)
    rng = np.random.default_rng(5)
    y = rng.normal(size=h.size) + 1j * rng.normal(size=h.size)
    assert np.allclose(h.apply(y), h.apply_blocks(y), rtol=1e-12, atol=1e-12)


def test_schur_solve_matches_gmres_and_sparse_lu(bath4k, dot_rates):
    from scipy.sparse import identity
    from scipy.sparse.linalg import spsolve
    h = assemble_hierarchy(_small_modes(bath4k, 16), LorentzianCavity.from_uev(0.3, 65.0, 100.0), dot_rates)
    rng = np.random.default_rng(7)
    b = rng.normal(size=h.size) + 1j * rng.normal(size=h.size)
    shift = -0.3j
    x = h.solve_shifted(shift, b)
    assert np.allclose(x, h.solve_iterative(shift, b), rtol=1e-7, atol=1e-9)
    lu = spsolve((shift * identity(h.size) - h.matrix).tocsc(), b)
    assert np.allclose(x, lu, rtol=1e-9, atol=1e-11)


def test_source_terms_from_a_bare_singlet(bath4k, resonant_cavity, dot_rates):
    modes = _small_modes(bath4k)
    h = assemble_hierarchy(modes, resonant_cavity, dot_rates)
    y = h.layout.zeros()
    y[SIGMA] = 1.0
    _, dp, dr, dP, dR, dT = h.layout.unpack(h.apply(y))
    lam, n = modes.coupling, modes.occupation
    assert np.allclose(dp[SIGMA], -1j * lam * (n + 1))
    assert np.allclose(dr[SIGMA], -1j * lam * n)
    assert np.allclose(dp[CAVITY], 0) and np.allclose(dr[CAVITY], 0)
    assert not dP.any() and not dR.any() and not dT.any()


def test_vacuum_stays_vacuum(bath4k, resonant_cavity, dot_rates):
    h = assemble_hierarchy(_small_modes(bath4k), resonant_cavity, dot_rates)
    traj = propagate_one_time(h, h.layout.zeros(), 1.0, 0.01)
    assert not np.any(traj.y[-1])


def test_lone_cavity_decays_at_half_kappa(no_phonons):
    cav = LorentzianCavity.from_uev(0.0, 65.0, 0.0)
    h = assemble_hierarchy(_small_modes(no_phonons), cav, ZplRates(0.0, 0.0))
    y = h.layout.zeros()
    y[CAVITY] = 1.0
    traj = propagate_one_time(h, y, 20.0, 0.01, observe=lambda s: s[CAVITY])
    rate = -np.log(abs(traj.y[-1])) / traj.t[-1]
    assert rate == pytest.approx(0.5 * cav.kappa, rel=1e-3)


@settings(max_examples=10, deadline=None)
@given(scale=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_linearity_of_the_regression(bath4k, dot_rates, scale):
    h = assemble_hierarchy(_small_modes(bath4k), LorentzianCavity.from_uev(0.1, 65.0, 100.0), dot_rates)
    y = h.layout.zeros()
    y[SIGMA] = 1.0
    base = h.solve_shifted(-0.2j, y)
    assert np.allclose(h.solve_shifted(-0.2j, scale * y), scale * base, rtol=1e-10, atol=1e-14)


def _swap(label):
    x, y = label.split("+")
    return f"{y[0]}+{x}-" if x == "s" else f"{y[0]}+{x}"


@pytest.mark.parametrize("init", ["inverted", "pumped"])
def test_conjugate_pair_relations(bath4k, init):
    modes = _small_modes(bath4k)
    cav = LorentzianCavity.from_uev(0.3, 65.0, 100.0)
    if init == "inverted":
        pairs = assemble_pair_hierarchy(modes, cav, ZplRates.from_uev(5.0, 55.0))
        state = inverted_atom_seeds(pairs)
    else:
        pairs = assemble_pair_hierarchy(modes, cav, ZplRates.from_uev(5.0, 55.0, 1.0))
        state = pumped_steady_state(pairs)
    z, p, r, P, R, T = pairs.layout.unpack(state)
    idx = {lab: k for k, lab in enumerate(PAIR_LABELS)}
    partner = {"s+s-": "s+s-", "a+a": "a+a", "s+a": "a+s-", "a+s-": "s+a"}
    for lab, k in idx.items():
        j = idx[partner[lab]]
        assert np.conj(z[k]) == pytest.approx(z[j], abs=1e-12)
        assert np.allclose(np.conj(p[k]), r[j], atol=1e-12)
        assert np.allclose(np.conj(P[k]), R[j], atol=1e-12)
        assert np.allclose(np.conj(T[k]), T[j].T, atol=1e-12)
    # like-operator blocks are symmetric
    assert np.allclose(P, P.transpose(0, 2, 1), atol=1e-12)


def test_pumped_steady_state_time_vs_solve(bath4k):
    pairs = assemble_pair_hierarchy(_small_modes(bath4k), LorentzianCavity.from_uev(0.3, 200.0, 100.0),
                                    ZplRates.from_uev(20.0, 100.0, 2.0))
    a = pumped_steady_state(pairs)
    b = pumped_steady_state(pairs, method="time", dt=0.01, tol=1e-9)
    assert max_rel(b[:4], a[:4]) < 1e-4


# ---------------------------------------------------------------- physics limits

def test_no_phonons_reduces_to_jaynes_cummings(no_phonons, resonant_cavity, dot_rates):
    grid = FrequencyGrid.from_mev(-0.3, 0.3, 241)
    res = two_time_spectrum(no_phonons, resonant_cavity, dot_rates, grid,
                            config=ExpansionConfig(n_modes=12, route="resolvent"))
    pk = find_peaks_refined(res.cavity)
    assert pk.count == 2
    assert pk.heights[0] == pytest.approx(pk.heights[1], rel=1e-6)
    assert pk.positions_meV[0] == pytest.approx(-pk.positions_meV[1], abs=1e-6)
    # same physics as the phonon-free master equation from an inverted dot
    gen = cqed_me.build_liouvillian(resonant_cavity, no_phonons, dot_rates)
    assert compare_spectra(res.cavity, cqed_me.inverted_atom_spectrum(gen, grid)).max_abs < 2e-3


def test_pumped_seeds_match_master_equation_without_phonons(no_phonons):
    cav = LorentzianCavity.from_uev(0.2, 65.0, 100.0)
    z = ZplRates.from_uev(5.0, 55.0, 0.05)
    grid = FrequencyGrid.from_mev(-0.3, 0.5, 161)
    res = two_time_spectrum(no_phonons, cav, z, grid, init="steady-pump",
                            config=ExpansionConfig(n_modes=12, route="resolvent"))
    ref = cqed_me.coupled_mode_spectrum(cqed_me.build_liouvillian(cav, no_phonons, z), grid)
    assert compare_spectra(res.cavity, ref).max_abs < 5e-3


def test_time_and_resolvent_routes_agree(bath4k):
    cav = LorentzianCavity.from_uev(0.0, 200.0, 100.0)
    z = ZplRates.from_uev(20.0, 150.0)
    grid = FrequencyGrid.from_mev(-0.5, 0.5, 101)
    cfg = dict(n_modes=12, dt=0.005)
    a = two_time_spectrum(bath4k, cav, z, grid, config=ExpansionConfig(route="time", **cfg))
    b = two_time_spectrum(bath4k, cav, z, grid, config=ExpansionConfig(route="resolvent", **cfg))
    assert compare_spectra(a.cavity, b.cavity).max_abs < 1e-2
    assert compare_spectra(a.green, b.green).max_abs < 1e-2


@pytest.mark.parametrize("g", [50.0, 100.0])
def test_green_and_coupled_mode_coincide(bath4k, dot_rates, g):
    grid = FrequencyGrid.from_mev(-0.4, 0.4, 161)
    res = two_time_spectrum(bath4k, LorentzianCavity.from_uev(0.0, 65.0, g), dot_rates, grid,
                            config=ExpansionConfig(n_modes=60, route="resolvent"))
    assert compare_spectra(res.cavity, res.green).max_abs < 1e-2


def test_independent_boson_oracle_at_zero_temperature(bath0k, dot_rates):
    modes = discretize_modes(bath0k, 200)
    tr = ibm_polarization_trace(modes, dot_rates, 10.0)
    bath = shared_bath(bath0k)
    shift = np.sum(modes.coupling ** 2 / modes.omega)
    exact = np.exp(-0.5 * dot_rates.total * tr.tau + bath.phi(tr.tau) - bath.phi0 + 1j * shift * tr.tau)
    assert np.max(np.abs(tr.values - exact)) < 0.03


def test_mode_number_convergence_of_the_polarization(bath4k, dot_rates):
    values = []
    for n in (200, 400):
        tr = ibm_polarization_trace(discretize_modes(bath4k, n), dot_rates, 5.0, dt=0.004)
        values.append(tr.values[-1])
    assert abs(values[1] - values[0]) / abs(values[1]) < 1e-2


@pytest.fixture(scope="module")
def fig4_spectra(bath4k, resonant_cavity, dot_rates):
    grid = FrequencyGrid.from_mev(-0.4, 0.4, 321)
    ce = two_time_spectrum(bath4k, resonant_cavity, dot_rates, grid,
                           config=ExpansionConfig(n_modes=150, route="resolvent")).cavity
    zp = ZplRates.from_uev(5.0, 55.0, 0.05)
    wea = cqed_me.wea_spectrum(cqed_me.scattering_rates(resonant_cavity, bath4k), resonant_cavity, zp, grid)
    return grid, ce, wea


def test_resonant_doublet_against_weak_excitation(fig4_spectra):
    _, ce, wea = fig4_spectra
    pk = find_peaks_refined(ce)
    assert pk.count == 2 and abs(pk.heights[0] / pk.heights[1] - 1) > 0.02
    assert compare_spectra(ce, wea).max_abs < 0.05


def test_mode_number_convergence_of_the_doublet(bath4k, resonant_cavity, dot_rates, fig4_spectra):
    grid, ce, _ = fig4_spectra
    coarse = two_time_spectrum(bath4k, resonant_cavity, dot_rates, grid,
                               config=ExpansionConfig(n_modes=75, route="resolvent")).cavity
    assert compare_spectra(coarse, ce).max_abs < 0.02
