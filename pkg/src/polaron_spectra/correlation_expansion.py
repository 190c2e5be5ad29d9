"""Second-order phonon correlation expansion on a discretized bath.

Every moment is of the form <Q F>_c, where Q is an emitter/cavity operator
(or a bilinear of them) and F is a phonon monomial with at most two factors:
1, b_q, b+_q, b_q b_m, b+_q b+_m and b_q b+_m.  Pure phonon moments are frozen
at their thermal values and three-phonon connected parts are dropped.

The same block structure serves two purposes:

* the one-operator hierarchy (Q in {sigma-, a}), which evolves two-time
  correlations in tau through the regression theorem;
* the two-operator hierarchy (Q in {s+s-, s+a, a+s-, a+a}), which supplies
  the seeds of those correlations, either as a pumped steady state or as the
  t-integral of an inverted-atom decay.

Both only differ in a small L x L system matrix and two coefficient vectors,
so a single right-hand side handles them.  The frame rotates at the bare
exciton frequency; spectra are reported relative to the polaron-shifted line.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import InsufficientModes, NoSteadyState, NonDecayingTrace
from .phonon_bath import DiscretizedPhononModes, PhononBathParams, discretize_modes
from .photonic_reservoir import LorentzianCavity, propagator
from .reservoir_me import ZplRates
from .units_numerics import (CorrelationTrace, FrequencyGrid, Spectrum, Trajectory,
                             half_fourier, integrate_ode)

SIGMA, CAVITY = 0, 1
# two-operator labels X+Y, in this order
PAIR_LABELS = ("s+s-", "s+a", "a+s-", "a+a")
_PAIRS = ((SIGMA, SIGMA), (SIGMA, CAVITY), (CAVITY, SIGMA), (CAVITY, CAVITY))


@dataclass(frozen=True)
class ExpansionConfig:
    n_modes: int = 150
    w_max: float | None = None         # defaults to 5 omega_p
    dt: float = 0.002                  # ps
    tau_end: float = 50.0              # first chunk; extended until the trace decays
    tau_max: float = 2000.0
    decay_floor: float = 1e-3
    route: str = "time"                # "time" (RK4 in tau) or "resolvent"

    def __post_init__(self):
        if self.n_modes < 10:
            raise InsufficientModes(f"need at least 10 phonon modes, got {self.n_modes}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.route not in ("time", "resolvent"):
            raise ValueError(f"unknown route {self.route!r}")


class BlockLayout:
    """Flat-vector packing of z (L), p, r (L x N) and P, R, T (L x N x N)."""

    def __init__(self, n_labels: int, n_modes: int):
        self.L, self.N = n_labels, n_modes
        L, N = n_labels, n_modes
        sizes = [L, L * N, L * N, L * N * N, L * N * N, L * N * N]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.size = int(self.offsets[-1])
        self._shapes = [(L,), (L, N), (L, N), (L, N, N), (L, N, N), (L, N, N)]

    def unpack(self, y):
        o = self.offsets
        return tuple(y[o[k]:o[k + 1]].reshape(s) for k, s in enumerate(self._shapes))

    def pack(self, parts):
        return np.concatenate([np.asarray(x, dtype=complex).ravel() for x in parts])

    def zeros(self):
        return np.zeros(self.size, dtype=complex)


@dataclass
class BlockHierarchy:
    """Linear map y -> dy/dt for one family of moments.

    system[l, l']: how the emitter/cavity part mixes labels (identical for all F).
    coupling[l]:   coefficient c of <Q B F> where B = sum_k lam_k (b_k + b+_k).
    emitter[l]:    1 when Q ends in sigma-, which makes db/dt = -i w b - i lam s+s-
                   act back on the moment.
    """
    modes: DiscretizedPhononModes
    system: np.ndarray
    coupling: np.ndarray
    emitter: np.ndarray
    source: np.ndarray | None = None     # inhomogeneous term (pump), flat
    layout: BlockLayout = field(init=False)
    _matrix: sparse.csr_matrix | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        self.system = np.asarray(self.system, dtype=complex)
        self.coupling = np.asarray(self.coupling, dtype=complex)
        self.emitter = np.asarray(self.emitter, dtype=float)
        self.layout = BlockLayout(self.system.shape[0], self.modes.n_modes)
        w = self.modes.omega
        self._rot_sum = w[:, None] + w[None, :]
        self._rot_diff = w[:, None] - w[None, :]

    @property
    def size(self):
        return self.layout.size

    @property
    def matrix(self) -> sparse.csr_matrix:
        if getattr(self, "_matrix", None) is None:
            self._matrix = self._assemble_sparse()
        return self._matrix

    def _assemble_sparse(self):
        """Same map as `apply_blocks`, written out as a CSR matrix."""
        N, L = self.modes.n_modes, self.layout.L
        lam = self.modes.coupling
        n = self.modes.occupation
        w = self.modes.omega
        c = sparse.diags(self.coupling)
        e = sparse.diags(self.emitter.astype(complex))
        S = sparse.csr_matrix(self.system)
        I_N = sparse.identity(N, format="csr")
        I_NN = sparse.identity(N * N, format="csr")
        col = lambda u: sparse.csr_matrix(np.asarray(u, dtype=complex)[:, None])
        row = lambda u: sparse.csr_matrix(np.asarray(u, dtype=complex)[None, :])
        K = sparse.kron
        rot1 = sparse.diags(np.tile(w, L))
        rsum = sparse.diags(np.tile((w[:, None] + w[None, :]).ravel(), L))
        rdif = sparse.diags(np.tile((w[:, None] - w[None, :]).ravel(), L))

        zz = S
        zp = K(c, row(lam))
        zr = zp
        pz = K(c, col(lam * n)) - 1j * K(e, col(lam))
        pp = K(S, I_N) - 1j * rot1
        pP = K(c, K(I_N, row(lam)))
        pT = pP
        rz = K(c, col(lam * (n + 1.0))) + 1j * K(e, col(lam))
        rr = K(S, I_N) + 1j * rot1
        rT = K(c, K(row(lam), I_N))
        rR = pP
        # X[q, m] fed by u_q v_m (left) or v_q u_m (right) of a vector v
        left = lambda u: K(col(u), I_N)
        right = lambda u: K(I_N, col(u))
        Pp = K(c, left(lam * n) + right(lam * n)) - 1j * K(e, left(lam) + right(lam))
        PP = K(S, I_NN) - 1j * rsum
        Rr = K(c, left(lam * (n + 1.0)) + right(lam * (n + 1.0))) + 1j * K(e, left(lam) + right(lam))
        RR = K(S, I_NN) + 1j * rsum
        Tp = K(c, right(lam * (n + 1.0))) + 1j * K(e, right(lam))
        Tr = K(c, left(lam * n)) - 1j * K(e, left(lam))
        TT = K(S, I_NN) - 1j * rdif
        blocks = [[zz, zp, zr, None, None, None],
                  [pz, pp, None, pP, None, pT],
                  [rz, None, rr, None, rR, rT],
                  [None, Pp, None, PP, None, None],
                  [None, None, Rr, None, RR, None],
                  [None, Tp, Tr, None, None, TT]]
        return sparse.bmat(blocks, format="csr")

    def apply(self, y, homogeneous=True):
        out = self.matrix @ y
        if not homogeneous and self.source is not None:
            out = out + self.source
        return out

    def apply_blocks(self, y, homogeneous=True):
        lay = self.layout
        z, p, r, P, R, T = lay.unpack(y)
        lam = self.modes.coupling
        n = self.modes.occupation
        w = self.modes.omega
        S = self.system
        c = self.coupling
        e = self.emitter
        mix = lambda X: np.tensordot(S, X, axes=(1, 0))
        c1, e1 = c[:, None], e[:, None]
        c2, e2 = c[:, None, None], e[:, None, None]

        dz = S @ z + c * (p @ lam + r @ lam)

        dp = (mix(p) - 1j * w * p
              + c1 * (P @ lam + T @ lam + (lam * n)[None, :] * z[:, None])
              - 1j * e1 * lam[None, :] * z[:, None])
        dr = (mix(r) + 1j * w * r
              + c1 * (np.einsum("lkq,k->lq", T, lam) + R @ lam
                      + (lam * (n + 1.0))[None, :] * z[:, None])
              + 1j * e1 * lam[None, :] * z[:, None])

        ln, ln1 = lam * n, lam * (n + 1.0)
        # outer(u, v)[l, q, m] = u_q v_{l, m}
        outer = lambda u, v: u[None, :, None] * v[:, None, :]
        sym = lambda X: X + X.transpose(0, 2, 1)

        dP = (mix(P) - 1j * self._rot_sum * P
              + c2 * sym(outer(ln, p)) - 1j * e2 * sym(outer(lam, p)))
        dR = (mix(R) + 1j * self._rot_sum * R
              + c2 * sym(outer(ln1, r)) + 1j * e2 * sym(outer(lam, r)))
        # T[q, m] = <Q b_q b+_m>_c
        p_q_lam_m = p[:, :, None] * lam[None, None, :]
        dT = (mix(T) - 1j * self._rot_diff * T
              + c2 * (p[:, :, None] * ln1[None, None, :] + outer(ln, r))
              - 1j * e2 * outer(lam, r) + 1j * e2 * p_q_lam_m)
        out = lay.pack((dz, dp, dr, dP, dR, dT))
        if not homogeneous and self.source is not None:
            out = out + self.source
        return out

    def __call__(self, t, y):
        return self.apply(y, homogeneous=False)

    # diagonal-in-F part of the generator, used to precondition solves
    def _diag_blocks(self, shift):
        """(L x L) blocks of (shift - generator) restricted to the F-diagonal part."""
        w = self.modes.omega
        L = self.layout.L
        eye = np.eye(L)
        rots = [np.zeros(1), -1j * w, 1j * w, -1j * self._rot_sum.ravel(),
                1j * self._rot_sum.ravel(), -1j * self._rot_diff.ravel()]
        return [np.linalg.inv(shift * eye[None] - (self.system[None] + rt[:, None, None] * eye[None]))
                for rt in rots]

    def preconditioner(self, shift):
        inv = self._diag_blocks(shift)
        lay = self.layout

        def solve(y):
            parts = lay.unpack(np.asarray(y, dtype=complex))
            out = []
            for blk, x in zip(inv, parts):
                flat = x.reshape(lay.L, -1)
                if blk.shape[0] == 1 and flat.shape[1] == 1:
                    out.append(blk[0] @ flat)
                else:
                    out.append(np.einsum("kij,jk->ik", blk, flat))
            return lay.pack(out)
        return solve

    def _two_phonon_inverse(self, shift):
        """Sparse inverse of (shift - generator) on the two-phonon blocks alone.

        Those blocks only mix labels entry by entry, so the inverse is a set of
        L x L blocks laid out along L^2 diagonals.
        """
        inv = self._diag_blocks(shift)[3:]
        L = self.layout.L
        mats = []
        for blk in inv:
            rows = [[sparse.diags(blk[:, i, j]) for j in range(L)] for i in range(L)]
            mats.append(sparse.bmat(rows, format="csr"))
        return sparse.block_diag(mats, format="csr")

    def solve_shifted(self, shift, rhs):
        """x with (shift - generator) x = rhs, exactly.

        The two-phonon blocks are eliminated through their entrywise inverse,
        leaving a dense system over the singlets and one-phonon vectors.
        """
        A = self.matrix
        cut = int(self.layout.offsets[3])
        n = self.size
        top = A[:cut]
        A11 = -top[:, :cut].toarray()
        A11[np.diag_indices(cut)] += shift
        A12 = -top[:, cut:]
        A21 = -A[cut:, :cut]
        G = self._two_phonon_inverse(shift)
        GA21 = (G @ A21).tocsr()
        schur = A11 - (A12 @ GA21).toarray()
        b = np.asarray(rhs, dtype=complex)
        b1, b2 = b[:cut], b[cut:]
        Gb2 = G @ b2
        x1 = np.linalg.solve(schur, b1 - A12 @ Gb2)
        x2 = Gb2 - GA21 @ x1
        x = np.concatenate([x1, x2])
        if not np.all(np.isfinite(x)):
            raise NoSteadyState("singular hierarchy solve")
        return x

    def solve_iterative(self, shift, rhs, tol=1e-10, maxiter=400):
        """Same solve by preconditioned GMRES; kept as an independent check."""
        n = self.size
        op = LinearOperator((n, n), matvec=lambda v: shift * v - self.apply(v), dtype=complex)
        pre = self.preconditioner(shift)
        M = LinearOperator((n, n), matvec=pre, dtype=complex)
        x, info = gmres(op, rhs, x0=pre(rhs), M=M, rtol=tol, atol=0.0, restart=60, maxiter=maxiter)
        if info != 0:
            raise NoSteadyState(f"hierarchy solve did not converge (info={info})")
        return x


def _polaron_shift(modes: DiscretizedPhononModes) -> float:
    return float(np.sum(modes.coupling ** 2 / modes.omega))


def _single_system(cav_bare_center, kappa, g, z: ZplRates):
    width = z.gamma0 + z.gamma_d + z.pump
    return np.array([[-0.5 * width, -1j * g],
                     [-1j * g, -(1j * cav_bare_center + 0.5 * kappa)]], dtype=complex)


def assemble_hierarchy(modes: DiscretizedPhononModes, cav: LorentzianCavity, z: ZplRates,
                       bare_detuning: float | None = None) -> BlockHierarchy:
    """One-operator hierarchy for <sigma- F>_c and <a F>_c.

    `cav.center` is read relative to the polaron-shifted exciton; the bare
    detuning entering the equations is that minus the mode-sum polaron shift,
    unless `bare_detuning` is given explicitly.
    """
    if modes.n_modes < 10:
        raise InsufficientModes(f"need at least 10 phonon modes, got {modes.n_modes}")
    d = cav.center - _polaron_shift(modes) if bare_detuning is None else bare_detuning
    M = _single_system(d, cav.kappa, cav.g, z)
    return BlockHierarchy(modes, M, coupling=[-1j, 0.0], emitter=[1.0, 0.0])


def assemble_pair_hierarchy(modes: DiscretizedPhononModes, cav: LorentzianCavity, z: ZplRates,
                            bare_detuning: float | None = None) -> BlockHierarchy:
    """Two-operator hierarchy for <X+ Y F>_c, labels ordered as PAIR_LABELS."""
    d = cav.center - _polaron_shift(modes) if bare_detuning is None else bare_detuning
    M = _single_system(d, cav.kappa, cav.g, z)
    S = np.zeros((4, 4), dtype=complex)
    for i, (x, y) in enumerate(_PAIRS):
        for j, (x2, y2) in enumerate(_PAIRS):
            if y == y2:
                S[i, j] += np.conj(M[x, x2])
            if x == x2:
                S[i, j] += M[y, y2]
    # the dephasing jump leaves the exciton population alone
    S[0, 0] += z.gamma_d
    coupling = [1j * ((x == SIGMA) - (y == SIGMA)) for x, y in _PAIRS]
    emitter = [float(y == SIGMA) for _, y in _PAIRS]
    h = BlockHierarchy(modes, S, coupling, emitter)
    if z.pump > 0:
        src = h.layout.zeros()
        src[0] = z.pump
        h.source = src
    return h


def propagate_one_time(rhs: BlockHierarchy, y0, t_end: float, dt: float,
                       observe=None, store_every: int = 1) -> Trajectory:
    """RK4 trajectory of the hierarchy (inhomogeneous source included)."""
    return integrate_ode(rhs, np.asarray(y0, dtype=complex), t_end, dt, observe, store_every)


def pumped_steady_state(pairs: BlockHierarchy, dt: float = 0.01, tol: float = 1e-8,
                        method: str = "solve", chunk: float = 10.0, t_max: float = 50000.0):
    """Steady state of the pumped two-operator hierarchy."""
    if pairs.source is None:
        raise NoSteadyState("no pump: the only steady state is the vacuum")
    if method == "solve":
        return pairs.solve_shifted(0.0, pairs.source)
    y = pairs.layout.zeros()
    n_chunk = int(round(chunk / dt))
    t = 0.0
    while t < t_max:
        y_prev = y
        y = _rk4_run(pairs, y, n_chunk, dt)
        t += chunk
        rel = np.max(np.abs(y - y_prev)) / max(np.max(np.abs(y)), 1e-300)
        if rel / chunk < tol:
            return y
    raise NoSteadyState("pumped hierarchy did not settle")


def _rk4_run(h: BlockHierarchy, y, n_steps, dt):
    for _ in range(n_steps):
        k1 = h(0.0, y)
        k2 = h(0.0, y + 0.5 * dt * k1)
        k3 = h(0.0, y + 0.5 * dt * k2)
        k4 = h(0.0, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise NoSteadyState("hierarchy state became non-finite")
    return y


def inverted_atom_seeds(pairs: BlockHierarchy):
    """int_0^inf <X+Y F>_c(t) dt after starting from s+s- = 1, everything else 0."""
    y0 = pairs.layout.zeros()
    y0[0] = 1.0
    return pairs.solve_shifted(0.0, y0)


def regression_seed(pair_state, layout_pairs: BlockLayout, spectator: int, single: BlockLayout):
    """Pick <X+ Y F>_c for fixed X = spectator into the one-operator layout."""
    parts = layout_pairs.unpack(pair_state)
    idx = [k for k, (x, _) in enumerate(_PAIRS) if x == spectator]
    # labels come ordered as Y = sigma, Y = a
    return single.pack([blk[idx] for blk in parts])


def regression_trace(single: BlockHierarchy, seed, target: int, dt: float, tau_end: float,
                     tau_max: float = 2000.0, floor: float = 1e-3) -> CorrelationTrace:
    """Forward correlation <X+(0) Y(tau)> by RK4 in tau, extended until it decays."""
    y = np.asarray(seed, dtype=complex)
    n_chunk = max(int(round(tau_end / dt)), 1)
    vals = [y[target]]
    peak = abs(vals[0])
    t = 0.0
    while True:
        block = np.empty(n_chunk, dtype=complex)
        for k in range(n_chunk):
            k1 = single.apply(y)
            k2 = single.apply(y + 0.5 * dt * k1)
            k3 = single.apply(y + 0.5 * dt * k2)
            k4 = single.apply(y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            block[k] = y[target]
        if not np.all(np.isfinite(block)):
            raise NonDecayingTrace("regression trace became non-finite")
        vals.extend(block)
        t += n_chunk * dt
        peak = max(peak, np.abs(block).max())
        if peak == 0 or np.abs(block[-max(n_chunk // 10, 1):]).max() < floor * peak:
            break
        if t >= tau_max:
            raise NonDecayingTrace(f"correlation still above {floor:g} of its peak at {t:.0f} ps")
    v = np.asarray(vals)
    return CorrelationTrace(np.arange(v.size) * dt, v)


def _resolvent_spectrum(single: BlockHierarchy, seed, target: int, det_bare):
    """Re int_0^inf conj<X+(0)Y(tau)> e^{-i d tau} dtau, exactly, via (i d' - L)^-1."""
    out = np.empty(len(det_bare))
    for k, d in enumerate(det_bare):
        # conj trace at offset d  <=>  forward trace transformed at -d, conjugated
        x = single.solve_shifted(-1j * d, seed)
        out[k] = np.conj(x[target]).real
    return out


@dataclass
class ExpansionResult:
    cavity: Spectrum        # coupled-mode spectrum
    green: Spectrum         # polarization spectrum times the cavity filter
    polarization: Spectrum  # unfiltered
    traces: dict


def two_time_spectrum(params: PhononBathParams, cav: LorentzianCavity, z: ZplRates, grid,
                      init: str = "inverted-atom", config: ExpansionConfig = ExpansionConfig(),
                      modes: DiscretizedPhononModes | None = None) -> ExpansionResult:
    """Coupled-mode and Green-function spectra from the expanded hierarchy.

    Offsets on `grid` are measured from the polaron-shifted exciton line.
    init="inverted-atom": seeds are the t-integrals of the second moments of an
    initially excited dot with an undisplaced thermal bath and no pump.
    init="steady-pump": seeds are the pumped steady state.
    """
    det = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    if modes is None:
        modes = discretize_modes(params, config.n_modes, config.w_max)
    if init == "inverted-atom":
        zz = ZplRates(z.gamma0, z.gamma_d, 0.0)
        pairs = assemble_pair_hierarchy(modes, cav, zz)
        seeds = inverted_atom_seeds(pairs)
    elif init == "steady-pump":
        zz = z
        pairs = assemble_pair_hierarchy(modes, cav, zz)
        seeds = pumped_steady_state(pairs)
    else:
        raise ValueError(f"unknown init {init!r}")
    single = assemble_hierarchy(modes, cav, zz)
    shift = _polaron_shift(modes)
    det_bare = det - shift
    out, traces = {}, {}
    for name, spectator in (("cavity", CAVITY), ("polarization", SIGMA)):
        seed = regression_seed(seeds, pairs.layout, spectator, single.layout)
        if config.route == "time":
            tr = regression_trace(single, seed, spectator, config.dt, config.tau_end,
                                  config.tau_max, config.decay_floor)
            traces[name] = tr
            vals = half_fourier(tr.conj(), det_bare, floor=config.decay_floor * 10).values
        else:
            vals = _resolvent_spectrum(single, seed, spectator, det_bare)
        out[name] = vals
    meta = {"n_modes": modes.n_modes, "init": init, "route": config.route, "shift": shift}
    cavity = Spectrum(det, out["cavity"], "CM-ce", dict(meta)).normalized()
    pol = Spectrum(det, out["polarization"], "S0-ce", dict(meta))
    green = Spectrum(det, propagator(det, cav) * pol.values, "G-ce", dict(meta)).normalized()
    return ExpansionResult(cavity, green, pol, traces)


def ibm_polarization_trace(modes: DiscretizedPhononModes, z: ZplRates, tau_end: float,
                           dt: float = 0.002) -> CorrelationTrace:
    """<s+(0) s-(tau)> for an isolated dot from the factorized initial state.

    Uses the hierarchy with the cavity switched off; meant for comparison with
    the exact independent-boson correlation.
    """
    cav = LorentzianCavity(0.0, 1.0, 0.0)
    single = assemble_hierarchy(modes, cav, z, bare_detuning=0.0)
    y = single.layout.zeros()
    y[SIGMA] = 1.0
    traj = integrate_ode(lambda t, s: single.apply(s), y, tau_end, dt,
                         observe=lambda s: s[SIGMA])
    return CorrelationTrace(traj.t, traj.y)
