"""Linear analysis: master eigensolves, parameter sweeps, exceptional points
and Jordan-block enforcement.

Master spectra are bi-normalized (X* B Y = I) triplets over the augmented
first-order form of the model; for second-order mechanical systems the
eigenvectors are stored stacked as [displacement; velocity] and the
velocity part is tied analytically to the displacement part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .models.dae import FirstOrderDAE


class SpectralError(RuntimeError):
    pass


class JordanEnforcementError(RuntimeError):
    pass


class TrackingError(RuntimeError):
    pass


@dataclass
class Spectrum:
    """Master eigen-triplet of the augmented system.

    lam holds the diagonal of the reduced linear dynamics Lam; Lam carries
    the imposed off-diagonal couplings when Jordan pairs are declared.  The
    parameter eigenvector Ypar is the state part of the mode attached to
    the control parameter (its parameter component is fixed to one and its
    eigenvalue is exactly zero).
    """

    lam: np.ndarray
    Lam: np.ndarray
    Y: np.ndarray
    X: np.ndarray
    Ypar: np.ndarray
    conj_map: np.ndarray | None = None
    jordan_pairs: list = field(default_factory=list)
    n_disp: int | None = None
    ops: dict = field(default_factory=dict)

    @property
    def d(self):
        return len(self.lam)

    @property
    def dim(self):
        return self.Y.shape[0]

    def Yu(self):
        if self.n_disp is None:
            raise SpectralError("not a second-order spectrum")
        return self.Y[: self.n_disp]

    def Xv(self):
        if self.n_disp is None:
            raise SpectralError("not a second-order spectrum")
        return self.X[self.n_disp:]

    def first_order_operators(self):
        """(B, At) of the underlying first-order form, dense."""
        if "B" in self.ops and "At" in self.ops:
            return np.asarray(self.ops["B"]), np.asarray(self.ops["At"])
        M = np.asarray(self.ops["M"].todense() if sp.issparse(self.ops["M"]) else self.ops["M"])
        C = np.asarray(self.ops["C"].todense() if sp.issparse(self.ops["C"]) else self.ops["C"])
        Kt = np.asarray(self.ops["Kt"].todense() if sp.issparse(self.ops["Kt"]) else self.ops["Kt"])
        n = M.shape[0]
        B = np.zeros((2 * n, 2 * n))
        B[:n, :n] = M
        B[n:, n:] = M
        At = np.zeros((2 * n, 2 * n))
        At[:n, n:] = M
        At[n:, :n] = -Kt
        At[n:, n:] = -C
        return B, At

    def copy(self):
        return Spectrum(self.lam.copy(), self.Lam.copy(), self.Y.copy(), self.X.copy(),
                        self.Ypar.copy(),
                        None if self.conj_map is None else self.conj_map.copy(),
                        list(self.jordan_pairs), self.n_disp, dict(self.ops))


def modal_assurance(a, b):
    """|a* b|^2 / (|a|^2 |b|^2), the eigenvector correlation used for tracking."""
    num = abs(np.vdot(a, b)) ** 2
    den = (np.vdot(a, a).real * np.vdot(b, b).real)
    return num / den if den > 0 else 0.0


# -- raw pencil solves --------------------------------------------------------

def _dense_pencil_eig(At, B):
    w, vl, vr = sla.eig(At, B, left=True, right=True)
    keep = np.isfinite(w)
    return w[keep], vl[:, keep], vr[:, keep]


def _quadratic_eig_dense(M, C, K):
    """All finite eigenpairs of (lam^2 M + lam C + K) u = 0 plus left vectors."""
    n = M.shape[0]
    A1 = np.block([[np.zeros((n, n)), M], [-K, -C]])
    B1 = np.block([[M, np.zeros((n, n))], [np.zeros((n, n)), M]])
    return _dense_pencil_eig(A1, B1)


def _quadratic_eig_sparse(M, C, K, k, sigma):
    """Subset of the quadratic spectrum near `sigma` by shift-invert."""
    n = M.shape[0]
    M = sp.csc_matrix(M)
    C = sp.csc_matrix(C)
    K = sp.csc_matrix(K)
    Z = sp.csc_matrix((n, n))
    A1 = sp.bmat([[Z, M], [-K, -C]], format="csc")
    B1 = sp.bmat([[M, Z], [Z, M]], format="csc")
    w, vr = spla.eigs(A1, k=k, M=B1, sigma=sigma)
    wl, ul = spla.eigs(A1.T, k=k, M=B1.T, sigma=sigma)
    # left vectors of the original pencil are conjugates of right vectors of
    # the transposed one; match by eigenvalue
    vl = np.zeros_like(ul)
    used = set()
    for s in range(len(w)):
        dist = np.abs(wl - w[s])
        for idx in np.argsort(dist):
            if idx not in used:
                used.add(idx)
                vl[:, s] = np.conj(ul[:, idx])
                break
    return w, vl, vr


def _canonicalize(vecs, disp_idx):
    """Unit norm on the displacement block, largest component real positive."""
    out = vecs.copy()
    for s in range(out.shape[1]):
        blk = out[disp_idx, s]
        nrm = np.linalg.norm(blk)
        if nrm == 0:
            blk = out[:, s]
            nrm = np.linalg.norm(blk)
        k = int(np.argmax(np.abs(blk)))
        phase = blk[k] / abs(blk[k])
        out[:, s] = out[:, s] / (nrm * phase)
    return out


def _binormalize(X, Y, Bmat):
    """Scale left vectors so that X* B Y has unit diagonal.

    Near-defective pairs have X_s* B Y_s ~ 0; those columns get a floored
    scaling and are meaningful only after Jordan enforcement.
    """
    X = X.copy()
    BY = Bmat @ Y
    for s in range(X.shape[1]):
        c = np.vdot(X[:, s], BY[:, s])
        floor = 1e-13 * max(np.linalg.norm(X[:, s]) * np.linalg.norm(BY[:, s]), 1e-300)
        if abs(c) < floor:
            c = floor if c == 0 else c / abs(c) * floor
        X[:, s] = X[:, s] / np.conj(c)
    return X


def _select_masters(w, n_modes, im_floor=1e-9):
    """Representatives (Im > 0) of the master modes: the largest-real-part
    mode plus, for two-mode runs, the distinct mode with closest |Im|."""
    scale = max(np.max(np.abs(w)), 1.0)
    osc = np.where(w.imag > im_floor * scale)[0]
    if len(osc) == 0:
        raise SpectralError("no oscillatory modes: leading eigenvalue is non-oscillatory")
    lead = osc[np.argmax(w[osc].real)]
    if n_modes == 1:
        return [lead]
    rest = [i for i in osc if i != lead and abs(w[i] - w[lead]) > 0]
    if not rest:
        raise SpectralError("no companion mode available for the two-mode strategy")
    comp = min(rest, key=lambda i: abs(abs(w[i].imag) - abs(w[lead].imag)))
    return [lead, comp]


def _assemble_conjugate_masters(w, vl, vr, reps, Bmat, disp_idx):
    """Stack [lam, conj(lam)] per representative with exact conjugate vectors."""
    d = 2 * len(reps)
    D = vr.shape[0]
    lam = np.zeros(d, dtype=complex)
    Y = np.zeros((D, d), dtype=complex)
    X = np.zeros((D, d), dtype=complex)
    for m, idx in enumerate(reps):
        lam[2 * m] = w[idx]
        lam[2 * m + 1] = np.conj(w[idx])
        Y[:, 2 * m] = vr[:, idx]
        X[:, 2 * m] = vl[:, idx]
    Y[:, ::2] = _canonicalize(Y[:, ::2], disp_idx)
    for m in range(len(reps)):
        Y[:, 2 * m + 1] = np.conj(Y[:, 2 * m])
        X[:, 2 * m + 1] = np.conj(X[:, 2 * m])
    X = _binormalize(X, Y, Bmat)
    conj_map = np.arange(d)
    conj_map[::2] += 1
    conj_map[1::2] -= 1
    return lam, Y, X, conj_map


def solve_master_eigen(system, d):
    """Master spectrum of a FirstOrderDAE or a second-order model.

    d counts complex master coordinates including conjugates (2 for the
    one-mode strategy, 4 for the two-mode one).  Eigenvalues are ordered
    [lam1, conj lam1(, lam2, conj lam2)] with lam1 the largest-real-part
    mode, and bi-normalized to X* B Y = I.
    """
    if d not in (2, 4):
        raise ValueError("d must be 2 (one master mode) or 4 (two master modes)")
    n_modes = d // 2

    if isinstance(system, FirstOrderDAE):
        At = system.tangent_matrix()
        B = system.B
        w, vl, vr = _dense_pencil_eig(At, B)
        reps = _select_masters(w, n_modes)
        lam, Y, X, conj_map = _assemble_conjugate_masters(
            w, vl, vr, reps, B, np.asarray(system.displacement_indices))
        Ypar = parameter_eigenvector(system)
        return Spectrum(lam, np.diag(lam), Y, X, Ypar, conj_map,
                        ops={"B": B, "At": At})

    # second-order mechanical system
    M = system.mass()
    C = system.damping()
    Kt = system.tangent_stiffness()
    n = M.shape[0]
    dense = not sp.issparse(M) and n <= 60
    if dense:
        w, vl, vr = _quadratic_eig_dense(np.asarray(M), np.asarray(C), np.asarray(Kt))
    else:
        sigma = system.shift_guess() if hasattr(system, "shift_guess") else 1.0j
        w, vl, vr = _quadratic_eig_sparse(M, C, Kt, k=max(8, 2 * d), sigma=sigma)
    reps = _select_masters(w, n_modes)
    Bmat = sp.bmat([[sp.csc_matrix(M), None], [None, sp.csc_matrix(M)]], format="csc") \
        if sp.issparse(M) else np.block([[np.asarray(M), np.zeros((n, n))],
                                         [np.zeros((n, n)), np.asarray(M)]])
    lam, Y, X, conj_map = _assemble_conjugate_masters(w, vl, vr, reps, Bmat, np.arange(n))
    # tie velocities analytically to displacements
    for s in range(d):
        Y[n:, s] = lam[s] * Y[:n, s]
    X = _binormalize(X, Y, Bmat)
    Ypar = parameter_eigenvector(system)
    return Spectrum(lam, np.diag(lam), Y, X, Ypar, conj_map, n_disp=n,
                    ops={"M": M, "C": C, "Kt": Kt})


def solve_pencil_spectrum(At, B, d):
    """Spectrum of a bare matrix pencil, top-d modes by descending real part.

    No conjugate pairing is imposed; intended for generic systems and the
    Jordan enforcement tests.
    """
    At = np.asarray(At, dtype=float)
    B = np.asarray(B, dtype=float)
    w, vl, vr = _dense_pencil_eig(At, B)
    order = np.lexsort((np.abs(w.imag), -w.real))[:d]
    lam = w[order]
    Y = _canonicalize(vr[:, order].astype(complex), np.arange(At.shape[0]))
    X = _binormalize(vl[:, order].astype(complex), Y, B)
    return Spectrum(lam, np.diag(lam), Y, X, np.zeros(At.shape[0], dtype=complex),
                    ops={"B": B, "At": At})


def parameter_eigenvector(system):
    """State part of the zero-eigenvalue mode attached to the parameter.

    Solves A_t Ypar = -A_0 (its parameter component is one by convention);
    for second-order systems this is the static deflection [Kt^-1 Rt; 0].
    """
    if isinstance(system, FirstOrderDAE):
        At = system.tangent_matrix()
        A0 = system.parameter_column()
        try:
            return sla.solve(At, -A0)
        except sla.LinAlgError as exc:
            w = sla.eigvals(At, system.B)
            w = w[np.isfinite(w)]
            near = w[np.argmin(np.abs(w))]
            raise SpectralError(
                f"A_t singular: eigenvalue {near:.3e} is at/near zero") from exc
    Kt = system.tangent_stiffness()
    Rt = system.rt()
    n = Kt.shape[0]
    if sp.issparse(Kt):
        u = spla.spsolve(sp.csc_matrix(Kt), Rt)
    else:
        u = sla.solve(np.asarray(Kt), Rt)
    out = np.zeros(2 * n, dtype=complex)
    out[:n] = u
    return out


# -- parameter sweeps ---------------------------------------------------------

@dataclass
class EigenTrajectory:
    P: np.ndarray
    lam: np.ndarray           # (npoints, ntrack), tracked mode identity
    events: dict
    warnings: list = field(default_factory=list)

    def to_rows(self):
        rows = []
        for ip, P in enumerate(self.P):
            for mode in range(self.lam.shape[1]):
                lam = self.lam[ip, mode]
                rows.append((P, mode, lam.real, lam.imag))
        return rows


def _pencil_eigs_at(model, P, k=None, sigma=None):
    M, C, K = model.linear_pencil(P)
    if sp.issparse(M) or M.shape[0] > 60:
        w, _, vr = _quadratic_eig_sparse(M, C, K, k=k or 8, sigma=sigma or 1.0j)
    else:
        w, _, vr = _quadratic_eig_dense(np.asarray(M), np.asarray(C), np.asarray(K))
    return w, vr


def _max_real(model, P, **kw):
    w, _ = _pencil_eigs_at(model, P, **kw)
    return float(np.max(w.real))


def _pair_gap(model, P, **kw):
    """Smallest eigenvalue distance among distinct upper-half-plane modes."""
    w, _ = _pencil_eigs_at(model, P, **kw)
    scale = max(np.max(np.abs(w)), 1e-30)
    up = np.sort_complex(w[w.imag > 1e-12 * scale])
    if len(up) < 2:
        return np.inf, scale
    gaps = [abs(up[a] - up[b]) for a in range(len(up)) for b in range(a + 1, len(up))]
    return float(min(gaps)), float(scale)


def _bisect(f, a, b, xtol, max_iter=200):
    fa = f(a)
    fb = f(b)
    if fa * fb > 0:
        raise SpectralError(f"no sign change in [{a}, {b}]")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
        if abs(b - a) <= xtol:
            break
    return 0.5 * (a + b)


def _golden_min(f, a, b, xtol, max_iter=200):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc, fd = f(c), f(d_)
    for _ in range(max_iter):
        if abs(b - a) <= xtol:
            break
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + invphi * (b - a)
            fd = f(d_)
    x = 0.5 * (a + b)
    return x, f(x)


def eigen_sweep(model, param_range, n_points, n_track=None, mac_threshold=0.8,
                sparse_k=8, sigma=None):
    """Track the spectrum over a load range and locate P_c, P_H, P_d.

    Mode identity is maintained by greedy modal-assurance matching between
    neighbouring grid points; events are refined with fresh solves (gap
    minimization for the coalescence, bisection for the Hopf and divergence
    points), so they do not depend on the tracking.
    """
    P0, P1 = param_range
    grid = np.linspace(P0, P1, n_points)
    kw = dict(k=sparse_k, sigma=sigma)
    warnings = []

    w, vr = _pencil_eigs_at(model, grid[0], **kw)
    order = np.lexsort((-w.imag, np.abs(w.imag)))
    if n_track is None:
        n_track = len(w)
    order = order[:n_track]
    lam_rows = [w[order]]
    vec_prev = vr[:, order]
    raw = [(w, vr)]

    for P in grid[1:]:
        w, vr = _pencil_eigs_at(model, P, **kw)
        cols = []
        used = set()
        for m in range(n_track):
            best, best_mac = None, -1.0
            for cand in range(len(w)):
                if cand in used:
                    continue
                macv = modal_assurance(vec_prev[:, m], vr[:, cand])
                if macv > best_mac:
                    best, best_mac = cand, macv
            if best_mac < mac_threshold:
                warnings.append(
                    f"mode tracking weak at P = {P:.6g} (mode {m}, MAC = {best_mac:.3f})")
            used.add(best)
            cols.append(best)
        lam_rows.append(w[cols])
        vec_prev = vr[:, cols]
        raw.append((w, vr))

    lam = np.array(lam_rows)
    events = {}
    scale0 = max(np.max(np.abs(lam[0])), 1.0)
    re_thr = 1e-11 * scale0

    # Hopf point: sign change of the maximum real part
    maxre = np.array([np.max(rw[0].real) for rw in raw]) - re_thr
    events["P_H"] = None
    for i in range(len(grid) - 1):
        if maxre[i] < 0 <= maxre[i + 1]:
            f = lambda P: _max_real(model, P, **kw) - re_thr
            events["P_H"] = _bisect(f, grid[i], grid[i + 1],
                                    xtol=1e-8 * max(abs(grid[i + 1]), 1.0))
            break

    # coalescence: minimize the smallest pairwise eigenvalue gap
    gaps = np.array([_pair_gap(model, P, **kw)[0] for P in grid])
    events["P_c"] = None
    events["ep"] = False
    i_min = int(np.argmin(gaps))
    if np.isfinite(gaps[i_min]):
        a = grid[max(i_min - 1, 0)]
        b = grid[min(i_min + 1, len(grid) - 1)]
        f = lambda P: _pair_gap(model, P, **kw)[0]
        P_c, gap_min = _golden_min(f, a, b, xtol=1e-12 * max(abs(b), 1.0))
        _, scale = _pair_gap(model, P_c, **kw)
        events["P_c"] = P_c
        events["gap_at_Pc"] = gap_min
        events["ep"] = bool(gap_min < 1e-6 * scale)

    # divergence: imaginary part of the unstable mode vanishes
    events["P_d"] = None
    if events["P_H"] is not None:
        im_thr = 1e-9 * scale0

        def im_of_unstable(P):
            w, _ = _pencil_eigs_at(model, P, **kw)
            return abs(w[np.argmax(w.real)].imag) - im_thr

        start = np.searchsorted(grid, events["P_H"])
        prev = None
        for i in range(max(start, 1), len(grid)):
            val = abs(raw[i][0][np.argmax(raw[i][0].real)].imag) - im_thr
            if prev is not None and prev > 0 >= val:
                events["P_d"] = _bisect(im_of_unstable, grid[i - 1], grid[i],
                                        xtol=1e-8 * max(abs(grid[i]), 1.0))
                break
            prev = val

    return EigenTrajectory(grid, lam, events, warnings)


def detect_exceptional_point(traj, model, rel_tol=1e-6, sparse_k=8, sigma=None):
    """Refine the minimum-gap load; returns (P_c, pair) or None.

    The pair holds the two upper-half-plane eigenvalues at the refined
    point.  An exceptional point is declared when the relative gap drops
    below rel_tol (for real asymmetric Jacobians, coalescence implies a
    Jordan block).
    """
    kw = dict(k=sparse_k, sigma=sigma)
    gaps = []
    for P in traj.P:
        g, _ = _pair_gap(model, P, **kw)
        gaps.append(g)
    gaps = np.array(gaps)
    i_min = int(np.argmin(gaps))
    if not np.isfinite(gaps[i_min]):
        return None
    a = traj.P[max(i_min - 1, 0)]
    b = traj.P[min(i_min + 1, len(traj.P) - 1)]
    f = lambda P: _pair_gap(model, P, **kw)[0]
    P_c, gap_min = _golden_min(f, a, b, xtol=1e-12 * max(abs(b), 1.0))
    _, scale = _pair_gap(model, P_c, **kw)
    if gap_min >= rel_tol * scale:
        return None
    w, _ = _pencil_eigs_at(model, P_c, **kw)
    up = np.sort_complex(w[w.imag > 1e-12 * scale])
    best = None
    for ia in range(len(up)):
        for ib in range(ia + 1, len(up)):
            gg = abs(up[ia] - up[ib])
            if best is None or gg < best[0]:
                best = (gg, up[ia], up[ib])
    return P_c, (best[1], best[2])


# -- Jordan enforcement -------------------------------------------------------

def _null_pair_construction(B, At, lam_bar, tau, Y_i):
    """Right/left Jordan chains of (At - lam_bar B) via SVD null spaces.

    Used when the raw eigenvalue gap is below working precision so the
    closed-form combination of the raw eigenvectors would be pure round-off.
    Returns (Ybar_i, Ybar_j, Xdir_i, Xdir_j) with the chain relations
      (At - lam_bar B) Ybar_j = tau B Ybar_i,   (At - lam_bar B) Ybar_i = 0
    and the matching left relations, in the gauge Ybar_j orthogonal to
    Ybar_i and Ybar_i aligned with the raw eigenvector.
    """
    P = At - lam_bar * B
    U, s, Vh = sla.svd(P)
    v = Vh[-1].conj()
    # align the refined eigenvector with the raw one (contract: Ybar_i = Y_i)
    c = np.vdot(v, Y_i)
    if abs(c) == 0:
        raise JordanEnforcementError("null vector orthogonal to the raw eigenvector")
    v = v * (c / abs(c)) * np.linalg.norm(Y_i)
    # minimal-norm chain solve with the defective direction removed
    s_inv = np.zeros_like(s)
    s_inv[:-1] = 1.0 / s[:-1]
    pinv = (Vh.conj().T * s_inv) @ U.conj().T
    w = pinv @ (tau * (B @ v))
    w = w - (np.vdot(v, w) / np.vdot(v, v)) * v
    # left null and left chain
    ul = U[:, -1]
    pinvH = pinv.conj().T
    xi = pinvH @ (np.conj(tau) * (B.conj().T @ ul))
    xi = xi - (np.vdot(ul, xi) / np.vdot(ul, ul)) * ul
    return v, w, xi, ul


def enforce_jordan(spectrum, pair, tau=1.0, mirror_conjugate=True,
                   gap_switch=1e-7, align_tol=0.5):
    """Impose a 2x2 Jordan coupling tau on a near-degenerate eigenvalue pair.

    Builds the modified triplet (Lam, Ybar, Xbar): Ybar_i = Y_i,
    Ybar_j = tau/(lam_i - lam_j) (Y_i - Y_j/gamma_ij) with
    gamma_ij = (Y_i* Y_j)/(Y_i* Y_i), left vectors from
    nu = ((X* B Y mu)*)^-1, giving Xbar* B Ybar = I and Xbar* At Ybar = Lam
    with Lam_ij = tau.  When the raw gap is below gap_switch (relative),
    the same objects are produced from SVD null/chain solves of
    (At - mean(lam) B), which is the numerically stable formulation of the
    identical construction; the pair then shares the mean eigenvalue.

    Refuses diabolic-like pairs whose eigenvectors are not nearly aligned.
    """
    i, j = pair
    if not i < j:
        raise ValueError("pair must be ordered i < j")
    spec = spectrum.copy()
    lam_i, lam_j = spec.lam[i], spec.lam[j]
    Y_i, Y_j = spec.Y[:, i], spec.Y[:, j]
    align = abs(np.vdot(Y_i, Y_j)) / (np.linalg.norm(Y_i) * np.linalg.norm(Y_j))
    if align < align_tol:
        raise JordanEnforcementError(
            f"pair ({i}, {j}) has independent eigenvectors (alignment {align:.3f}); "
            "diabolic-like degeneracy, refusing to impose a Jordan block")

    gap = abs(lam_i - lam_j)
    lam_bar = 0.5 * (lam_i + lam_j)
    B, At = spec.first_order_operators()

    if gap > gap_switch * max(abs(lam_bar), 1.0):
        gamma = np.vdot(Y_i, Y_j) / np.vdot(Y_i, Y_i)
        mu = np.eye(spec.d, dtype=complex)
        mu[i, j] = tau / (lam_i - lam_j)
        mu[j, j] = -tau / (gamma * (lam_i - lam_j))
        Ybar = spec.Y @ mu
        G = spec.X.conj().T @ (B @ Ybar)
        nu = np.linalg.inv(G.conj().T)
        Xbar = spec.X @ nu
        spec.Y = Ybar
        spec.X = Xbar
        spec.Lam[i, j] = tau
    else:
        v, w, xi, ul = _null_pair_construction(B, At, lam_bar, tau, Y_i)
        Ypair = np.column_stack([v, w])
        Xdir = np.column_stack([xi, ul])
        G = Xdir.conj().T @ (B @ Ypair)
        N = np.linalg.inv(G).conj().T
        Xpair = Xdir @ N
        spec.Y[:, [i, j]] = Ypair
        spec.X[:, [i, j]] = Xpair
        spec.lam[i] = spec.lam[j] = lam_bar
        spec.Lam[i, i] = spec.Lam[j, j] = lam_bar
        spec.Lam[i, j] = tau

    spec.jordan_pairs = list(spec.jordan_pairs) + [(i, j, tau)]

    if mirror_conjugate and spec.conj_map is not None:
        ic, jc = int(spec.conj_map[i]), int(spec.conj_map[j])
        if {ic, jc} != {i, j}:
            ic, jc = min(ic, jc), max(ic, jc)
            spec.Y[:, ic] = np.conj(spec.Y[:, i])
            spec.Y[:, jc] = np.conj(spec.Y[:, j])
            spec.X[:, ic] = np.conj(spec.X[:, i])
            spec.X[:, jc] = np.conj(spec.X[:, j])
            spec.lam[ic] = np.conj(spec.lam[i])
            spec.lam[jc] = np.conj(spec.lam[j])
            spec.Lam[ic, ic] = np.conj(spec.Lam[i, i])
            spec.Lam[jc, jc] = np.conj(spec.Lam[j, j])
            spec.Lam[ic, jc] = np.conj(tau)
            spec.jordan_pairs.append((ic, jc, np.conj(tau)))
    return spec
