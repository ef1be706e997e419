"""Invariant-manifold parametrisation engines.

Solves the homological equations order by order in normal-form style for
two system shapes: the generic first-order quadratic DAE (with the control
parameter as an appended trivial state) and second-order mechanical
systems with parameter-independent quadratic/cubic forces, where the
velocity mappings are recovered a posteriori and only displacement-sized
linear systems are factored.

Both engines support imposed Jordan couplings in the linear reduced
dynamics: the off-diagonal entries of Lam feed an extra within-order term
whose dependency always points to an already-solved monomial thanks to the
descending-lexicographic monomial ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .models.dae import FirstOrderDAE
from .polytensor import MonomialTable, polynomial_eval

STYLE_NORMAL_FORM = "normal-form"


class ResonanceError(RuntimeError):
    pass


@dataclass
class ResonanceSet:
    """Per-monomial sigma = alpha . diag(Lam) and the resonant master sets."""

    sigma: np.ndarray
    sets: list
    lam_classified: np.ndarray

    def resonant(self, mid):
        return self.sets[mid]


def classify_resonances(table, lam_vec, r_tol=0.05, enforce_one_to_one=False):
    """Resonance bookkeeping over a monomial table.

    lam_vec has one entry per variable, zero in the parameter slot; the
    comparison |Im sigma - Im lam_r| <= r_tol * max(1, |Im lam_r|) ignores
    real parts so that damping does not unflag physically resonant
    monomials.  With enforce_one_to_one the master imaginary parts are
    replaced, for classification only, by their common average (the exact
    1:1 relationship of the two-mode strategy); appending powers of the
    parameter never changes the classification since its eigenvalue is
    exactly zero.
    """
    lam_vec = np.asarray(lam_vec, dtype=complex)
    d = len(lam_vec) - 1
    lam_cls = lam_vec.copy()
    if enforce_one_to_one:
        if d != 4:
            raise ValueError("the 1:1 enforcement applies to two-mode (d = 4) runs")
        om = np.mean(np.abs(lam_vec[:4].imag))
        lam_cls[:4] = lam_vec[:4].real + 1j * om * np.sign(lam_vec[:4].imag)
    sigma = table.exponents @ lam_vec
    sigma_cls = table.exponents @ lam_cls
    sets = []
    for mid in range(len(table)):
        res = [r for r in range(d)
               if abs(sigma_cls[mid].imag - lam_cls[r].imag)
               <= r_tol * max(1.0, abs(lam_cls[r].imag))]
        sets.append(res)
    return ResonanceSet(sigma, sets, lam_cls)


@dataclass
class ParametrisationROM:
    """Polynomial mapping W and reduced dynamics f over (z, mu).

    W rows hold the mapping coefficient of each table monomial (full state
    for first-order systems, displacement stacked with velocity for
    second-order ones); f rows hold the reduced-dynamics coefficients with
    the parameter slot last, identically zero (the parameter dynamics stays
    trivial at every order).
    """

    table: MonomialTable
    W: np.ndarray
    f: np.ndarray
    lam: np.ndarray
    Lam: np.ndarray
    conj_map: np.ndarray | None = None
    n_disp: int | None = None
    style: str = STYLE_NORMAL_FORM
    meta: dict = field(default_factory=dict)

    @property
    def d(self):
        return len(self.lam)

    @property
    def order(self):
        return self.table.max_order

    @property
    def dim(self):
        return self.W.shape[1]

    def evaluate_mapping(self, ztilde):
        return polynomial_eval(self.table, self.W, ztilde)

    def reduced_rhs(self, ztilde):
        return polynomial_eval(self.table, self.f, ztilde)

    def linear_block(self, mu):
        """mu-dressed linear reduced dynamics J(mu) at the fixed point z = 0."""
        d = self.d
        J = np.zeros((d, d), dtype=complex)
        for s in range(d):
            alpha = np.zeros(self.table.nvars, dtype=np.int64)
            alpha[s] = 1
            for m in range(0, self.order):
                alpha[-1] = m
                if alpha.sum() > self.order:
                    break
                mid = self.table.get(alpha)
                if mid is None:
                    break
                J[:, s] += self.f[mid, :d] * mu**m
        return J

    def mapping_gradient(self, ztilde):
        """dW/dz at ztilde, shape (dim, nvars)."""
        nv = self.table.nvars
        grad = np.zeros((self.dim, nv), dtype=complex)
        exps = self.table.exponents
        for s in range(nv):
            mask = exps[:, s] > 0
            if not mask.any():
                continue
            lowered = exps[mask].copy()
            lowered[:, s] -= 1
            vals = np.prod(ztilde[None, :] ** lowered, axis=1)
            grad[:, s] = (self.W[mask].T * (exps[mask, s] * vals)) @ np.ones(mask.sum())
        return grad

    def to_dict(self):
        def c2(arr):
            return [[float(v.real), float(v.imag)] for v in arr]

        return {
            "format": "flutterrom-rom",
            "version": 1,
            "style": self.style,
            "nvars": self.table.nvars,
            "order": self.table.max_order,
            "n_disp": self.n_disp,
            "conj_map": None if self.conj_map is None else [int(v) for v in self.conj_map],
            "eigenvalues": c2(self.lam),
            "Lam": [c2(row) for row in self.Lam],
            "monomials": [[int(e) for e in row] for row in self.table.exponents],
            "W": [c2(row) for row in self.W],
            "f": [c2(row) for row in self.f],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != "flutterrom-rom":
            raise ValueError("not a ROM file")
        if data.get("version") != 1:
            raise ValueError(f"unsupported ROM file version {data.get('version')!r}")

        def fromc(rows):
            return np.array([complex(re, im) for re, im in rows])

        table = MonomialTable(data["nvars"], data["order"])
        stored = [[int(e) for e in row] for row in data["monomials"]]
        if stored != [[int(e) for e in row] for row in table.exponents]:
            raise ValueError("monomial list does not match the canonical ordering")
        W = np.array([fromc(r) for r in data["W"]])
        f = np.array([fromc(r) for r in data["f"]])
        lam = fromc(data["eigenvalues"])
        Lam = np.array([fromc(r) for r in data["Lam"]])
        conj_map = data.get("conj_map")
        return cls(table, W, f, lam, Lam,
                   None if conj_map is None else np.array(conj_map, dtype=np.int64),
                   data.get("n_disp"), data.get("style", STYLE_NORMAL_FORM),
                   data.get("meta", {}))


# -- shared engine pieces -----------------------------------------------------

def _order1_ids(table):
    return list(table.ids_of_order(1))


def _gradient_cross_lower(table, W, f, p, d):
    """N3: sum over lower orders of (dW/dz_s) f_s collecting at order p.

    Only reduced-dynamics coefficients of orders 2..p-1 enter (the linear
    part is the sigma term plus the Jordan correction handled separately).
    """
    out = {}
    exps = table.exponents
    nv = table.nvars
    for qf in range(2, p - 1 + 1):
        qW = p + 1 - qf
        if qW < 2 or qW > table.max_order:
            continue
        for kf in table.ids_of_order(qf):
            frow = f[kf]
            nz = [s for s in range(nv) if frow[s] != 0]
            if not nz:
                continue
            for kW in table.ids_of_order(qW):
                aW = exps[kW]
                for s in nz:
                    if aW[s] == 0:
                        continue
                    target = aW + exps[kf]
                    target[s] -= 1
                    mid = table.index_of(target)
                    acc = out.get(mid)
                    if acc is None:
                        acc = np.zeros(W.shape[1], dtype=complex)
                        out[mid] = acc
                    acc += aW[s] * frow[s] * W[kW]
    return out


def _jordan_within_order(table, W, mid, jordan_pairs):
    """Extra gradient term from imposed off-diagonal linear couplings.

    For each coupling f_s^(1,j) = tau (s < j), the monomial alpha(mid)
    receives alpha_s(kW) * tau * W(kW) with alpha(kW) = alpha(mid)+e_s-e_j;
    the table ordering guarantees kW was already solved.
    """
    alpha = table.exponents[mid]
    out = np.zeros(W.shape[1], dtype=complex)
    for (s, j, tau) in jordan_pairs:
        if alpha[j] == 0:
            continue
        dep = alpha.copy()
        dep[s] += 1
        dep[j] -= 1
        kW = table.index_of(dep)
        if kW >= mid:
            raise AssertionError("monomial ordering violated the Jordan dependency")
        out += dep[s] * tau * W[kW]
    return out


def _check_solve(residual_norm, rhs_norm, sigma, lam, table, mid):
    if residual_norm > 1e-6 * max(rhs_norm, 1e-300):
        near = lam[np.argmin(np.abs(lam - sigma))]
        alpha = tuple(int(e) for e in table.exponents[mid])
        raise ResonanceError(
            f"homological solve failed for monomial {alpha}: sigma = {sigma:.6g} "
            f"is unflagged-resonant with lambda = {near:.6g}; "
            "revisit the resonance tolerance")


# -- first-order engine -------------------------------------------------------

def build_rom_firstorder(dae: FirstOrderDAE, spectrum, order, r_tol=0.05,
                         enforce_one_to_one=None, style=STYLE_NORMAL_FORM,
                         meta=None):
    """Parametrisation of the augmented quadratic DAE around its fixed point."""
    if style != STYLE_NORMAL_FORM:
        raise ValueError("only the complex normal-form style is implemented")
    d = spectrum.d
    nv = d + 1
    if enforce_one_to_one is None:
        enforce_one_to_one = d == 4
    table = MonomialTable(nv, order)
    D = dae.dim
    B = dae.B
    At = np.asarray(spectrum.ops["At"])
    jp = spectrum.jordan_pairs

    lam_vec = np.zeros(nv, dtype=complex)
    lam_vec[:d] = np.diag(spectrum.Lam)
    res = classify_resonances(table, lam_vec, r_tol, enforce_one_to_one)

    W = np.zeros((len(table), D), dtype=complex)
    f = np.zeros((len(table), nv), dtype=complex)
    o1 = _order1_ids(table)
    for s in range(d):
        W[o1[s]] = spectrum.Y[:, s]
        f[o1[s], :d] = spectrum.Lam[:, s]
    W[o1[d]] = spectrum.Ypar
    # normal-form choice for the parameter column: f^(1, d+1) = 0

    for p in range(2, order + 1):
        rhs = {mid: np.zeros(D, dtype=complex) for mid in table.ids_of_order(p)}
        exps = table.exponents
        for p1 in range(1, p):
            for k1 in table.ids_of_order(p1):
                for k2 in table.ids_of_order(p - p1):
                    mid = table.index_of(exps[k1] + exps[k2])
                    rhs[mid] += dae.Q1.apply(W[k1], W[k2])
        for kW in table.ids_of_order(p - 1):
            target = exps[kW].copy()
            target[-1] += 1
            rhs[table.index_of(target)] += dae.Q2m @ W[kW]
        if p == 2:
            mu2 = np.zeros(nv, dtype=np.int64)
            mu2[-1] = 2
            rhs[table.index_of(mu2)] += dae.q3

        g_lower = _gradient_cross_lower(table, W, f, p, d)
        for mid in table.ids_of_order(p):
            gm = g_lower.get(mid, np.zeros(D, dtype=complex))
            if jp:
                gm = gm + _jordan_within_order(table, W, mid, jp)
            sigma = res.sigma[mid]
            R = res.sets[mid]
            b = rhs[mid] - B @ gm
            nR = len(R)
            S = sigma * B - At
            if nR == 0:
                sol = sla.solve(S, b)
                resid = np.linalg.norm(S @ sol - b)
                _check_solve(resid, np.linalg.norm(b), sigma, lam_vec[:d], table, mid)
                W[mid] = sol
            else:
                Mtx = np.zeros((D + nR, D + nR), dtype=complex)
                Mtx[:D, :D] = S
                Mtx[:D, D:] = B @ spectrum.Y[:, R]
                Mtx[D:, :D] = spectrum.X[:, R].conj().T @ B
                rhs_full = np.concatenate([b, np.zeros(nR, dtype=complex)])
                sol = sla.solve(Mtx, rhs_full)
                resid = np.linalg.norm(Mtx @ sol - rhs_full)
                _check_solve(resid, np.linalg.norm(rhs_full), sigma, lam_vec[:d], table, mid)
                W[mid] = sol[:D]
                f[mid, R] = sol[D:]

    rom_meta = {"engine": "first-order", "mu0": dae.mu0, "r_tol": r_tol,
                "one_to_one": bool(enforce_one_to_one),
                "jordan_pairs": [(int(i), int(j), complex(t).real) for i, j, t in jp],
                "labels": list(dae.labels),
                "displacement_indices": [int(i) for i in dae.displacement_indices]}
    rom_meta.update(meta or {})
    return ParametrisationROM(table, W, f, lam_vec[:d].copy(), spectrum.Lam.copy(),
                              spectrum.conj_map, None, style, rom_meta)


# -- second-order engine ------------------------------------------------------

class _BorderedSolver:
    """Cached bordered solves of [[S, cols], [rows, Dblk]] per (sigma, R)."""

    def __init__(self, M, C, Kt, use_sparse):
        self.M, self.C, self.Kt = M, C, Kt
        self.use_sparse = use_sparse
        self._cache = {}

    def solve(self, sigma, R, cols, rows, Dblk, rhs):
        n = self.M.shape[0]
        nR = cols.shape[1]
        key = (complex(np.round(sigma.real, 12), np.round(sigma.imag, 12)), tuple(R))
        if self.use_sparse:
            fact = self._cache.get(key)
            if fact is None:
                S = (sigma**2 * self.M + sigma * self.C + self.Kt).tocsc().astype(complex)
                if nR:
                    full = sp.bmat([[S, sp.csc_matrix(cols)],
                                    [sp.csc_matrix(rows), sp.csc_matrix(Dblk)]],
                                   format="csc")
                else:
                    full = S
                fact = spla.splu(full)
                self._cache[key] = fact
            sol = fact.solve(rhs)
            return sol
        S = sigma**2 * self.M + sigma * self.C + self.Kt
        if nR:
            full = np.zeros((n + nR, n + nR), dtype=complex)
            full[:n, :n] = S
            full[:n, n:] = cols
            full[n:, :n] = rows
            full[n:, n:] = Dblk
        else:
            full = S
        return sla.solve(full, rhs)


def build_rom_secondorder(model, spectrum, order, r_tol=0.05,
                          enforce_one_to_one=None, style=STYLE_NORMAL_FORM,
                          meta=None):
    """Halved-size parametrisation for second-order mechanical systems.

    Requires parameter-independent quadratic/cubic forces (models whose
    cubic scales with the load go through the quadratic recast and the
    first-order engine) and no parameter-only quadratic term; per monomial
    a displacement-sized bordered system is solved and the velocity
    mapping is recovered algebraically afterwards.
    """
    if style != STYLE_NORMAL_FORM:
        raise ValueError("only the complex normal-form style is implemented")
    if getattr(model, "cubic_scales_with_load", False):
        raise ValueError("load-scaled cubic forces require the quadratic recast "
                         "and the first-order engine")
    if getattr(model, "q3", None) is not None and np.any(np.asarray(model.q3) != 0):
        raise ValueError("parameter-quadratic terms are outside the second-order engine")

    d = spectrum.d
    nv = d + 1
    if enforce_one_to_one is None:
        enforce_one_to_one = d == 4
    n = model.ndof
    M, C, Kt = model.mass(), model.damping(), model.tangent_stiffness()
    Ru = model.ru()
    use_sparse = sp.issparse(M)
    if use_sparse:
        M, C, Kt = sp.csc_matrix(M), sp.csc_matrix(C), sp.csc_matrix(Kt)
    else:
        M, C, Kt = np.asarray(M), np.asarray(C), np.asarray(Kt)

    Yu = spectrum.Yu()
    Xv = spectrum.Xv()
    Lam = spectrum.Lam
    jp = spectrum.jordan_pairs
    table = MonomialTable(nv, order)
    lam_vec = np.zeros(nv, dtype=complex)
    lam_vec[:d] = np.diag(Lam)
    res = classify_resonances(table, lam_vec, r_tol, enforce_one_to_one)

    W = np.zeros((len(table), 2 * n), dtype=complex)
    f = np.zeros((len(table), nv), dtype=complex)
    o1 = _order1_ids(table)
    for s in range(d):
        W[o1[s]] = spectrum.Y[:, s]
        f[o1[s], :d] = Lam[:, s]
    W[o1[d]] = spectrum.Ypar

    # velocity part of the linear mapping is Yu @ Lam (reduces to lam*Yu
    # without Jordan couplings)
    YuLam = Yu @ Lam
    MYu = M @ Yu
    CYu = C @ Yu
    MYuLam = M @ YuLam
    XvH = Xv.conj().T
    XvHM = XvH @ M
    XvHC = XvH @ C
    # border row U-coefficients: rows r of (Xv_r^H C + sum_r' Lam[r, r'] Xv_r'^H M)
    row_base = XvHC + Lam @ XvHM
    solver = _BorderedSolver(M, C, Kt, use_sparse)
    exps = table.exponents

    for p in range(2, order + 1):
        U_coeffs = {mid: W[mid][:n] for q in range(1, p) for mid in table.ids_of_order(q)}
        fnl = model.nl_rhs_series(table, U_coeffs, p)
        g_lower = _gradient_cross_lower(table, W, f, p, d)
        for mid in table.ids_of_order(p):
            gm = g_lower.get(mid, np.zeros(2 * n, dtype=complex))
            if jp:
                gm = gm + _jordan_within_order(table, W, mid, jp)
            gU, gV = gm[:n], gm[n:]
            sigma = res.sigma[mid]
            R = res.sets[mid]
            nR = len(R)

            b2 = np.array(fnl.get(mid, np.zeros(n, dtype=complex)), dtype=complex)
            if exps[mid, -1] >= 1:
                lower = exps[mid].copy()
                lower[-1] -= 1
                kW = table.index_of(lower)
                b2 = b2 + Ru @ W[kW][:n]

            Xi = b2 - M @ gV - sigma * (M @ gU) - C @ gU
            if nR:
                cols = sigma * MYu[:, R] + CYu[:, R] + MYuLam[:, R]
                rows = row_base[R] + sigma * XvHM[R]
                Dblk = XvHM[R] @ Yu[:, R]
                rhs_b = -(XvHM[R] @ gU)
                rhs = np.concatenate([Xi, rhs_b])
                sol = solver.solve(sigma, R, cols, rows, Dblk, rhs)
                U = sol[:n]
                fR = sol[n:]
                # residual check on the displacement block
                Scheck = (sigma**2 * (M @ U) + sigma * (C @ U) + Kt @ U + cols @ fR)
                resid = np.linalg.norm(Scheck - Xi)
                _check_solve(resid, np.linalg.norm(Xi) + np.linalg.norm(fR),
                             sigma, lam_vec[:d], table, mid)
                f[mid, R] = fR
                V = sigma * U + Yu[:, R] @ fR + gU
            else:
                U = solver.solve(sigma, (), np.zeros((n, 0)), np.zeros((0, n)),
                                 np.zeros((0, 0)), Xi)
                resid = np.linalg.norm(sigma**2 * (M @ U) + sigma * (C @ U) + Kt @ U - Xi)
                _check_solve(resid, np.linalg.norm(Xi), sigma, lam_vec[:d], table, mid)
                V = sigma * U + gU
            W[mid, :n] = U
            W[mid, n:] = V

    rom_meta = {"engine": "second-order", "mu0": getattr(model, "p0", 0.0),
                "r_tol": r_tol, "one_to_one": bool(enforce_one_to_one),
                "jordan_pairs": [(int(i), int(j), complex(t).real) for i, j, t in jp],
                "n_disp": n}
    rom_meta.update(meta or {})
    return ParametrisationROM(table, W, f, lam_vec[:d].copy(), Lam.copy(),
                              spectrum.conj_map, n, style, rom_meta)


# -- invariance diagnostics ---------------------------------------------------

def invariance_residual(rom, system, ztilde):
    """Norm of the invariance-equation defect at the sample point.

    Substitutes the truncated mapping and reduced dynamics into the full
    model; the result decays like |z|^(order+1) inside the validity domain
    and vanishes identically for linear systems at order 1.
    """
    ztilde = np.asarray(ztilde, dtype=complex)
    Wz = rom.evaluate_mapping(ztilde)
    fz = rom.reduced_rhs(ztilde)
    grad = rom.mapping_gradient(ztilde)
    mu = ztilde[-1]

    if isinstance(system, FirstOrderDAE):
        B = system.B
        At = system.tangent_matrix()
        A0 = system.parameter_column()
        lhs = B @ (grad @ fz)
        rhs = (At @ Wz + A0 * mu + system.Q1.apply(Wz, Wz)
               + (system.Q2m @ Wz) * mu + system.q3 * mu**2)
        return float(np.linalg.norm(lhs - rhs))

    n = system.ndof
    M = system.mass()
    C = system.damping()
    Kt = system.tangent_stiffness()
    U, V = Wz[:n], Wz[n:]
    dU, dV = (grad @ fz)[:n], (grad @ fz)[n:]
    r1 = M @ dU - M @ V
    r2 = (M @ dV + C @ V + Kt @ U - mu * system.rt() - mu * (system.ru() @ U)
          + system.nonlinear_force(U))
    return float(np.linalg.norm(np.concatenate([r1, r2])))


def conjugate_sample(rom, radius, rng):
    """Random conjugate-consistent sample point at the given radius."""
    nv = rom.table.nvars
    z = np.zeros(nv, dtype=complex)
    if rom.conj_map is None:
        raise ValueError("ROM has no conjugate structure")
    reps = [s for s in range(rom.d) if rom.conj_map[s] > s]
    raw = rng.standard_normal(2 * len(reps) + 1)
    raw /= np.linalg.norm(raw)
    for m, s in enumerate(reps):
        z[s] = radius * (raw[2 * m] + 1j * raw[2 * m + 1])
        z[rom.conj_map[s]] = np.conj(z[s])
    z[-1] = radius * raw[-1]
    return z


def residual_slope(rom, system, radii=None, n_dirs=6, seed=0):
    """Log-log slope of the invariance residual against the sample radius."""
    if radii is None:
        radii = np.logspace(-4, -2, 7)
    rng = np.random.default_rng(seed)
    dirs = [conjugate_sample(rom, 1.0, rng) for _ in range(n_dirs)]
    vals = []
    for r in radii:
        worst = max(invariance_residual(rom, system, r * z) for z in dirs)
        vals.append(worst)
    slope = np.polyfit(np.log(radii), np.log(vals), 1)[0]
    return float(slope), np.array(vals)


def validated_radius(rom, system, rel_tol=1e-2, radii=None, n_dirs=4, seed=1):
    """Largest sampled z-radius with relative invariance defect below rel_tol."""
    if radii is None:
        radii = np.logspace(-3, 0.5, 15)
    rng = np.random.default_rng(seed)
    dirs = [conjugate_sample(rom, 1.0, rng) for _ in range(n_dirs)]
    best = radii[0]
    for r in radii:
        rels = []
        for z in dirs:
            zz = r * z
            resid = invariance_residual(rom, system, zz)
            Wz = rom.evaluate_mapping(zz)
            scale = max(np.linalg.norm(Wz), 1e-30)
            rels.append(resid / scale)
        if max(rels) < rel_tol:
            best = r
        else:
            break
    return float(best)
