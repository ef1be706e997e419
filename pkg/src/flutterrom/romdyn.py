"""Using built ROMs: realified reduced integration, limit-cycle amplitude
measurement, unstable-manifold tracing, and full-order reference runs.

The reduced complex coordinates come in conjugate pairs; the realified
state stacks (Re z, Im z) per representative coordinate with the parameter
increment held constant during a run.  Physical outputs go through the
polynomial mapping and are real up to round-off for real models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .polytensor import polynomial_eval


class BlowUpError(RuntimeError):
    def __init__(self, message, t_blowup=None):
        super().__init__(message)
        self.t_blowup = t_blowup


@dataclass
class LimitCycleMeasurement:
    mu: float
    amplitude: np.ndarray
    period: float
    converged: bool
    transient_periods: int
    reason: str = ""

    def amp(self, coord):
        return float(self.amplitude[coord])


class RealizedReducedSystem:
    """Real 2m-dimensional form of the reduced dynamics at fixed mu."""

    def __init__(self, rom, mu):
        if rom.conj_map is None:
            raise ValueError("ROM lacks conjugate-pair structure")
        self.rom = rom
        self.mu = float(mu)
        self.reps = [s for s in range(rom.d) if rom.conj_map[s] > s]
        self.m = len(self.reps)
        self.nv = rom.table.nvars
        self._exps = rom.table.exponents
        # df/dz tables for the analytic Jacobian
        self._grad_cache = []
        for s in range(self.nv):
            mask = self._exps[:, s] > 0
            lowered = self._exps[mask].copy()
            lowered[:, s] -= 1
            self._grad_cache.append((mask, lowered, self._exps[mask, s]))

    def complex_state(self, x):
        z = np.zeros(self.nv, dtype=complex)
        for kk, s in enumerate(self.reps):
            z[s] = x[2 * kk] + 1j * x[2 * kk + 1]
            z[self.rom.conj_map[s]] = np.conj(z[s])
        z[-1] = self.mu
        return z

    def real_state(self, z_reps):
        x = np.zeros(2 * self.m)
        for kk, zv in enumerate(np.atleast_1d(z_reps)):
            x[2 * kk] = np.real(zv)
            x[2 * kk + 1] = np.imag(zv)
        return x

    def complex_field(self, z):
        return polynomial_eval(self.rom.table, self.rom.f, z)

    def rhs(self, t, x):
        z = self.complex_state(x)
        fz = self.complex_field(z)
        out = np.empty(2 * self.m)
        for kk, s in enumerate(self.reps):
            out[2 * kk] = fz[s].real
            out[2 * kk + 1] = fz[s].imag
        return out

    def _complex_gradient(self, coeffs, z):
        """d(poly)/dz_s for every variable, shape (rows, nvars)."""
        out = np.zeros((coeffs.shape[1], self.nv), dtype=complex)
        for s in range(self.nv):
            mask, lowered, factors = self._grad_cache[s]
            if not mask.any():
                continue
            vals = np.prod(z[None, :] ** lowered, axis=1) * factors
            out[:, s] = coeffs[mask].T @ vals
        return out

    def jacobian(self, x):
        z = self.complex_state(x)
        gf = self._complex_gradient(self.rom.f, z)
        J = np.zeros((2 * self.m, 2 * self.m))
        for kk, r in enumerate(self.reps):
            for ll, s in enumerate(self.reps):
                sc = self.rom.conj_map[s]
                da = gf[r, s] + gf[r, sc]
                db = 1j * (gf[r, s] - gf[r, sc])
                J[2 * kk, 2 * ll] = da.real
                J[2 * kk, 2 * ll + 1] = db.real
                J[2 * kk + 1, 2 * ll] = da.imag
                J[2 * kk + 1, 2 * ll + 1] = db.imag
        return J

    def dfdmu(self, x):
        z = self.complex_state(x)
        gf = self._complex_gradient(self.rom.f, z)
        out = np.empty(2 * self.m)
        for kk, r in enumerate(self.reps):
            out[2 * kk] = gf[r, -1].real
            out[2 * kk + 1] = gf[r, -1].imag
        return out

    def map_to_physical(self, x, check_real=True):
        z = self.complex_state(x)
        y = self.rom.evaluate_mapping(z)
        if check_real:
            scale = max(np.abs(y).max(), 1e-30)
            if np.abs(y.imag).max() > 1e-8 * scale:
                raise RuntimeError("mapped state has a non-negligible imaginary part")
        return y.real

    def map_batch(self, X):
        Z = np.array([self.complex_state(x) for x in X])
        from .polytensor import polynomial_eval_batch

        Y = polynomial_eval_batch(self.rom.table, self.rom.W, Z)
        return Y.real


def integrate_reduced(rom, mu, z0, t_end, rtol=1e-10, atol=1e-12,
                      escape_radius=None, t_eval=None, dense_output=False):
    """Adaptive integration of the realified reduced dynamics.

    z0 is one complex amplitude per representative coordinate (or an
    already-realified state vector).  Raises BlowUpError when the reduced
    state leaves the escape radius.
    """
    sysr = RealizedReducedSystem(rom, mu)
    x0 = z0 if (np.ndim(z0) == 1 and len(z0) == 2 * sysr.m and not np.iscomplexobj(z0)) \
        else sysr.real_state(z0)
    if escape_radius is None:
        escape_radius = 1e3 * max(np.linalg.norm(x0), 1e-2)

    def escape(t, x):
        return np.linalg.norm(x) - escape_radius

    escape.terminal = True
    sol = solve_ivp(sysr.rhs, (0.0, t_end), x0, method="DOP853", rtol=rtol, atol=atol,
                    events=escape, t_eval=t_eval, dense_output=dense_output)
    if sol.status == 1:
        raise BlowUpError(f"reduced trajectory left the escape radius at t = "
                          f"{sol.t_events[0][0]:.6g}", t_blowup=float(sol.t_events[0][0]))
    sol.system = sysr
    return sol


def _return_time(rhs, anchor, T0, rtol, atol):
    """First return to the flow-orthogonal section through the anchor.

    The section function vanishes at the start, so the event search keeps
    all upward crossings and takes the first one past a fifth of the
    nominal period.
    """
    nvec = rhs(0.0, anchor)
    nvec = nvec / np.linalg.norm(nvec)

    def section(t, x):
        return nvec @ (x - anchor)

    section.direction = 1.0
    sol = solve_ivp(rhs, (0.0, 3.0 * T0), anchor, method="DOP853", rtol=rtol,
                    atol=atol, events=section)
    hits = [t for t in sol.t_events[0] if t > 0.2 * T0]
    return float(hits[0]) if hits else T0


def _measure_settled_cycle(step_period, map_coord, T0, settle_rtol, max_periods,
                           amp_floor):
    """Shared settling loop: per-period amplitudes until stationary."""
    amps = []
    for k in range(max_periods):
        amp = step_period()
        amps.append(amp)
        if amp < amp_floor:
            return "decayed", k + 1, amps
        if k >= 4:
            prev = amps[-2]
            if abs(amp - prev) <= settle_rtol * max(amp, 1e-30):
                return "settled", k + 1, amps
    return "no-convergence", max_periods, amps


def measure_limit_cycle(rom, mu, coord=0, amp0=1e-4, settle_rtol=1e-4,
                        max_periods=2000, rtol=1e-9, atol=1e-12, n_sample=1024):
    """Amplitude of the settled limit cycle in physical coordinates.

    Integrates from a small perturbation along the leading master
    coordinate, detects settling from the per-period amplitude of the
    monitored coordinate, then measures max |coordinate| per physical
    coordinate over one final period (refined by a flow-orthogonal
    return-time solve).  Decay to the fixed point reports zero amplitude.
    """
    sysr = RealizedReducedSystem(rom, mu)
    T0 = 2 * np.pi / abs(rom.lam[0].imag)
    x = sysr.real_state([amp0] + [0.0] * (sysr.m - 1))
    escape_radius = 1e3 * max(amp0, 1e-2)

    state = {"x": x}

    def step_period():
        sol = solve_ivp(sysr.rhs, (0.0, T0), state["x"], method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True)
        ts = np.linspace(0.0, T0, 65)
        X = sol.sol(ts).T
        if np.linalg.norm(X[-1]) > escape_radius:
            raise BlowUpError("reduced trajectory left the escape radius")
        state["x"] = X[-1]
        Y = sysr.map_batch(X)
        return float(np.max(np.abs(Y[:, coord])))

    try:
        status, n_periods, amps = _measure_settled_cycle(
            step_period, coord, T0, settle_rtol, max_periods, amp_floor=1e-3 * amp0)
    except BlowUpError:
        return LimitCycleMeasurement(mu, np.zeros(rom.dim), 0.0, False, 0, "blow-up")

    if status == "decayed":
        return LimitCycleMeasurement(mu, np.zeros(rom.dim), 0.0, True, n_periods,
                                     "decayed to the fixed point")
    if status == "no-convergence":
        return LimitCycleMeasurement(mu, np.zeros(rom.dim), 0.0, False, n_periods,
                                     "settling tolerance not reached")

    # refine the period with a return-time solve on a flow-orthogonal section
    anchor = state["x"]
    T = _return_time(sysr.rhs, anchor, T0, rtol, atol)
    sol = solve_ivp(sysr.rhs, (0.0, T), anchor, method="DOP853", rtol=rtol,
                    atol=atol, dense_output=True)
    ts = np.linspace(0.0, T, n_sample)
    Y = sysr.map_batch(sol.sol(ts).T)
    amplitude = np.max(np.abs(Y), axis=0)
    return LimitCycleMeasurement(mu, amplitude, T, True, n_periods)


def trace_unstable_manifold(rom, mu, n_radial=4, n_angle=12, r_scale=1e-3,
                            t_end=None, n_samples=400, rtol=1e-9, atol=1e-12):
    """Family of trajectories spanned by the leading master coordinate.

    Returns a list of (trajectory id, times, physical coordinates) tuples;
    blow-ups are flagged per trajectory instead of aborting the family.
    """
    sysr = RealizedReducedSystem(rom, mu)
    T0 = 2 * np.pi / abs(rom.lam[0].imag)
    if t_end is None:
        growth = max(rom.lam[0].real, 1e-3)
        t_end = min(12.0 / growth, 200.0 * T0)
    out = []
    tid = 0
    for ir in range(1, n_radial + 1):
        r = r_scale * ir / n_radial
        for ia in range(n_angle):
            phi = 2 * np.pi * ia / n_angle
            z0 = [r * np.exp(1j * phi)] + [0.0] * (sysr.m - 1)
            ts = np.linspace(0.0, t_end, n_samples)
            try:
                sol = integrate_reduced(rom, mu, z0, t_end, rtol=rtol, atol=atol,
                                        t_eval=ts)
                Y = sysr.map_batch(sol.y.T)
                out.append((tid, ts, Y, ""))
            except BlowUpError as exc:
                out.append((tid, ts, None, f"blow-up at t = {exc.t_blowup:.4g}"))
            tid += 1
    return out


# -- full-order references ----------------------------------------------------

def leading_mode_ic(model, p, scale=1e-4):
    """Initial condition along the real part of the leading eigenvector."""
    from .spectral import _pencil_eigs_at

    w, vr = _pencil_eigs_at(model, p)
    scale_w = max(np.max(np.abs(w)), 1.0)
    osc = np.where(w.imag > 1e-9 * scale_w)[0]
    lead = osc[np.argmax(w[osc].real)]
    n = vr.shape[0] // 2
    v = vr[:n, lead]
    v = v / np.linalg.norm(v)
    x = np.zeros(2 * n)
    x[:n] = scale * v.real
    return x


def integrate_fom(model, p, x0=None, t_end=100.0, rtol=1e-10, atol=1e-12,
                  t_eval=None):
    """Direct integration of the full equations of motion (ODE models)."""
    if x0 is None:
        x0 = leading_mode_ic(model, p)
    rhs = model.fom_rhs(p)
    sol = solve_ivp(rhs, (0.0, t_end), x0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, dense_output=True)
    return sol


def measure_limit_cycle_fom(model, p, coord=0, amp0=1e-4, settle_rtol=1e-4,
                            max_periods=2000, rtol=1e-10, atol=1e-12,
                            omega_ref=None, n_sample=1024):
    """FOM limit-cycle amplitude by direct time integration (ODE models)."""
    from .spectral import _pencil_eigs_at

    w, _ = _pencil_eigs_at(model, p)
    scale_w = max(np.max(np.abs(w)), 1.0)
    osc = np.where(w.imag > 1e-9 * scale_w)[0]
    lead = osc[np.argmax(w[osc].real)]
    omega = omega_ref or abs(w[lead].imag)
    T0 = 2 * np.pi / omega
    x0 = leading_mode_ic(model, p, amp0)
    rhs = model.fom_rhs(p)
    n = len(x0) // 2
    state = {"x": x0}

    def step_period():
        sol = solve_ivp(rhs, (0.0, T0), state["x"], method="DOP853", rtol=rtol,
                        atol=atol, dense_output=True)
        ts = np.linspace(0.0, T0, 65)
        X = sol.sol(ts).T
        state["x"] = X[-1]
        return float(np.max(np.abs(X[:, coord])))

    status, n_periods, amps = _measure_settled_cycle(
        step_period, coord, T0, settle_rtol, max_periods, amp_floor=1e-3 * amp0)
    if status == "decayed":
        return LimitCycleMeasurement(p, np.zeros(2 * n), 0.0, True, n_periods,
                                     "decayed to equilibrium")
    if status == "no-convergence":
        return LimitCycleMeasurement(p, np.zeros(2 * n), 0.0, False, n_periods,
                                     "settling tolerance not reached")

    anchor = state["x"]
    T = _return_time(rhs, anchor, T0, rtol, atol)
    sol = solve_ivp(rhs, (0.0, T), anchor, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True)
    ts = np.linspace(0.0, T, n_sample)
    X = sol.sol(ts).T
    amplitude = np.max(np.abs(X), axis=0)
    return LimitCycleMeasurement(p, amplitude, T, True, n_periods)


class NewmarkIntegrator:
    """Implicit average-acceleration Newmark with Newton on the residual.

    The model supplies internal_force(U), internal_tangent(U),
    external_force(U, p) and external_tangent(U, p); the step residual is
    M a + C v + F_int(U) - F_ext(U, p) = 0.
    """

    def __init__(self, model, p, dt, beta=0.25, gamma=0.5, newton_rtol=1e-10,
                 max_newton=20):
        self.model = model
        self.p = p
        self.dt = dt
        self.beta = beta
        self.gamma = gamma
        self.newton_rtol = newton_rtol
        self.max_newton = max_newton
        self.M = model.mass()
        self.C = model.damping()
        self._sparse = sp.issparse(self.M)

    def _solve(self, A, b):
        if self._sparse:
            return spla.spsolve(sp.csc_matrix(A), b)
        return sla.solve(A, b)

    def initial_acceleration(self, U, V):
        rhs = (self.model.external_force(U, self.p) - self.model.internal_force(U)
               - self.C @ V)
        return self._solve(self.M, rhs)

    def step(self, U, V, A):
        dt, beta, gamma = self.dt, self.beta, self.gamma
        a0 = 1.0 / (beta * dt**2)
        a1 = gamma / (beta * dt)
        U_new = U.copy()
        force_scale = max(np.linalg.norm(self.model.external_force(U, self.p)),
                          np.linalg.norm(self.model.internal_force(U)), 1.0)
        for it in range(self.max_newton):
            A_new = a0 * (U_new - U) - (1.0 / (beta * dt)) * V - (1.0 / (2 * beta) - 1.0) * A
            V_new = V + dt * ((1.0 - gamma) * A + gamma * A_new)
            res = (self.M @ A_new + self.C @ V_new + self.model.internal_force(U_new)
                   - self.model.external_force(U_new, self.p))
            if np.linalg.norm(res) <= self.newton_rtol * force_scale:
                return U_new, V_new, A_new
            Keff = (self.model.internal_tangent(U_new)
                    - self.model.external_tangent(U_new, self.p)
                    + a0 * self.M + a1 * self.C)
            dU = self._solve(Keff, res)
            U_new = U_new - dU
        raise RuntimeError(f"Newmark Newton failed to converge in {self.max_newton} steps")

    def run(self, U0, V0, n_steps, record_dof=None):
        U, V = U0.copy(), V0.copy()
        A = self.initial_acceleration(U, V)
        track = np.zeros(n_steps + 1)
        if record_dof is not None:
            track[0] = U[record_dof]
        states = None
        for k in range(n_steps):
            U, V, A = self.step(U, V, A)
            if record_dof is not None:
                track[k + 1] = U[record_dof]
        return U, V, A, track
