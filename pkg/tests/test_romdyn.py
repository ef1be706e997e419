import numpy as np
import pytest
from scipy.integrate import solve_ivp

from flutterrom.dpim import build_rom_firstorder
from flutterrom.models import build_ziegler2, recast_to_dae
from flutterrom.romdyn import (
    RealizedReducedSystem,
    integrate_fom,
    integrate_reduced,
    measure_limit_cycle,
    measure_limit_cycle_fom,
    trace_unstable_manifold,
)
from flutterrom.spectral import solve_master_eigen
from tests.conftest import hopf_normal_form_rom


def ziegler_rom(mu0=2.27, order=5, xi_m=0.2):
    m = build_ziegler2(1, 1, 1, 1, 1, xi_m=xi_m)
    dae = recast_to_dae(m, mu0=mu0)
    spec = solve_master_eigen(dae, d=4)
    rom = build_rom_firstorder(dae, spec, order=order)
    return m, dae, rom


class TestRealified:
    def test_origin_fixed_point(self, hopf_rom):
        sysr = RealizedReducedSystem(hopf_rom, 0.0)
        assert np.allclose(sysr.rhs(0.0, np.zeros(2)), 0.0)

    def test_realification_matches_complex_field(self):
        _, _, rom = ziegler_rom()
        sysr = RealizedReducedSystem(rom, 0.05)
        rng = np.random.default_rng(0)
        x = 0.1 * rng.standard_normal(4)
        z = sysr.complex_state(x)
        fz = sysr.complex_field(z)
        out = sysr.rhs(0.0, x)
        expect = np.array([fz[0].real, fz[0].imag, fz[2].real, fz[2].imag])
        assert np.abs(out - expect).max() < 1e-12

    def test_jacobian_matches_fd(self):
        _, _, rom = ziegler_rom()
        sysr = RealizedReducedSystem(rom, 0.03)
        rng = np.random.default_rng(5)
        x = 0.05 * rng.standard_normal(4)
        J = sysr.jacobian(x)
        eps = 1e-7
        Jfd = np.zeros_like(J)
        for k in range(4):
            dx = np.zeros(4)
            dx[k] = eps
            Jfd[:, k] = (sysr.rhs(0, x + dx) - sysr.rhs(0, x - dx)) / (2 * eps)
        assert np.abs(J - Jfd).max() < 1e-6

    def test_dfdmu_matches_fd(self):
        _, _, rom = ziegler_rom()
        sysr = RealizedReducedSystem(rom, 0.03)
        x = np.array([0.02, -0.01, 0.005, 0.01])
        g = sysr.dfdmu(x)
        eps = 1e-7
        s1 = RealizedReducedSystem(rom, 0.03 + eps)
        s2 = RealizedReducedSystem(rom, 0.03 - eps)
        gfd = (s1.rhs(0, x) - s2.rhs(0, x)) / (2 * eps)
        assert np.abs(g - gfd).max() < 1e-6

    def test_mapped_state_real(self):
        _, _, rom = ziegler_rom()
        sysr = RealizedReducedSystem(rom, 0.05)
        y = sysr.map_to_physical(np.array([0.1, 0.02, -0.03, 0.01]))
        assert y.dtype == float


class TestIntegrateReduced:
    def test_zero_stays_zero(self, hopf_rom):
        sol = integrate_reduced(hopf_rom, 0.1, [0.0], 20.0)
        assert np.abs(sol.y).max() < 1e-14

    @pytest.mark.parametrize("alpha", [0.01, 0.04])
    def test_normal_form_radius(self, alpha):
        # zdot = (alpha + i) z - z|z|^2 settles on radius sqrt(alpha), period 2pi
        rom = hopf_normal_form_rom()
        meas = measure_limit_cycle(rom, alpha, coord=0, amp0=1e-3, settle_rtol=1e-7)
        assert meas.converged
        assert abs(meas.amplitude[0] - np.sqrt(alpha)) < 2e-5 * np.sqrt(alpha)
        assert abs(meas.period - 2 * np.pi) < 1e-6

    def test_decay_below_hopf(self, hopf_rom):
        meas = measure_limit_cycle(hopf_rom, -0.05, coord=0)
        assert meas.converged
        assert meas.amplitude.max() == 0.0

    def test_spiral_out_to_cycle_post_hopf(self):
        # expansion at the Hopf point, small positive increment: bounded cycle
        m = build_ziegler2(1, 1, 1, 1, 1, xi_m=0.2)
        from flutterrom.spectral import eigen_sweep

        P_H = eigen_sweep(m, (1.5, 3.0), 40).events["P_H"]
        _, _, rom = ziegler_rom(mu0=P_H, order=5)
        meas = measure_limit_cycle(rom, 0.2, coord=1)
        assert meas.converged
        assert meas.amplitude[1] > 0.05

    def test_mapping_derivative_consistency(self):
        # d/dt W(z(t)) along a trajectory matches the velocity block of W in
        # the asymptotic regime (the defect is the order-(o+1) truncation)
        _, _, rom = ziegler_rom()
        sysr = RealizedReducedSystem(rom, 0.0)
        sol = integrate_reduced(rom, 0.0, [1e-2], 3.0, rtol=1e-12, atol=1e-14,
                                dense_output=True)
        eps = 1e-5
        for t in np.linspace(0.5, 2.5, 5):
            y_plus = sysr.map_to_physical(sol.sol(t + eps))
            y_minus = sysr.map_to_physical(sol.sol(t - eps))
            dy = (y_plus - y_minus) / (2 * eps)
            y = sysr.map_to_physical(sol.sol(t))
            # theta-block derivative equals the velocity block
            assert np.abs(dy[:2] - y[2:4]).max() < 1e-8


class TestUnstableManifold:
    def test_trajectories_converge_to_common_cycle(self):
        m = build_ziegler2(1, 1, 1, 1, 1, xi_m=0.2)
        from flutterrom.spectral import eigen_sweep

        P_H = eigen_sweep(m, (1.5, 3.0), 40).events["P_H"]
        _, _, rom = ziegler_rom(mu0=1.05 * P_H, order=7)
        mu = P_H * 1.05 * 0.0 + 0.3  # increment beyond the expansion point
        trajs = trace_unstable_manifold(rom, 0.3, n_radial=2, n_angle=4,
                                        t_end=260.0, n_samples=600)
        finals = []
        for tid, ts, Y, flag in trajs:
            assert flag == ""
            finals.append(np.max(np.abs(Y[-200:, 1])))
        finals = np.array(finals)
        assert finals.std() < 2e-3 * finals.mean()

    def test_small_radius_tangent_to_eigenplane(self):
        _, dae, rom = ziegler_rom()
        spec = solve_master_eigen(dae, d=4)
        trajs = trace_unstable_manifold(rom, 0.0, n_radial=1, n_angle=4,
                                        r_scale=1e-6, t_end=1e-3, n_samples=2)
        for tid, ts, Y, flag in trajs:
            y0 = Y[0]
            # initial physical state lies in the span of the leading pair
            basis = np.column_stack([spec.Y[:, 0].real, spec.Y[:, 0].imag])
            coef, res, *_ = np.linalg.lstsq(basis, y0, rcond=None)
            rel = np.linalg.norm(y0 - basis @ coef) / max(np.linalg.norm(y0), 1e-30)
            assert rel < 1e-6


class TestFom:
    def test_decay_below_hopf(self):
        m = build_ziegler2(1, 1, 1, 1, 1, xi_m=0.2)
        meas = measure_limit_cycle_fom(m, 1.8, coord=1)
        assert meas.converged
        assert meas.amplitude.max() == 0.0

    def test_energy_conservation_free_vibration(self):
        # undamped, no load: energy drift < 1e-6 over 100 periods
        m = build_ziegler2(1, 1, 1, 1, 1)
        x0 = np.array([0.02, -0.01, 0.0, 0.0])
        om_min = 0.4142  # slowest eigenfrequency at P = 0
        T = 100 * 2 * np.pi / om_min
        sol = integrate_fom(m, 0.0, x0=x0, t_end=T, rtol=1e-12, atol=1e-14)
        E0 = m.energy(x0)
        E1 = m.energy(sol.y[:, -1])
        assert abs(E1 - E0) / E0 < 1e-6

    def test_fom_cycle_exists_post_hopf(self):
        m = build_ziegler2(1, 1, 1, 1, 1, xi_m=0.2)
        from flutterrom.spectral import eigen_sweep

        P_H = eigen_sweep(m, (1.5, 3.0), 40).events["P_H"]
        meas = measure_limit_cycle_fom(m, P_H + 0.3, coord=1)
        assert meas.converged
        assert meas.amplitude[1] > 0.05
