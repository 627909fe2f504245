"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line.

Long time-domain runs are shared through module-scoped fixtures so that the
spectral criteria analyse exactly the trajectories of the time-domain ones.
"""
import math

import numpy as np
import pytest

from duoscale import (AmplitudePhase, FirstOrderParams, IntegratorConfig, NonlinearSpring,
                      amplitude_phase_rhs, build_chain, envelope, expansion_verify,
                      first_order_params, frf_trace, gronwall_bound, initial_state, integrate,
                      modal_decompose, modal_project, peak_detect, peak_point, sigma_star,
                      spectrum_scan, stationary_residual, stationary_solve)

# 1-DOF resonant setup: omega = 1, lambda = 0.5, f = 1, d = 1, c = 1, eps = 0.01
EPS = 0.01
OMEGA_TILDE = 1.0143379
A_BAR = 1.9796915
SIGMA_BAR = 1.43379
T_RECORD = 400.0 * math.pi
THETA_CFG = dict(method="theta", theta=0.5, dt=0.01)
SCAN = dict(lambda_min=0.0, lambda_max=3.0, n_grid=3001)
MIN_PROMINENCE = 10.0


def one_dof(eps=EPS, c=1.0, d=1.0, lam=0.5, f=1.0, omega_tilde=None):
    spring = NonlinearSpring(c=c, d=d, epsilon=eps, p=1)
    sigma = 0.0 if omega_tilde is None else (omega_tilde - 1.0) / eps
    forcing = None if f == 0 else [f]
    return build_chain(1, 1.0, 0.5, spring, damping=lam, forcing=forcing, detuning=sigma)


def run(system, u0, t_end, stride=1):
    cfg = IntegratorConfig(**THETA_CFG, t_end=t_end, stride=stride)
    return integrate(system, [u0], [0.0], cfg)


@pytest.fixture(scope="module")
def resonant_run():
    return run(one_dof(omega_tilde=OMEGA_TILDE), 0.019796915, T_RECORD)


@pytest.fixture(scope="module")
def offres_run():
    return run(one_dof(omega_tilde=0.5), 0.003, T_RECORD)


def resonant_params(**kw):
    base = dict(omega=1.0, d_eff=1.0, epsilon=EPS, lam=0.5, f=1.0, sigma=SIGMA_BAR)
    base.update(kw)
    return FirstOrderParams(**base)


def spectral_tolerance(spec):
    return spec.grid_step + spec.resolution


def test_criterion_01_stationary_point(report):
    params = resonant_params()
    res = float(stationary_residual(params, A_BAR, SIGMA_BAR))
    point = stationary_solve(params, SIGMA_BAR, A_BAR)
    ok = abs(res) <= 1e-4 and abs(point.a - A_BAR) <= 1e-4
    report(1, ok, f"|residual|={abs(res):.3e} (<=1e-4), a_bar={point.a:.7f} vs {A_BAR} +- 1e-4")


def test_criterion_02_peak_identities(report):
    params = FirstOrderParams(omega=1.0, d_eff=1.0, epsilon=0.1, lam=0.5, f=1.0)
    peak = peak_point(params)
    closed_a = params.f / (params.lam * params.omega)
    closed_s = 3.0 * params.d_eff * closed_a**2 / (8.0 * params.omega)
    curve = frf_trace(params, -1.0, 3.0, 401)
    step = 4.0 / 400
    i = int(np.argmax(curve.a))
    grid_ok = abs(curve.sigma[i] - peak.sigma) <= step
    s_star, _ = sigma_star(params, peak.a)
    ok = (peak.a == closed_a == 2.0 and peak.sigma == closed_s == 1.5 and grid_ok
          and peak.sigma <= s_star and abs(s_star - 1.5210) <= 1e-4)
    report(2, ok, f"peak (a, sigma)=({peak.a}, {peak.sigma}), grid argmax sigma={curve.sigma[i]:.4f}, "
                  f"sigma*={s_star:.6f}")


def test_criterion_03_stability(report):
    params = resonant_params()
    point = stationary_solve(params, SIGMA_BAR, A_BAR)
    J = point.jacobian
    # determinant from the closed form lam**2/4 - (9 d a**2/(8w) - s)(s - 3 d a**2/(8w))
    a, s = A_BAR, SIGMA_BAR
    det_formula = 0.25 * 0.25 - (9 * a * a / 8 - s) * (s - 3 * a * a / 8)
    h = 1e-6
    fd = np.empty((2, 2))
    for j, (da, db) in enumerate(((h, 0.0), (0.0, h))):
        plus = amplitude_phase_rhs(params, AmplitudePhase(point.a + da, point.beta + db))
        minus = amplitude_phase_rhs(params, AmplitudePhase(point.a - da, point.beta - db))
        fd[:, j] = (np.array(plus) - np.array(minus)) / (2 * h)
    fd_err = float(np.max(np.abs(fd - J)))
    ok = (abs(point.trace + 0.5) <= 1e-10 and abs(det_formula - 0.16933) <= 1e-4
          and abs(point.det - 0.16933) <= 1e-4 and point.stable and fd_err <= 1e-6)
    report(3, ok, f"tr={point.trace:.12f}, det={point.det:.6f} (formula {det_formula:.6f}), "
                  f"stable={point.stable}, |J_fd - J|={fd_err:.2e}")


def test_criterion_04_modal_accuracy(report):
    chain = build_chain(9, 1.0, 1.0, NonlinearSpring(1.0, 1.0, 0.01, 1))
    basis = modal_decompose(chain)
    w1 = basis.frequencies[0]
    orth = float(np.max(np.abs(basis.modes.T @ chain.mass_matrix @ basis.modes - np.eye(9))))
    exact = 2.0 * math.sin(math.pi / 20.0)
    ok = abs(w1 - exact) <= 1e-10 and abs(w1 - 0.3128868) <= 5e-5 and orth <= 1e-10
    report(4, ok, f"omega_1={w1:.12f}, |.-2sin(pi/20)|={abs(w1 - exact):.1e}, "
                  f"|.-0.3128868|={abs(w1 - 0.3128868):.1e}, |Phi^T M Phi - I|={orth:.1e}")


def test_criterion_05_time_domain_regimes(report, resonant_run):
    target = 0.0198
    period = 2.0 * math.pi / OMEGA_TILDE
    _, env_a = envelope(resonant_run, 0, period, t_start=100.0)
    dev_a = float(np.max(np.abs(env_a / target - 1.0)))
    ok_a = dev_a <= 0.05

    system = one_dof(omega_tilde=OMEGA_TILDE)
    window = 50.0
    high = run(system, 0.079, 3000.0)
    _, env_b = envelope(high, 0, window)
    ok_b = bool(np.all(np.diff(env_b) <= 0)) and abs(env_b[-1] / target - 1.0) <= 0.10
    low = run(system, 0.004, 3000.0)
    _, env_c = envelope(low, 0, window)
    ok_c = bool(np.all(np.diff(env_c) >= 0)) and abs(env_c[-1] / target - 1.0) <= 0.10
    report(5, ok_a and ok_b and ok_c,
           f"(a) max envelope deviation {dev_a:.1%} (<=5%): {ok_a}; "
           f"(b) u0=0.079 final envelope {env_b[-1]:.5f}, monotone={bool(np.all(np.diff(env_b) <= 0))}: {ok_b}; "
           f"(c) u0=0.004 peak {env_c.max():.5f}, final {env_c[-1]:.5f}: {ok_c}")


def test_criterion_06_spectral_reproduction(report, resonant_run, offres_run):
    spec = spectrum_scan(resonant_run, 0, **SCAN)
    tol = spectral_tolerance(spec)
    peaks = peak_detect(spec, MIN_PROMINENCE)
    ok_res = len(peaks) == 1 and abs(peaks[0].frequency - OMEGA_TILDE) <= tol
    spec_off = spectrum_scan(offres_run, 0, **SCAN)
    peaks_off = peak_detect(spec_off, MIN_PROMINENCE)
    tol_off = spectral_tolerance(spec_off)
    ok_off = len(peaks_off) >= 2 and any(abs(p.frequency - 0.5) <= tol_off for p in peaks_off)
    report(6, ok_res and ok_off,
           f"resonant peaks {[round(p.frequency, 4) for p in peaks]} vs {OMEGA_TILDE} +- {tol:.4f}; "
           f"off-resonance peaks {[round(p.frequency, 4) for p in peaks_off]}")


def test_criterion_07_free_backbone(report):
    eps, a0 = 0.1, 1.0
    system = one_dof(eps=eps, lam=0.0, f=0.0)
    series = run(system, eps * a0, T_RECORD)
    spec = spectrum_scan(series, 0, **SCAN)
    tol = spectral_tolerance(spec)
    dominant = peak_detect(spec, MIN_PROMINENCE)[0].frequency
    nu = 1.0 + 3.0 * eps * a0**2 / 8.0
    ok = abs(dominant - nu) <= tol and abs(dominant - 1.0) > tol
    report(7, ok, f"dominant peak {dominant:.4f} vs nu={nu} +- {tol:.4f} (omega=1 excluded)")


def test_criterion_08_convergence(report):
    ladder = [0.1, 0.05, 0.025]
    free = expansion_verify(one_dof(eps=0.1, lam=0.0, f=0.0), ladder, 1.0, a0=1.0,
                            zero_velocity=True)
    ok_free = all(r <= 2.0 for r in free.growth_ratios) and free.verdict == "bounded"
    linear = expansion_verify(one_dof(eps=0.1, c=0.0, d=0.0, lam=0.0, f=0.0), ladder, 1.0,
                              a0=1.0, zero_velocity=True)
    ok_lin = all(s <= 1e-6 for s in linear.sup_remainders)
    forced_sys = one_dof(eps=0.04)
    forced_sys = build_chain(1, 1.0, 0.5, forced_sys.spring, damping=0.5, forcing=[1.0],
                             detuning=SIGMA_BAR)
    forced = expansion_verify(forced_sys, [0.04, 0.02, 0.01], 1.0)
    ok_forced = forced.verdict == "bounded"
    report(8, ok_free and ok_lin and ok_forced,
           f"free ratios {[round(r, 3) for r in free.growth_ratios]}; "
           f"linear max sup|r|={max(linear.sup_remainders):.1e}; forced verdict {forced.verdict}")


def test_criterion_09_reduction_equivalence(report):
    worst = 0.0
    for d in (1.0, 1000.0):
        spring = NonlinearSpring(1.0, d, EPS, 1)
        chain9 = build_chain(9, 1.0, 1.0, spring, damping=0.5, forcing=None)
        basis = modal_decompose(chain9)
        F = basis.modes[:, 0] * 1.0  # unit modal force (M = I)
        chain9 = build_chain(9, 1.0, 1.0, spring, damping=0.5, forcing=F)
        p9 = first_order_params(chain9, basis)
        w1 = basis.frequencies[0]
        single = build_chain(1, 1.0, w1**2 / 2.0, NonlinearSpring(1.0, p9.d_eff, EPS, 1),
                             damping=0.5, forcing=[1.0])
        p1 = first_order_params(single)
        s_peak = peak_point(p9).sigma
        lo, hi = s_peak - 10.0, s_peak + 10.0
        c9 = frf_trace(p9, lo, hi, 201)
        c1 = frf_trace(p1, lo, hi, 201)
        if len(c9) != len(c1):
            worst = math.inf
            break
        worst = max(worst, float(np.max(np.abs(c9.a - c1.a))),
                    float(np.max(np.abs(c9.sigma - c1.sigma))))
    ok_frf = worst <= 1e-10

    eps = 0.05
    free9 = build_chain(9, 1.0, 1.0, NonlinearSpring(1.0, 1.0, eps, 1))
    basis = modal_decompose(free9)
    u0, v0 = initial_state(free9, basis, 1.0, 0.0)
    cfg = IntegratorConfig(method="rk4", dt=0.01, t_end=1.0 / eps)
    series = integrate(free9, u0, v0, cfg, basis)
    y = modal_project(basis, free9.mass_matrix, series.u)
    other = float(np.max(np.abs(y[:, 1:])))
    ok_modal = other <= 5.0 * eps**2
    report(9, ok_frf and ok_modal,
           f"9-DOF vs 1-DOF FRF max diff {worst:.1e} (<=1e-10); "
           f"max non-driven modal coordinate {other:.2e} (<= {5 * eps**2:.4f})")


def test_criterion_10_gronwall(report):
    worst = 0.0
    for d1, d2 in ((1.0, 1.0), (0.5, 2.0)):
        h, u = 1e-3, 0.0
        f = lambda x: d2 + d1 * x  # noqa: E731
        for _ in range(2000):
            k1 = f(u)
            k2 = f(u + 0.5 * h * k1)
            k3 = f(u + 0.5 * h * k2)
            k4 = f(u + h * k3)
            u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        worst = max(worst, abs(u - gronwall_bound(d1, d2, 2.0)))
    report(10, worst <= 1e-8, f"max |RK4 - bound| at t=2: {worst:.1e} (<=1e-8)")
