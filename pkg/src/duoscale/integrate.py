"""Time-domain integration of the full equations and remainder checks."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .asymptotics import (AmplitudePhase, FirstOrderParams, amplitude_phase_rhs,
                          backbone_frequency, first_order_params)
from .errors import DomainError, IntegrationFailure, InvalidArgument
from .model import ChainSystem, ModalBasis, modal_decompose
from .response import stationary_solve


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled trajectory; ``u`` and ``v`` have one row per sample."""

    t0: float
    dt: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgument("dt must be > 0")
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if v.ndim == 1:
            v = v[:, None]
        if u.shape != v.shape:
            raise InvalidArgument("u and v must have the same shape")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __len__(self):
        return self.u.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "theta"
    theta: float = 0.5
    dt: float = 0.01
    t_end: float = 10.0
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    stride: int = 1

    def __post_init__(self):
        if self.method not in ("theta", "rk4"):
            raise InvalidArgument(f"unknown integration method {self.method!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidArgument("theta must lie in [0, 1]")
        if not self.dt > 0 or not self.t_end > 0:
            raise InvalidArgument("dt and t_end must be > 0")
        if self.stride < 1:
            raise InvalidArgument("stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_end / self.dt + 1e-9))


class Dynamics:
    """First-order form ``y' = L y + N(y) + g(t)`` of a chain, assembled once."""

    def __init__(self, system: ChainSystem, basis: ModalBasis | None = None):
        if basis is None:
            basis = modal_decompose(system)
        self.system = system
        self.basis = basis
        n = system.n
        M = system.mass_matrix
        Minv = np.linalg.inv(M)
        eps = system.epsilon
        MPhi = M @ basis.modes
        C = MPhi @ np.diag(system.modal_damping) @ MPhi.T
        self.n = n
        self.L = np.block([[np.zeros((n, n)), np.eye(n)],
                           [-Minv @ system.stiffness_matrix, -eps * Minv @ C]])
        self.e = system.gap_vector()
        self.w = Minv @ self.e
        self.spring = system.spring
        self.force = eps**2 * (Minv @ system.forcing_amplitude)
        self.forced = system.is_forced
        k = system.driven_mode
        self.omega_tilde = basis.frequencies[k - 1] + eps * system.forcing_detuning

    def nonlinear(self, y):
        out = np.zeros(2 * self.n)
        out[self.n:] = -self.spring.tension(self.e @ y[: self.n]) * self.w
        return out

    def external(self, t):
        out = np.zeros(2 * self.n)
        if self.forced:
            out[self.n:] = self.force * math.cos(self.omega_tilde * t)
        return out

    def __call__(self, t, y):
        return self.L @ y + self.nonlinear(y) + self.external(t)

    def jacobian(self, y):
        J = self.L.copy()
        slope = self.spring.tension_slope(self.e @ y[: self.n])
        J[self.n:, : self.n] -= slope * np.outer(self.w, self.e)
        return J


def rhs_full(system: ChainSystem, t: float, u, v):
    """``(u', v')`` of the full nonlinear equations of motion."""
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if u.shape != (system.n,) or v.shape != (system.n,):
        raise InvalidArgument(f"u and v must have length {system.n}")
    dyn = Dynamics(system)
    dy = dyn(t, np.concatenate([u, v]))
    return dy[: system.n], dy[system.n:]


def _initial_vector(system, u0, v0):
    u0 = np.asarray(u0, dtype=float).reshape(-1)
    v0 = np.asarray(v0, dtype=float).reshape(-1)
    if u0.shape != (system.n,) or v0.shape != (system.n,):
        raise InvalidArgument(f"initial data must have length {system.n}")
    return np.concatenate([u0, v0])


def _pack(samples, n, dt, stride):
    Y = np.asarray(samples)
    return TimeSeries(0.0, dt * stride, Y[:, :n], Y[:, n:])


def integrate_theta(system: ChainSystem, u0, v0, cfg: IntegratorConfig,
                    basis: ModalBasis | None = None) -> TimeSeries:
    """Theta scheme ``y+ = y + dt [(1 - th) f(t, y) + th f(t + dt, y+)]``.

    The linear part is inverted exactly; the nonlinear part is resolved by
    fixed-point iteration, with a Newton fallback when that stalls.
    """
    dyn = Dynamics(system, basis)
    y = _initial_vector(system, u0, v0)
    n, dt, th = system.n, cfg.dt, cfg.theta
    P = np.linalg.inv(np.eye(2 * n) - dt * th * dyn.L)
    f_k = dyn(0.0, y)
    samples = [y.copy()]
    for k in range(cfg.n_steps):
        t1 = (k + 1) * dt
        base = y + dt * (1.0 - th) * f_k + dt * th * dyn.external(t1)
        Y = _theta_solve(dyn, P, base, y + dt * f_k, dt * th, cfg, t1)
        if Y is None:
            raise IntegrationFailure(f"theta inner solve failed at step {k + 1}", step=k + 1)
        y = Y
        f_k = dyn(t1, y)
        if (k + 1) % cfg.stride == 0:
            if not np.all(np.isfinite(y)):
                raise IntegrationFailure(f"non-finite state at step {k + 1}", step=k + 1)
            samples.append(y.copy())
    return _pack(samples, n, dt, cfg.stride)


def _theta_solve(dyn, P, base, guess, h, cfg, t1):
    tol = cfg.newton_tol
    Y = guess
    prev = math.inf
    for _ in range(cfg.newton_max_iter):
        Y_new = P @ (base + h * dyn.nonlinear(Y))
        delta = np.max(np.abs(Y_new - Y))
        Y = Y_new
        if not np.all(np.isfinite(Y)):
            break
        if delta <= tol * max(1.0, np.max(np.abs(Y))):
            return Y
        if delta >= prev:
            break
        prev = delta
    # Newton on G(Y) = Y - base - h (L Y + N(Y))
    Y = guess
    eye = np.eye(len(Y))
    for _ in range(cfg.newton_max_iter):
        G = Y - base - h * (dyn.L @ Y + dyn.nonlinear(Y))
        step = np.linalg.solve(eye - h * dyn.jacobian(Y), G)
        Y = Y - step
        if not np.all(np.isfinite(Y)):
            return None
        if np.max(np.abs(step)) <= tol * max(1.0, np.max(np.abs(Y))):
            return Y
    return None


def integrate_rk4(system: ChainSystem, u0, v0, cfg: IntegratorConfig,
                  basis: ModalBasis | None = None) -> TimeSeries:
    dyn = Dynamics(system, basis)
    y = _initial_vector(system, u0, v0)
    n, h = system.n, cfg.dt
    samples = [y.copy()]
    for k in range(cfg.n_steps):
        t = k * h
        k1 = dyn(t, y)
        k2 = dyn(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = dyn(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = dyn(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationFailure(f"non-finite state at step {k + 1}", step=k + 1)
        if (k + 1) % cfg.stride == 0:
            samples.append(y.copy())
    return _pack(samples, n, h, cfg.stride)


def integrate(system, u0, v0, cfg, basis=None) -> TimeSeries:
    if cfg.method == "rk4":
        return integrate_rk4(system, u0, v0, cfg, basis)
    return integrate_theta(system, u0, v0, cfg, basis)


def mechanical_energy(system: ChainSystem, series: TimeSeries) -> np.ndarray:
    """Kinetic + linear elastic + spring potential, per sample."""
    M, K = system.mass_matrix, system.stiffness_matrix
    U, V = series.u, series.v
    kinetic = 0.5 * np.einsum("ij,jk,ik->i", V, M, V)
    elastic = 0.5 * np.einsum("ij,jk,ik->i", U, K, U)
    return kinetic + elastic + system.spring.potential(U @ system.gap_vector())


def envelope(series: TimeSeries, component: int, window: float, t_start: float | None = None):
    """Windowed peak measure: ``max |u|`` over consecutive windows of length ``window``.

    Returns ``(t_mid, peaks)``; a trailing partial window is dropped.
    """
    if not window > 0:
        raise InvalidArgument("window must be > 0")
    t = series.t
    x = np.abs(series.u[:, component])
    start = t[0] if t_start is None else t_start
    per = max(int(round(window / series.dt)), 1)
    i0 = int(np.searchsorted(t, start - 1e-12))
    n_win = (len(t) - i0) // per
    if n_win == 0:
        raise InvalidArgument("record shorter than one window")
    blocks = x[i0:i0 + n_win * per].reshape(n_win, per)
    mids = t[i0] + (np.arange(n_win) + 0.5) * per * series.dt
    return mids, blocks.max(axis=1)


def initial_state(system: ChainSystem, basis: ModalBasis, a0: float, beta0: float = 0.0,
                  zero_velocity: bool = False):
    """Initial data consistent with ``y_k = eps a cos(w t + beta)`` on the driven mode.

    ``u(0) = eps a0 cos(beta0) phi``, ``u'(0) = -eps omega a0 sin(beta0) phi``;
    ``zero_velocity`` starts from rest instead.
    """
    k = system.driven_mode
    phi = basis.mode(k)
    eps = system.epsilon
    u0 = eps * a0 * math.cos(beta0) * phi
    if zero_velocity:
        v0 = np.zeros(system.n)
    else:
        v0 = -eps * basis.frequencies[k - 1] * a0 * math.sin(beta0) * phi
    return u0, v0


def _slow_flow_at_samples(params, state0, t):
    """RK4 slow flow sampled at ``T1 = eps * t`` (uniform ``t``)."""
    eps = params.epsilon
    h = eps * (t[1] - t[0]) if len(t) > 1 else 0.0
    a = np.empty(len(t))
    b = np.empty(len(t))
    x, y = state0.a, state0.beta
    a[0], b[0] = x, y

    def g(p, q):
        return amplitude_phase_rhs(params, AmplitudePhase(p, q))

    for i in range(1, len(t)):
        k1 = g(x, y)
        k2 = g(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1])
        k3 = g(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1])
        k4 = g(x + h * k3[0], y + h * k3[1])
        x += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        a[i], b[i] = x, y
    return a, b


def remainder_series(series: TimeSeries, params: FirstOrderParams, mode: str = "free",
                     a0: float | None = None, state0: AmplitudePhase | None = None,
                     projector=None) -> TimeSeries:
    """Scaled remainder ``r = (y - eps y1) / eps**2`` and its time derivative.

    ``y`` is ``series.u @ projector`` (the driven modal coordinate when the
    projector is ``M phi``), or the first component when no projector is
    given. ``mode="free"`` compares with ``eps a0 cos(nu t)``;
    ``mode="forced"`` with ``eps a cos(w t + beta)`` where ``(a, beta)`` follow
    the slow flow from ``state0``.
    """
    eps = params.epsilon
    t = series.t
    if projector is None:
        y, ydot = series.u[:, 0], series.v[:, 0]
    else:
        projector = np.asarray(projector, dtype=float)
        y, ydot = series.u @ projector, series.v @ projector
    if mode == "free":
        if a0 is None:
            raise InvalidArgument("free remainder needs a0")
        nu = backbone_frequency(params, a0)
        y1 = a0 * np.cos(nu * t)
        y1dot = -a0 * nu * np.sin(nu * t)
    elif mode == "forced":
        if state0 is None:
            raise InvalidArgument("forced remainder needs the initial slow state")
        a, b = _slow_flow_at_samples(params, state0, t)
        w = params.forcing_frequency
        theta = w * t + b
        da = np.empty_like(a)
        db = np.empty_like(b)
        for i in range(len(a)):
            da[i], db[i] = amplitude_phase_rhs(params, AmplitudePhase(a[i], b[i]))
        y1 = a * np.cos(theta)
        y1dot = -w * a * np.sin(theta) + eps * (da * np.cos(theta) - a * db * np.sin(theta))
    else:
        raise InvalidArgument(f"mode must be 'free' or 'forced', got {mode!r}")
    r = (y - eps * y1) / eps**2
    rdot = (ydot - eps * y1dot) / eps**2
    return TimeSeries(series.t0, series.dt, r, rdot)


@dataclass(frozen=True)
class ExpansionReport:
    epsilons: tuple
    gamma: float
    horizons: tuple
    sup_remainders: tuple
    growth_ratios: tuple
    verdict: str


GROWTH_LIMIT = 2.0
RATIO_FLOOR = 1e-8


def _ladder_run(args):
    system, eps, gamma, a0, beta0, cfg, zero_velocity = args
    sys_e = system.with_epsilon(eps)
    basis = modal_decompose(sys_e)
    params = first_order_params(sys_e, basis)
    horizon_steps = int(math.floor(gamma / eps / cfg.dt + 1e-9))
    run_cfg = replace(cfg, t_end=horizon_steps * cfg.dt, stride=1)
    u0, v0 = initial_state(sys_e, basis, a0, beta0, zero_velocity)
    try:
        series = integrate(sys_e, u0, v0, run_cfg, basis)
    except IntegrationFailure as exc:
        raise IntegrationFailure(f"{exc} (epsilon={eps})", step=exc.step, epsilon=eps) from exc
    k = sys_e.driven_mode
    projector = sys_e.mass_matrix @ basis.mode(k)
    if sys_e.is_forced:
        rem = remainder_series(series, params, "forced",
                               state0=AmplitudePhase(a0, beta0), projector=projector)
    else:
        rem = remainder_series(series, params, "free", a0=a0, projector=projector)
    return horizon_steps * cfg.dt, float(np.max(np.abs(rem.u)))


def expansion_verify(system: ChainSystem, epsilons, gamma: float = 1.0, a0: float | None = None,
                     beta0: float | None = None, cfg: IntegratorConfig | None = None,
                     zero_velocity: bool = False, workers: int = 1) -> ExpansionReport:
    """Empirical boundedness of the scaled remainder over ``[0, gamma / eps]``.

    Free systems start from ``eps a0 phi`` at rest (``a0`` defaults to 1).
    Forced systems default to the stationary slow state nearest the peak
    amplitude. The verdict is ``"bounded"`` when every consecutive ratio of
    sup-remainders is at most 2; ratios are taken against ``max(previous,
    1e-8)`` so that integrator noise in exact cases does not count as growth.
    """
    eps_list = [float(e) for e in epsilons]
    if len(eps_list) < 3:
        raise InvalidArgument("need at least three epsilon values")
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidArgument("epsilons must be positive and strictly decreasing")
    if not gamma > 0:
        raise InvalidArgument("gamma must be > 0")
    cfg = cfg or IntegratorConfig(method="rk4", dt=0.005, t_end=1.0)

    if system.is_forced:
        params = first_order_params(system)
        if a0 is None or beta0 is None:
            a_guess = abs(params.f) / (params.lam * params.omega) if params.lam > 0 else 1.0
            point = stationary_solve(params, params.sigma, a_guess if a0 is None else a0)
            a0 = point.a if a0 is None else a0
            beta0 = point.beta if beta0 is None else beta0
    else:
        a0 = 1.0 if a0 is None else a0
        beta0 = 0.0 if beta0 is None else beta0
    if system.is_forced and not a0 > 0:
        raise DomainError("forced verification needs a0 > 0")

    jobs = [(system, e, gamma, a0, beta0, cfg, zero_velocity) for e in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_ladder_run, jobs))
    else:
        results = [_ladder_run(j) for j in jobs]
    horizons = tuple(h for h, _ in results)
    sups = tuple(s for _, s in results)
    ratios = tuple(sups[i + 1] / max(sups[i], RATIO_FLOOR) for i in range(len(sups) - 1))
    verdict = "bounded" if all(r <= GROWTH_LIMIT for r in ratios) else "growing"
    return ExpansionReport(tuple(eps_list), float(gamma), horizons, sups, ratios, verdict)


def gronwall_bound(delta1: float, delta2: float, t: float) -> float:
    """``(delta2 / delta1) (exp(delta1 t) - 1)``."""
    if not delta1 > 0:
        raise InvalidArgument("delta1 must be > 0")
    if delta2 < 0 or t < 0:
        raise InvalidArgument("delta2 and t must be >= 0")
    return delta2 / delta1 * math.expm1(delta1 * t)
