"""First-order double-scale approximation: backbone and slow flow.

The forced response is ``u ~ eps * a(eps t) * cos(w t + beta(eps t))`` with
``w = omega + eps * sigma``; the amplitude/phase pair obeys the slow flow
returned by :func:`amplitude_phase_rhs` on the slow time ``T1 = eps t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationFailure, InvalidArgument
from .model import ChainSystem, ModalBasis, modal_decompose

AMPLITUDE_FLOOR = 1e-9


@dataclass(frozen=True)
class FirstOrderParams:
    omega: float
    d_eff: float
    epsilon: float
    c_eff: float = 0.0
    lam: float = 0.0
    f: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidArgument(f"omega must be > 0, got {self.omega}")
        if not self.epsilon > 0:
            raise InvalidArgument(f"epsilon must be > 0, got {self.epsilon}")
        if not self.lam >= 0:
            raise InvalidArgument(f"lambda must be >= 0, got {self.lam}")

    @property
    def forcing_frequency(self) -> float:
        return self.omega + self.epsilon * self.sigma


@dataclass(frozen=True)
class AmplitudePhase:
    a: float
    beta: float


def effective_cubic(basis: ModalBasis, p: int, d: float, mode: int = 1) -> float:
    """``d * (phi_{mode,p} - phi_{mode,p-1})**4``.

    ``p`` is accepted for symmetry with the spring definition; the gap
    values stored on the basis already encode it.
    """
    del p
    return float(d * basis.gaps[mode - 1] ** 4)


def first_order_params(system: ChainSystem, basis: ModalBasis | None = None) -> FirstOrderParams:
    """Reduce a chain to the single-mode parameters of its driven mode."""
    if basis is None:
        basis = modal_decompose(system)
    k = system.driven_mode
    gap = basis.gaps[k - 1]
    s = system.spring
    return FirstOrderParams(
        omega=float(basis.frequencies[k - 1]),
        d_eff=effective_cubic(basis, s.p, s.d, k),
        epsilon=s.epsilon,
        c_eff=float(s.c * gap**3),
        lam=float(system.modal_damping[k - 1]),
        f=float(basis.mode(k) @ system.forcing_amplitude),
        sigma=float(system.forcing_detuning),
    )


def backbone_frequency(params: FirstOrderParams, a0: float) -> float:
    """Free-vibration frequency ``omega + 3 eps d a0**2 / (8 omega)``."""
    w = params.omega
    return w + 3.0 * params.epsilon * params.d_eff * a0 * a0 / (8.0 * w)


def backbone_detuning(params: FirstOrderParams, a) -> np.ndarray:
    """Backbone expressed as a detuning: ``3 d a**2 / (8 omega)``."""
    return 3.0 * params.d_eff * np.asarray(a, dtype=float) ** 2 / (8.0 * params.omega)


def free_first_order(params: FirstOrderParams, a0: float, t):
    return params.epsilon * a0 * np.cos(backbone_frequency(params, a0) * np.asarray(t))


def amplitude_phase_rhs(params: FirstOrderParams, state: AmplitudePhase) -> tuple[float, float]:
    """Slow-flow derivatives ``(D1 a, D1 beta)``."""
    a, beta = state.a, state.beta
    if not a > 0:
        raise DomainError(f"slow flow is undefined for a = {a}")
    w, f = params.omega, params.f
    da = -0.5 * params.lam * a - f * math.sin(beta) / (2.0 * w)
    dbeta = (-params.sigma + 3.0 * params.d_eff * a * a / (8.0 * w)
             - f * math.cos(beta) / (2.0 * a * w))
    return da, dbeta


def default_slow_step(params: FirstOrderParams) -> float:
    return 0.01 * (2.0 / params.lam) if params.lam > 0 else 0.01


@dataclass
class SlowFlowTrajectory:
    t1: np.ndarray
    a: np.ndarray
    beta: np.ndarray
    halted: bool = False

    def __len__(self):
        return len(self.t1)

    def __getitem__(self, i) -> AmplitudePhase:
        return AmplitudePhase(float(self.a[i]), float(self.beta[i]))


def slow_flow_integrate(params: FirstOrderParams, state0: AmplitudePhase,
                        t1_end: float, dt1: float | None = None) -> SlowFlowTrajectory:
    """Classical RK4 on the slow flow over ``[0, t1_end]``.

    The run stops early with ``halted=True`` if the amplitude falls below
    ``AMPLITUDE_FLOOR``; the last step is shortened to land on ``t1_end``.
    """
    if dt1 is None:
        dt1 = default_slow_step(params)
    if not dt1 > 0:
        raise InvalidArgument("dt1 must be > 0")
    if not state0.a > 0:
        raise DomainError("initial amplitude must be > 0")
    nsteps = max(int(math.ceil(t1_end / dt1 - 1e-12)), 0)
    t1 = np.empty(nsteps + 1)
    a = np.empty(nsteps + 1)
    b = np.empty(nsteps + 1)
    t1[0], a[0], b[0] = 0.0, state0.a, state0.beta

    def g(x, y):
        return amplitude_phase_rhs(params, AmplitudePhase(x, y))

    x, y, t = state0.a, state0.beta, 0.0
    for i in range(nsteps):
        h = min(dt1, t1_end - t)
        try:
            k1 = g(x, y)
            k2 = g(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1])
            k3 = g(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1])
            k4 = g(x + h * k3[0], y + h * k3[1])
        except DomainError:
            # a stage left the a > 0 chart: the amplitude collapsed
            return SlowFlowTrajectory(t1[: i + 1], a[: i + 1], b[: i + 1], halted=True)
        x = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y = y + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        t = (i + 1) * dt1 if i + 1 < nsteps else t1_end
        if not (math.isfinite(x) and math.isfinite(y)):
            raise IntegrationFailure("slow flow produced non-finite values", step=i + 1)
        t1[i + 1], a[i + 1], b[i + 1] = t, x, y
        if x < AMPLITUDE_FLOOR:
            return SlowFlowTrajectory(t1[: i + 2], a[: i + 2], b[: i + 2], halted=True)
    return SlowFlowTrajectory(t1, a, b)


def forced_first_order(params: FirstOrderParams, state: AmplitudePhase, t):
    """``eps * a * cos(w t + beta)`` at fixed slow state."""
    t = np.asarray(t, dtype=float)
    return params.epsilon * state.a * np.cos(params.forcing_frequency * t + state.beta)
