"""Stationary forced response: amplitude/detuning curve and its stability."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import FirstOrderParams, backbone_detuning
from .errors import DomainError, EmptyCurve, InvalidArgument, NoConvergence

RESIDUAL_TOL = 1e-10
STEP_TOL = 1e-12
MAX_NEWTON = 100
MAX_HALVINGS = 20


def stationary_residual(params: FirstOrderParams, a, sigma):
    """``lam**2 a**2 w**2 + a**2 (2 w sigma - 3 d a**2 / 4)**2 - f**2``."""
    w = params.omega
    a2 = np.asarray(a, dtype=float) ** 2
    detune = 2.0 * w * sigma - 0.75 * params.d_eff * a2
    return params.lam**2 * a2 * w**2 + a2 * detune**2 - params.f**2


def _residual_da(params, a, sigma):
    w = params.omega
    detune = 2.0 * w * sigma - 0.75 * params.d_eff * a * a
    return (2.0 * a * params.lam**2 * w**2 + 2.0 * a * detune**2
            - 3.0 * params.d_eff * a**3 * detune)


def stationary_amplitudes(params: FirstOrderParams, sigma: float) -> np.ndarray:
    """All positive stationary amplitudes at ``sigma``, ascending.

    The residual is a cubic in ``a**2``; its real positive roots are
    found with a companion-matrix solve. Used to keep continuation on
    one branch.
    """
    w, d = params.omega, params.d_eff
    coeffs = [9.0 * d * d / 16.0, -3.0 * d * w * sigma,
              4.0 * w * w * sigma * sigma + params.lam**2 * w * w, -params.f**2]
    z = np.roots(coeffs)
    z = z[np.abs(z.imag) <= 1e-7 * np.maximum(np.abs(z), 1.0)].real
    return np.sort(np.sqrt(z[z > 0]))


def stationary_jacobian(params: FirstOrderParams, a: float, beta: float) -> np.ndarray:
    """Linearisation of the slow flow about a stationary point ``(a, beta)``."""
    if not a > 0:
        raise DomainError(f"Jacobian is undefined for a = {a}")
    w, f = params.omega, params.f
    return np.array([
        [-0.5 * params.lam, -f * math.cos(beta) / (2.0 * w)],
        [9.0 * params.d_eff * a / (8.0 * w) - params.sigma / a,
         f * math.sin(beta) / (2.0 * w * a)],
    ])


def classify_stability(J) -> bool:
    J = np.asarray(J, dtype=float)
    return bool(np.trace(J) < 0 and np.linalg.det(J) > 0)


def sigma_star(params: FirstOrderParams, a: float) -> tuple[float, bool]:
    """Largest detuning of the lower stability window at amplitude ``a``.

    Returns ``(threshold, always_stable)``. When the discriminant
    ``9 d**2 a**4 / (16 w**2) - lam**2`` is negative the determinant never
    vanishes; the threshold is then ``3 d a**2 / (4 w)`` and the flag is set.
    """
    w, d = params.omega, params.d_eff
    centre = 3.0 * d * a * a / (4.0 * w)
    disc = 9.0 * d * d * a**4 / (16.0 * w * w) - params.lam**2
    if disc < 0:
        return centre, True
    return centre - 0.5 * math.sqrt(disc), False


@dataclass(frozen=True)
class StationaryPoint:
    sigma: float
    a: float
    beta: float
    jacobian: np.ndarray
    trace: float
    det: float
    stable: bool
    residual: float


def _normalize_angle(x: float) -> float:
    y = math.atan2(math.sin(x), math.cos(x))
    return math.pi if y == -math.pi else y


def make_point(params: FirstOrderParams, a: float, sigma: float) -> StationaryPoint:
    """Complete a stationary amplitude with its phase, Jacobian and verdict."""
    if params.f == 0:
        raise InvalidArgument("stationary phase needs a nonzero forcing amplitude")
    w, f = params.omega, params.f
    sin_b = -params.lam * a * w / f
    cos_b = -a * (2.0 * w * sigma - 0.75 * params.d_eff * a * a) / f
    beta = _normalize_angle(math.atan2(sin_b, cos_b))
    at = FirstOrderParams(params.omega, params.d_eff, params.epsilon,
                          params.c_eff, params.lam, params.f, sigma)
    J = stationary_jacobian(at, a, beta)
    return StationaryPoint(
        sigma=float(sigma), a=float(a), beta=beta, jacobian=J,
        trace=float(np.trace(J)), det=float(np.linalg.det(J)),
        stable=classify_stability(J),
        residual=float(abs(stationary_residual(params, a, sigma))),
    )


def _newton_amplitude(params, sigma, a0):
    a = float(a0)
    r = float(stationary_residual(params, a, sigma))
    for _ in range(MAX_NEWTON):
        slope = _residual_da(params, a, sigma)
        if slope == 0 or not math.isfinite(slope):
            break
        step = -r / slope
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = a + lam * step
            if trial > 0:
                r_trial = float(stationary_residual(params, trial, sigma))
                if abs(r_trial) < abs(r):
                    break
            lam *= 0.5
        else:
            if abs(r) <= RESIDUAL_TOL:
                # rounding floor: no further decrease is possible
                return a
            trial = a + lam * step
            if trial <= 0:
                break
            r_trial = float(stationary_residual(params, trial, sigma))
        da = trial - a
        a, r = trial, r_trial
        if abs(r) <= RESIDUAL_TOL and abs(da) <= STEP_TOL * max(1.0, a):
            return a
    raise NoConvergence(f"Newton did not converge at sigma={sigma} from a={a0}")


def stationary_solve(params: FirstOrderParams, sigma: float, a_guess: float) -> StationaryPoint:
    """Stationary amplitude nearest ``a_guess`` by damped Newton in ``a``."""
    if params.f == 0:
        raise InvalidArgument("unforced system: use the backbone instead")
    if not a_guess > 0:
        raise InvalidArgument("a_guess must be > 0")
    a = _newton_amplitude(params, sigma, a_guess)
    return make_point(params, a, sigma)


def peak_point(params: FirstOrderParams) -> StationaryPoint:
    """Resonance peak: ``a = f / (lam w)`` at ``sigma = 3 d a**2 / (8 w)``."""
    if params.lam <= 0 or params.f == 0:
        raise InvalidArgument("peak requires lambda > 0 and f != 0")
    a = abs(params.f) / (params.lam * params.omega)
    sigma = float(backbone_detuning(params, a))
    return make_point(params, a, sigma)


@dataclass
class FrfCurve:
    points: list[StationaryPoint] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    peak: StationaryPoint | None = None

    def __len__(self):
        return len(self.points)

    @property
    def sigma(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])

    @property
    def a(self) -> np.ndarray:
        return np.array([p.a for p in self.points])

    @property
    def stable(self) -> np.ndarray:
        return np.array([p.stable for p in self.points])


def _target_root(prev_roots, a_prev, new_roots):
    """Index in ``new_roots`` continuing the root at ``a_prev``, or None if it vanished."""
    if len(new_roots) == 0 or len(prev_roots) == 0:
        return None
    i_prev = int(np.argmin(np.abs(prev_roots - a_prev)))
    m0, m1 = len(prev_roots), len(new_roots)
    if m1 == m0:
        return i_prev
    if m1 > m0:
        ends = [0, m1 - 1]
        return min(ends, key=lambda j: abs(new_roots[j] - a_prev))
    # roots merged: the survivor continues one of the previous extremes
    ends = [0, m0 - 1]
    origin = min(ends, key=lambda j: abs(prev_roots[j] - new_roots[0]))
    if i_prev != origin:
        return None
    return 0 if origin == 0 else m1 - 1


def frf_trace(params: FirstOrderParams, sigma_min: float, sigma_max: float,
              n_sigma: int, seed: str = "upper") -> FrfCurve:
    """Frequency-response curve by two-phase continuation.

    Phase one sweeps ``sigma`` with a warm-started amplitude Newton solve,
    following the resonant branch (``seed="upper"``) or the non-resonant one
    (``seed="lower"``) until it ends at a fold. Phase two continues past the
    fold in amplitude, solving the residual for ``sigma``. Points of phase
    one are labelled ``"main"``, those of phase two ``"fold-back"``.
    """
    if not sigma_min < sigma_max:
        raise InvalidArgument("sigma_min must be < sigma_max")
    if n_sigma < 2:
        raise InvalidArgument("n_sigma must be >= 2")
    if seed not in ("upper", "lower"):
        raise InvalidArgument("seed must be 'upper' or 'lower'")
    if params.f == 0:
        raise InvalidArgument("frequency response needs a nonzero forcing amplitude")

    ascending = (params.d_eff >= 0) == (seed == "upper")
    grid = np.linspace(sigma_min, sigma_max, int(n_sigma))
    if not ascending:
        grid = grid[::-1]

    curve = FrfCurve()
    a_prev = None
    prev_roots = None
    for s in grid:
        roots = stationary_amplitudes(params, s)
        if a_prev is None:
            if len(roots) == 0:
                continue
            target = roots[-1] if seed == "upper" else roots[0]
            start = target
        else:
            j = _target_root(prev_roots, a_prev, roots)
            if j is None:
                break
            target = roots[j]
            start = a_prev
        try:
            a = _newton_amplitude(params, s, start)
            if abs(a - target) > 1e-6 * max(1.0, target):
                a = _newton_amplitude(params, s, target)
        except NoConvergence:
            if a_prev is None:
                continue
            break
        curve.points.append(make_point(params, a, s))
        curve.labels.append("main")
        prev_roots, a_prev = roots, a

    if not curve.points:
        raise EmptyCurve("no stationary point converged on the sigma grid")

    main = curve.points
    if len(main) < len(grid):
        _fold_back(params, curve, sigma_min, sigma_max, int(n_sigma), seed)

    curve.peak = max(curve.points, key=lambda p: p.a)
    return curve


def _fold_back(params, curve, sigma_min, sigma_max, n, seed):
    last = curve.points[-1]
    if len(curve.points) >= 2 and curve.points[-1].a != curve.points[-2].a:
        direction = math.copysign(1.0, curve.points[-1].a - curve.points[-2].a)
    else:
        direction = -1.0 if seed == "upper" else 1.0
    w, d, lam, f = params.omega, params.d_eff, params.lam, abs(params.f)
    a_cap = f / (lam * w) if lam > 0 else math.inf
    if direction < 0:
        da = last.a / n
    else:
        span = (a_cap - last.a) if math.isfinite(a_cap) else last.a
        da = span / n
    if da <= 0:
        return
    a, s_prev, s_prev2 = last.a, last.sigma, None
    if len(curve.points) >= 2:
        s_prev2 = curve.points[-2].sigma
    for _ in range(10 * n):
        a = a + direction * da
        if a <= 0 or a > a_cap:
            break
        disc = f * f / (a * a) - lam * lam * w * w
        if disc < 0:
            break
        base = 0.75 * d * a * a
        roots = ((base - math.sqrt(disc)) / (2.0 * w), (base + math.sqrt(disc)) / (2.0 * w))
        guess = s_prev if s_prev2 is None else 2.0 * s_prev - s_prev2
        s = min(roots, key=lambda r: abs(r - guess))
        if not sigma_min <= s <= sigma_max:
            break
        curve.points.append(make_point(params, a, s))
        curve.labels.append("fold-back")
        s_prev2, s_prev = s_prev, s
