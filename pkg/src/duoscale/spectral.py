"""Almost-periodic Fourier coefficients of sampled trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .integrate import TimeSeries

DEFAULT_TRANSIENT = 0.1
_CHUNK = 64


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    coefficients: np.ndarray
    window: tuple[float, float]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.coefficients)

    @property
    def resolution(self) -> float:
        """``2 pi / T`` for the analysis window length ``T``."""
        return 2.0 * np.pi / (self.window[1] - self.window[0])

    @property
    def grid_step(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


@dataclass(frozen=True)
class Peak:
    frequency: float
    magnitude: float
    prominence: float


def _window(series: TimeSeries, component: int, transient: float):
    if len(series) < 2:
        raise InvalidArgument("series needs at least two samples")
    if not 0 <= component < series.u.shape[1]:
        raise InvalidArgument(f"component {component} out of range")
    if not 0.0 <= transient < 1.0:
        raise InvalidArgument("transient fraction must lie in [0, 1)")
    t = series.t
    start = int(np.ceil(transient * (len(t) - 1)))
    t, x = t[start:], series.u[start:, component]
    if len(t) < 2:
        raise InvalidArgument("analysis window holds fewer than two samples")
    return t, x


def _trapezoid_weights(t):
    w = np.full(len(t), t[1] - t[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return w / (t[-1] - t[0])


def ap_fourier_coefficient(series: TimeSeries, component: int, lam: float,
                           transient: float = DEFAULT_TRANSIENT) -> complex:
    """``(1/T) int u(t) exp(-i lam t) dt`` over the analysis window, by trapezoids.

    The window starts after the leading ``transient`` fraction of the record;
    pass ``transient=0`` for the whole record.
    """
    t, x = _window(series, component, transient)
    w = _trapezoid_weights(t)
    return complex(np.sum(w * x * np.exp(-1j * lam * t)))


def spectrum_scan(series: TimeSeries, component: int, lambda_min: float, lambda_max: float,
                  n_grid: int, transient: float = DEFAULT_TRANSIENT) -> Spectrum:
    if not lambda_min < lambda_max:
        raise InvalidArgument("lambda_min must be < lambda_max")
    if n_grid < 2:
        raise InvalidArgument("n_grid must be >= 2")
    t, x = _window(series, component, transient)
    wx = _trapezoid_weights(t) * x
    lams = np.linspace(lambda_min, lambda_max, int(n_grid))
    coef = np.empty(len(lams), dtype=complex)
    for i in range(0, len(lams), _CHUNK):
        block = lams[i:i + _CHUNK]
        coef[i:i + _CHUNK] = np.exp(-1j * np.outer(block, t)) @ wx
    return Spectrum(lams, coef, (float(t[0]), float(t[-1])))


def peak_detect(spectrum: Spectrum, min_prominence: float, leakage_margin: float = 2.0) -> list[Peak]:
    """Local maxima of ``|alpha|`` standing out from the spectrum.

    A local maximum is kept when its magnitude exceeds ``min_prominence``
    times the median magnitude and it is not explained by the leakage of a
    stronger kept peak: a sinusoid of coefficient ``A`` at ``l0`` leaks at
    most ``2 A / (T |l - l0|)`` at ``l`` over a window of length ``T``.
    Sidelobes below ``leakage_margin`` times that bound are discarded.
    Peaks are returned by decreasing magnitude; end points of the grid are
    never peaks.
    """
    if not min_prominence > 0:
        raise InvalidArgument("min_prominence must be > 0")
    mag = spectrum.magnitude
    lam = spectrum.frequencies
    if len(mag) < 3:
        return []
    median = float(np.median(mag))
    inner = np.arange(1, len(mag) - 1)
    is_max = (mag[inner] > mag[inner - 1]) & (mag[inner] >= mag[inner + 1])
    cand = inner[is_max & (mag[inner] > min_prominence * median)]
    cand = cand[np.argsort(-mag[cand], kind="stable")]
    T = spectrum.window[1] - spectrum.window[0]
    kept: list[int] = []
    for i in cand:
        leak = 0.0
        for j in kept:
            dist = abs(lam[i] - lam[j])
            leak = max(leak, mag[j] * min(1.0, 2.0 / (T * dist)))
        if mag[i] > leakage_margin * leak:
            kept.append(int(i))
    scale = median if median > 0 else np.finfo(float).tiny
    return [Peak(float(lam[i]), float(mag[i]), float(mag[i] / scale)) for i in kept]
