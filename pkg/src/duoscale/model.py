"""Spring-mass chains with one local cubic spring, and their modal basis.

Indices ``p`` and ``driven_mode`` are 1-based, as in the usual mechanical
notation; arrays are 0-based internally.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionFailure, DegenerateSpectrum, InvalidArgument

SYMMETRY_RTOL = 1e-12
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class NonlinearSpring:
    """Local spring with tension ``c g**2 + (d / epsilon) g**3``.

    ``g`` is the elongation ``u_p - u_{p-1}``; for ``p == 1`` the spring
    ties node 1 to the wall and ``g = u_1``.
    """

    c: float = 0.0
    d: float = 0.0
    epsilon: float = 0.1
    p: int = 1

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise InvalidArgument(f"epsilon must be > 0, got {self.epsilon}")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidArgument(f"p must be a positive integer, got {self.p}")

    def tension(self, g):
        return self.c * g**2 + (self.d / self.epsilon) * g**3

    def tension_slope(self, g):
        return 2.0 * self.c * g + 3.0 * (self.d / self.epsilon) * g**2

    def potential(self, g):
        return self.c * g**3 / 3.0 + self.d * g**4 / (4.0 * self.epsilon)


def _as_matrix(a, n, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape != (n, n):
        raise InvalidArgument(f"{name} must be {n}x{n}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument(f"{name} has non-finite entries")
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
        raise InvalidArgument(f"{name} is not symmetric")
    return a


@dataclass(frozen=True)
class ChainSystem:
    """``M u'' + eps C u' + K u + Phi(u, eps) = eps**2 F cos(w t)``.

    Damping is modal: ``C`` is diagonal with entries ``modal_damping`` in
    the M-orthonormal eigenbasis. The forcing frequency is
    ``w = omega_{driven_mode} + eps * forcing_detuning``.
    Positive definiteness of M and K is checked by :func:`modal_decompose`.
    """

    mass_matrix: np.ndarray
    stiffness_matrix: np.ndarray
    spring: NonlinearSpring
    modal_damping: np.ndarray | None = None
    forcing_amplitude: np.ndarray | None = None
    forcing_detuning: float = 0.0
    driven_mode: int = 1

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.mass_matrix, dtype=float))
        n = M.shape[0]
        if n < 1:
            raise InvalidArgument("system dimension must be >= 1")
        object.__setattr__(self, "mass_matrix", _as_matrix(M, n, "mass_matrix"))
        object.__setattr__(
            self, "stiffness_matrix", _as_matrix(self.stiffness_matrix, n, "stiffness_matrix")
        )
        lam = np.zeros(n) if self.modal_damping is None else self.modal_damping
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (n,)).copy()
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise InvalidArgument("modal_damping entries must be finite and >= 0")
        object.__setattr__(self, "modal_damping", lam)
        F = np.zeros(n) if self.forcing_amplitude is None else self.forcing_amplitude
        F = np.asarray(F, dtype=float).reshape(-1)
        if F.shape != (n,) or not np.all(np.isfinite(F)):
            raise InvalidArgument(f"forcing_amplitude must be a finite vector of length {n}")
        object.__setattr__(self, "forcing_amplitude", F)
        if self.spring.p > n:
            raise InvalidArgument(f"spring index p={self.spring.p} exceeds n={n}")
        if not 1 <= self.driven_mode <= n:
            raise InvalidArgument(f"driven_mode must lie in 1..{n}")
        if not np.isfinite(self.forcing_detuning):
            raise InvalidArgument("forcing_detuning must be finite")

    @property
    def n(self) -> int:
        return self.mass_matrix.shape[0]

    @property
    def epsilon(self) -> float:
        return self.spring.epsilon

    @property
    def is_forced(self) -> bool:
        return bool(np.any(self.forcing_amplitude != 0.0))

    def gap_vector(self) -> np.ndarray:
        """Vector ``e`` with ``g = e @ u`` (the spring elongation)."""
        e = np.zeros(self.n)
        p = self.spring.p
        e[p - 1] = 1.0
        if p >= 2:
            e[p - 2] = -1.0
        return e

    def with_epsilon(self, epsilon: float) -> "ChainSystem":
        s = self.spring
        return ChainSystem(
            self.mass_matrix,
            self.stiffness_matrix,
            NonlinearSpring(s.c, s.d, epsilon, s.p),
            self.modal_damping,
            self.forcing_amplitude,
            self.forcing_detuning,
            self.driven_mode,
        )


def build_chain(n, mass, stiffness, spring, damping=0.0, forcing=None,
                detuning=0.0, driven_mode=1) -> ChainSystem:
    """Uniform fixed-fixed chain: ``M = mass * I``, ``K = stiffness * tridiag(-1, 2, -1)``."""
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n}")
    if not mass > 0 or not stiffness > 0:
        raise InvalidArgument("mass and stiffness must be > 0")
    n = int(n)
    M = mass * np.eye(n)
    K = stiffness * (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))
    return ChainSystem(M, K, spring, np.full(n, float(damping)), forcing,
                       float(detuning), driven_mode)


def nonlinear_force(system: ChainSystem, u) -> np.ndarray:
    """Internal force vector of the local spring.

    The force is the gradient of the spring potential with respect to
    ``u``: ``+T(g)`` at node ``p`` and ``-T(g)`` at node ``p - 1``.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (system.n,):
        raise InvalidArgument(f"u must have length {system.n}, got shape {u.shape}")
    e = system.gap_vector()
    return system.spring.tension(e @ u) * e


def nonlinear_potential(system: ChainSystem, u) -> float:
    return float(system.spring.potential(system.gap_vector() @ np.asarray(u, dtype=float)))


@dataclass(frozen=True)
class ModalBasis:
    frequencies: np.ndarray
    modes: np.ndarray
    gaps: np.ndarray = field(default=None)

    @property
    def n(self) -> int:
        return len(self.frequencies)

    def mode(self, k: int) -> np.ndarray:
        """Mode shape ``phi_k`` for 1-based ``k``."""
        return self.modes[:, k - 1]


def jacobi_eigh(A, tol=1e-15, max_sweeps=60):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` unsorted; eigenvectors are the
    columns of the accumulated rotation.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    A[p, q] = A[q, p] = 0.0
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- R^T A R with R the (p, q) plane rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise DecompositionFailure("Jacobi iteration did not converge")
    return np.diag(A).copy(), V


def generalized_eigh(K, M):
    """Solve ``K phi = w**2 M phi`` with ``phi^T M phi = I``.

    Cholesky ``M = L L^T`` reduces the pencil to the symmetric matrix
    ``L^-1 K L^-T`` which is diagonalised by :func:`jacobi_eigh`.
    Eigenvalues are returned ascending.
    """
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure("mass matrix is not positive definite") from exc
    Linv_K = np.linalg.solve(L, K)
    A = np.linalg.solve(L, Linv_K.T).T
    A = 0.5 * (A + A.T)
    vals, W = jacobi_eigh(A)
    order = np.argsort(vals)
    vals = vals[order]
    Phi = np.linalg.solve(L.T, W[:, order])
    return vals, Phi


def modal_decompose(system: ChainSystem) -> ModalBasis:
    vals, Phi = generalized_eigh(system.stiffness_matrix, system.mass_matrix)
    if vals[0] <= 0:
        raise DecompositionFailure("stiffness matrix is not positive definite")
    gaps_between = np.diff(vals)
    if np.any(gaps_between <= DEGENERACY_RTOL * vals[-1]):
        raise DegenerateSpectrum("repeated eigenfrequency in the linear spectrum")
    # sign convention: largest-magnitude entry of each mode is positive
    idx = np.argmax(np.abs(Phi), axis=0)
    signs = np.sign(Phi[idx, np.arange(Phi.shape[1])])
    Phi = Phi * signs
    gaps = system.gap_vector() @ Phi
    return ModalBasis(np.sqrt(vals), Phi, gaps)


def modal_project(basis: ModalBasis, M, u) -> np.ndarray:
    """Modal coordinates ``y_k = phi_k^T M u`` (``u`` may be a stack of rows)."""
    u = np.asarray(u, dtype=float)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if u.shape[-1] != basis.n or M.shape != (basis.n, basis.n):
        raise InvalidArgument("dimension mismatch in modal_project")
    return u @ M @ basis.modes


def modal_reconstruct(basis: ModalBasis, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != basis.n:
        raise InvalidArgument("dimension mismatch in modal_reconstruct")
    return y @ basis.modes.T


@dataclass(frozen=True)
class Resonance:
    k: int
    q: int
    ratio: float


def nonresonance_report(basis: ModalBasis, tolerance: float) -> list[Resonance]:
    """Near-resonances ``|w_k / w_1 - q| < tolerance`` for ``k >= 2``, ``q in {1, 2, 3}``.

    An empty list means the first mode is free of the internal resonances
    excluded by the expansion.
    """
    if not tolerance > 0:
        raise InvalidArgument("tolerance must be > 0")
    w = basis.frequencies
    out = []
    for k in range(2, basis.n + 1):
        ratio = w[k - 1] / w[0]
        for q in (1, 2, 3):
            if abs(ratio - q) < tolerance:
                out.append(Resonance(k, q, float(ratio)))
    return out
