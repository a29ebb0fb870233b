"""Small dense kernels: symmetric eigensolver, sphere quadrature,
moment-constraint solve and derivative-free minimizers.

Everything here is sized for matrices of at most a few dozen rows, so
clarity wins over asymptotic cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numba
import numpy as np
from scipy import optimize

from .errors import ConvergenceError, EvaluationError, InputError, SingularSystemError

SIGN_EPS = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def as_symmetric(m, *, rtol: float = 1e-12) -> np.ndarray:
    """Validate ``m`` as a finite real symmetric matrix and return an exactly
    symmetric float copy."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InputError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a - a.T)) > rtol * scale:
        raise InputError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def fix_sign(v: np.ndarray, eps: float = SIGN_EPS) -> np.ndarray:
    """Flip ``v`` so that its first entry with magnitude above ``eps`` is positive."""
    v = np.asarray(v, dtype=float)
    big = np.flatnonzero(np.abs(v) > eps)
    if big.size and v[big[0]] < 0:
        return -v
    return v


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray  # columns

    def __len__(self):
        return len(self.values)

    def vector(self, i: int) -> np.ndarray:
        return self.vectors[:, i]


def eigh_symmetric(m, *, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi diagonalization of a real symmetric matrix.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``1e-14 * ||m||_F``. Eigenvalues are returned ascending; each eigenvector
    has its first significant entry positive.
    """
    a = as_symmetric(m)
    v = np.eye(a.shape[0])
    threshold = 1e-14 * np.linalg.norm(a)
    if not _jacobi_sweeps(a, v, threshold, max_sweeps):
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    n = a.shape[0]
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    vectors = v[:, order]
    for i in range(n):
        vectors[:, i] = fix_sign(vectors[:, i])
    return EigenDecomposition(values[order], vectors)


@numba.njit(cache=True, nogil=True)
def _jacobi_sweeps(a, v, threshold, max_sweeps):
    # in place: a -> diagonal, v accumulates the rotations
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if math.sqrt(off) <= threshold:
            return True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return False


@dataclass(frozen=True)
class SphereQuadrature:
    """Product rule on the unit sphere.

    ``theta``, ``phi`` and ``weights`` are flat arrays of equal length; the
    weights already include the ``sin(theta) dtheta dphi`` measure, so they
    sum to 4*pi.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    n_theta: int
    n_phi: int

    @property
    def nodes(self) -> list[tuple[float, float, float]]:
        return list(zip(self.theta.tolist(), self.phi.tolist(), self.weights.tolist()))

    def directions(self) -> np.ndarray:
        """Unit wave vectors, shape (n_nodes, 3)."""
        st = np.sin(self.theta)
        return np.column_stack(
            [st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)]
        )

    def integrate(self, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
        """Integrate ``f(theta, phi)`` (vectorized) over the sphere."""
        return float(np.sum(self.weights * f(self.theta, self.phi)))


def sphere_quadrature(n_theta: int = 64, n_phi: int = 64) -> SphereQuadrature:
    """Gauss-Legendre nodes in cos(theta) times uniform nodes in phi."""
    if n_theta < 2 or n_phi < 2:
        raise InputError("sphere_quadrature needs n_theta >= 2 and n_phi >= 2")
    mu, w_mu = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    theta = np.arccos(mu)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ww = np.outer(w_mu, np.full(n_phi, 2.0 * np.pi / n_phi))
    return SphereQuadrature(tt.ravel(), pp.ravel(), ww.ravel(), n_theta, n_phi)


def scaled_coordinates(positions: Sequence[float]) -> np.ndarray:
    """Map 1-D coordinates affinely onto [0, 1] (min -> 0, max -> 1)."""
    x = np.asarray(positions, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InputError("need at least two 1-D coordinates")
    if not np.all(np.isfinite(x)):
        raise InputError("coordinates must be finite")
    extent = x.max() - x.min()
    if extent <= 0.0:
        raise SingularSystemError("all coordinates coincide")
    return (x - x.min()) / extent


def solve_moment_constraints(positions: Sequence[float]) -> np.ndarray:
    """Unit vector ``c`` with ``sum_j t_j**n c_j = 0`` for ``n = 0..N-2``.

    ``t`` are the coordinates rescaled to [0, 1]. The solution is the vector
    of leading Lagrange coefficients, ``c_j ∝ 1 / prod_{k != j} (t_j - t_k)``,
    i.e. the last row of the inverse Vandermonde matrix, which avoids forming
    or inverting the (badly conditioned) Vandermonde matrix itself.
    """
    t = scaled_coordinates(positions)
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.min(np.abs(diff)) < 1e-13:
        raise SingularSystemError("duplicate positions make the moment system singular")
    # log-domain products keep N ~ 16 clear of underflow
    log_mag = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    c = sign * np.exp(log_mag - log_mag.max())
    return fix_sign(c / np.linalg.norm(c))


def moment_residuals(positions: Sequence[float], c: Sequence[float]) -> np.ndarray:
    """Power moments ``sum_j t_j**n c_j`` for ``n = 0..N-2`` on [0, 1]-scaled coordinates."""
    t = scaled_coordinates(positions)
    powers = np.vander(t, len(t) - 1, increasing=True)
    return powers.T @ np.asarray(c, dtype=float)


def _checked(f):
    def wrapped(x):
        y = f(x)
        y = float(y)
        if not math.isfinite(y):
            raise EvaluationError(f"objective returned {y} at {x!r}")
        return y

    return wrapped


def golden_section(f, lo: float, hi: float, tol: float = 1e-9, max_iter: int = 500):
    """Golden-section search on ``[lo, hi]``; returns ``(x_min, f_min)``.

    The best point seen (including the endpoints) is returned, so a minimum on
    the boundary or at a kink is reported correctly.
    """
    f = _checked(f)
    a, b = float(lo), float(hi)
    best = min((f(a), a), (f(b), b))
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    best = min(best, (f1, x1), (f2, x2))
    return best[1], best[0]


def minimize_scalar(
    f: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-9,
    grid_points: int = 2001,
):
    """Minimize ``f`` on ``bracket``: uniform pre-scan, then golden section
    inside the two grid cells around the best node.

    The pre-scan matters for very narrow minima that a bare golden-section
    search could step over. Returns ``(x_min, f_min)``.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise InputError(f"invalid bracket ({lo}, {hi})")
    checked = _checked(f)
    grid = np.linspace(lo, hi, max(int(grid_points), 3))
    values = np.array([checked(x) for x in grid])
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    x, fx = golden_section(checked, a, b, tol=tol)
    if values[i] < fx:
        return float(grid[i]), float(values[i])
    return x, fx


def minimize_multi(
    f: Callable[[np.ndarray], float],
    start: Sequence[float],
    step: float = 1e-2,
    tol: float = 1e-10,
    max_rounds: int = 60,
):
    """Restarted Nelder-Mead simplex search; returns ``(point, value)``.

    Each round starts a fresh simplex around the incumbent, sized from the
    previous round's final simplex. Restarts recover from the simplex
    collapsing in strongly anisotropic valleys. The search stops once no axis
    step of size ``tol`` lowers ``f`` by more than ``tol * |f|`` and a round
    at the smallest simplex brings no improvement.
    """
    checked = _checked(f)
    x = np.atleast_1d(np.asarray(start, dtype=float)).copy()
    d = x.size
    if d < 1:
        raise InputError("minimize_multi needs at least one dimension")
    fx = checked(x)
    size = float(step)
    for _ in range(max_rounds):
        simplex = np.vstack([x] + [x + size * e for e in np.eye(d)])
        res = optimize.minimize(
            checked,
            x,
            method="Nelder-Mead",
            options=dict(
                initial_simplex=simplex,
                xatol=tol,
                fatol=0.0,
                maxfev=2000 * d,
                adaptive=d > 2,
            ),
        )
        if res.fun < fx:
            improvement = fx - res.fun
            x, fx = np.asarray(res.x, dtype=float), float(res.fun)
            spread = float(np.max(np.abs(res.final_simplex[0] - x)))
            size = max(10.0 * spread, tol)
            if improvement > 1e-12 * abs(fx):
                continue
        if size <= 10.0 * tol and _is_axis_minimum(checked, x, fx, tol):
            return x, fx
        size = max(size / 10.0, tol)
    raise ConvergenceError(f"no convergence after {max_rounds} restarts", best=(x, fx))


def _is_axis_minimum(f, x, fx, tol):
    for e in np.eye(x.size):
        for sgn in (1.0, -1.0):
            if f(x + sgn * tol * e) < fx - tol * abs(fx):
                return False
    return True
