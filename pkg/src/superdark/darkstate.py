"""Optimal (slowest-decaying) singly excited states.

Three constructions:

* ``darkest_eigenvector``: exact minimizer of ``C^T W C`` over unit vectors,
  valid for any geometry and mode;
* ``moment_dark_state``: kills the first ``N-1`` power moments of the
  amplitudes along a chain, so the emission amplitude starts at order
  ``(k r)**(N-1)``;
* ``binomial_dark_state``: the closed form of the moment solution for an
  equally spaced chain, alternating binomial coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decay import DecayMatrix
from .errors import InputError, UsageError
from .geometry import AtomArray, Polarization
from .numerics import eigh_symmetric, fix_sign, solve_moment_constraints

MAX_BINOMIAL_N = 16


@dataclass(frozen=True)
class ExcitonVector:
    """Real unit amplitude vector of a singly excited collective state."""

    coefficients: np.ndarray
    mode: Polarization = Polarization.PERPENDICULAR

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size < 1 or not np.all(np.isfinite(c)):
            raise InputError("exciton coefficients must be a finite 1-D array")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise InputError(f"exciton vector has norm {np.linalg.norm(c)!r}, expected 1")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "mode", Polarization.parse(self.mode))

    @classmethod
    def normalized(cls, values, mode=Polarization.PERPENDICULAR) -> "ExcitonVector":
        v = np.asarray(values, dtype=float)
        return cls(v / np.linalg.norm(v), mode)

    def __len__(self):
        return self.coefficients.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coefficients, dtype=dtype)


def darkest_eigenvector(w: DecayMatrix) -> tuple[ExcitonVector, float]:
    """Eigenvector of ``W`` with the smallest eigenvalue, and that eigenvalue.

    The eigenvalue is the smallest decay rate any state of the array can
    have. The returned eigenvalue is refined through the amplitude factor when
    one is available, which keeps relative accuracy for very dark states.
    """
    eig = eigh_symmetric(w.matrix)
    vec = eig.vectors[:, 0]
    isolated = len(eig) == 1 or eig.values[1] - eig.values[0] > 1e-12
    if w.amplitude is not None and isolated:
        vec = _refine_null_direction(w.amplitude, vec)
        amp = w.amplitude @ vec
        value = float(amp @ amp)
    elif w.amplitude is not None:
        amp = w.amplitude @ vec
        value = float(amp @ amp)
    else:
        value = max(float(eig.values[0]), 0.0)
    return ExcitonVector(vec, w.mode), value


def _refine_null_direction(b: np.ndarray, start: np.ndarray) -> np.ndarray:
    # smallest right singular vector of B; svd works on B directly, so the
    # tiny singular value is not squared away
    _, _, vt = np.linalg.svd(b, full_matrices=False)
    v = vt[-1]
    if v @ start < 0:
        v = -v
    v = fix_sign(v / np.linalg.norm(v))
    return v


def moment_dark_state(array: AtomArray) -> ExcitonVector:
    """Unit vector with vanishing moments ``n = 0..N-2`` of the chain coordinates."""
    if not array.polarization.is_scalar:
        raise UsageError("moment_dark_state needs a collinear scalar-mode array")
    c = solve_moment_constraints(array.coordinates())
    return ExcitonVector(c, array.polarization)


def binomial_dark_state(n: int, mode=Polarization.PERPENDICULAR) -> ExcitonVector:
    """``C_j = (-1)**(j-1) [(N-1)!]**2 / ((j-1)! (N-j)! sqrt((2N-2)!))``.

    Evaluated in log space; for ``N <= 16`` the result is exact to double
    precision and already normalized.
    """
    if int(n) != n or not 2 <= n <= MAX_BINOMIAL_N:
        raise InputError(f"binomial_dark_state supports 2 <= N <= {MAX_BINOMIAL_N}, got {n}")
    n = int(n)
    j = np.arange(n)
    log_mag = (
        2.0 * math.lgamma(n)
        - np.array([math.lgamma(k + 1) + math.lgamma(n - k) for k in j])
        - 0.5 * math.lgamma(2 * n - 1)
    )
    c = np.where(j % 2 == 0, 1.0, -1.0) * np.exp(log_mag)
    c = c / np.linalg.norm(c)
    return ExcitonVector(c, mode)


def asymptotic_rate(n: int, ka: float, pol) -> float:
    """Leading small-``ka`` decay rate of the binomial state of an ``n``-atom chain.

    ``3/(4N**2-1) * [(N-1)!]**2/(2N-2)! * (ka)**(2N-2)``, times ``N`` for
    perpendicular polarization.
    """
    pol = Polarization.parse(pol)
    if not pol.is_scalar:
        raise UsageError("asymptotic_rate is defined for parallel/perpendicular chains")
    if not ka > 0:
        raise InputError("ka must be positive")
    n = int(n)
    log_rate = (
        math.log(3.0 / (4 * n * n - 1))
        + 2.0 * math.lgamma(n)
        - math.lgamma(2 * n - 1)
        + (2 * n - 2) * math.log(ka)
    )
    factor = 1.0 if pol is Polarization.PARALLEL else float(n)
    return factor * math.exp(log_rate)
