"""Collective decay matrices ``W`` with ``Gamma_N / Gamma = C^T W C``.

``W`` is normalized so that its diagonal is one (a lone atom decays at the
single-atom rate). Three routes are provided:

* closed forms for collinear scalar modes and for the general 3N x 3N tensor,
* direct numerical integration over emission directions (the oracle).

Every ``DecayMatrix`` also carries a real *amplitude factor* ``B`` with
``W = B^T B``: the rows are quadrature-weighted emission amplitudes. Decay
rates are evaluated as ``|B C|**2``. For strongly subradiant states ``C^T W C``
is a difference of O(1) numbers that cancels to 1e-15 or below, whereas
``B C`` keeps full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, InputError
from .geometry import AtomArray, Polarization
from .numerics import SphereQuadrature, sphere_quadrature

SERIES_BELOW = 0.5
SERIES_TERMS = 10
LINE_NODES = 64
PREFACTOR = 3.0 / (8.0 * math.pi)

_SINC_COEF = np.array([(-1) ** n / math.factorial(2 * n + 1) for n in range(SERIES_TERMS)])
_G_COEF = np.array(
    [(-1) ** n * (2 * n + 2) / math.factorial(2 * n + 3) for n in range(SERIES_TERMS)]
)


def _even_series(coef, xi):
    x2 = xi * xi
    out = np.zeros_like(xi)
    for c in coef[::-1]:
        out = out * x2 + c
    return out


def sinc(xi):
    """``sin(xi)/xi`` with the removable singularity filled in."""
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < SERIES_BELOW
    safe = np.where(small, 1.0, xi)
    return np.where(small, _even_series(_SINC_COEF, xi), np.sin(safe) / safe)


def g_function(xi):
    """``(sin(xi) - xi cos(xi)) / xi**3``; tends to 1/3 at the origin."""
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < SERIES_BELOW
    safe = np.where(small, 1.0, xi)
    direct = (np.sin(safe) - safe * np.cos(safe)) / safe**3
    return np.where(small, _even_series(_G_COEF, xi), direct)


def w_parallel(xi):
    """Decay-matrix entry for two dipoles along their separation."""
    return 3.0 * g_function(xi)


def w_perpendicular(xi):
    """Decay-matrix entry for two parallel dipoles normal to their separation."""
    return 1.5 * (sinc(xi) - g_function(xi))


@dataclass(frozen=True)
class DecayMatrix:
    matrix: np.ndarray
    mode: Polarization
    amplitude: np.ndarray | None = None  # B with W = B^T B

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def _centered(array: AtomArray) -> np.ndarray:
    return array.positions - array.positions.mean(axis=0)


@lru_cache(maxsize=8)
def _line_rule(n_nodes: int):
    return np.polynomial.legendre.leggauss(n_nodes)


def chain_amplitude(array: AtomArray, n_nodes: int = LINE_NODES) -> np.ndarray:
    """Amplitude factor for a collinear scalar-mode array.

    The azimuthal integral is done analytically, leaving
    ``W = (3/4) int_{-1}^{1} f(u) exp(i xi u) du`` with ``f = 1 - u**2``
    (parallel) or ``(1 + u**2)/2`` (perpendicular), evaluated by Gauss-Legendre.
    """
    s = array.coordinates()
    s = s - s.mean()
    u, w = _line_rule(n_nodes)
    if array.polarization is Polarization.PARALLEL:
        f = 1.0 - u * u
    else:
        f = 0.5 * (1.0 + u * u)
    scale = np.sqrt(0.75 * w * f)[:, None]
    phase = np.outer(u, s)
    return np.vstack([scale * np.cos(phase), scale * np.sin(phase)])


def decay_matrix_chain(array: AtomArray) -> DecayMatrix:
    """Closed-form scalar-mode decay matrix of a collinear array."""
    mode = array.polarization
    if not mode.is_scalar:
        raise InputError("decay_matrix_chain needs parallel or perpendicular polarization")
    xi = array.separations()
    w = w_parallel(xi) if mode is Polarization.PARALLEL else w_perpendicular(xi)
    np.fill_diagonal(w, 1.0)
    return DecayMatrix(w, mode, chain_amplitude(array))


def decay_matrix_tensor(array: AtomArray, quad: SphereQuadrature | None = None) -> DecayMatrix:
    """Closed-form 3N x 3N decay matrix for an arbitrary array.

    Block ``(alpha, beta)`` of the pair ``(j, j')`` is
    ``(3/2) [delta (sinc - g) - n_a n_b (sinc - 3 g)]`` with ``n`` the unit
    separation vector; this reduces to the parallel/perpendicular chain
    entries when ``n`` is along or across the dipoles.
    """
    n = array.n_atoms
    rel = array.positions[:, None, :] - array.positions[None, :, :]
    xi = np.linalg.norm(rel, axis=-1)
    safe = np.where(xi > 0.0, xi, 1.0)
    unit = rel / safe[..., None]
    s, g = sinc(xi), g_function(xi)
    w = np.empty((3 * n, 3 * n))
    for a in range(3):
        for b in range(3):
            block = 1.5 * (float(a == b) * (s - g) - unit[..., a] * unit[..., b] * (s - 3.0 * g))
            np.fill_diagonal(block, float(a == b))
            w[a * n : (a + 1) * n, b * n : (b + 1) * n] = block
    amp = _sphere_amplitude(_centered(array), np.eye(3), quad or _default_quadrature())
    return DecayMatrix(w, Polarization.VECTOR3D, amp)


@lru_cache(maxsize=1)
def _default_quadrature() -> SphereQuadrature:
    return sphere_quadrature(64, 64)


def _photon_polarizations(quad: SphereQuadrature) -> np.ndarray:
    """Two transverse unit vectors per direction, shape (2, n_nodes, 3)."""
    th, ph = quad.theta, quad.phi
    e1 = np.column_stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)])
    e2 = np.column_stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)])
    return np.stack([e1, e2])


def _sphere_amplitude(positions: np.ndarray, dipoles: np.ndarray, quad: SphereQuadrature):
    """Amplitude rows for dipole orientations ``dipoles`` (shape (m, 3)).

    Columns are ordered orientation-major, ``m_index * N + j``.
    """
    khat = quad.directions()
    phase = khat @ positions.T  # (nodes, N)
    pol = _photon_polarizations(quad) @ dipoles.T  # (2, nodes, m)
    scale = np.sqrt(PREFACTOR * quad.weights)
    rows = []
    for trig in (np.cos(phase), np.sin(phase)):
        for nu in range(2):
            block = scale[:, None, None] * pol[nu][:, :, None] * trig[:, None, :]
            rows.append(block.reshape(len(scale), -1))
    return np.vstack(rows)


def _perpendicular_to(axis: np.ndarray) -> np.ndarray:
    trial = np.eye(3)[int(np.argmin(np.abs(axis)))]
    v = trial - (trial @ axis) * axis
    return v / np.linalg.norm(v)


def decay_matrix_quadrature(
    array, quad: SphereQuadrature | None = None, polarization=None
) -> DecayMatrix:
    """Decay matrix by direct integration over photon directions and
    polarizations; the independent check on the closed forms.

    ``array`` may be an ``AtomArray`` or a bare list of positions (which
    allows a single atom). Raises ``AccuracyError`` when the rule is too
    coarse to reproduce the unit diagonal to 1e-8.
    """
    quad = quad or _default_quadrature()
    if isinstance(array, AtomArray):
        positions = array.positions
        mode = array.polarization if polarization is None else Polarization.parse(polarization)
        axis = array.axis
    else:
        positions = np.atleast_2d(np.asarray(array, dtype=float))
        if positions.shape[1] == 1:
            positions = np.column_stack([np.zeros((len(positions), 2)), positions])
        mode = Polarization.VECTOR3D if polarization is None else Polarization.parse(polarization)
        axis = np.array([0.0, 0.0, 1.0]) if len(positions) == 1 else None
        if mode.is_scalar and axis is None:
            axis = AtomArray(positions, mode).axis
    if mode is Polarization.VECTOR3D:
        dipoles = np.eye(3)
    elif mode is Polarization.PARALLEL:
        dipoles = axis[None, :]
    else:
        dipoles = _perpendicular_to(axis)[None, :]
    positions = positions - positions.mean(axis=0)
    amp = _sphere_amplitude(positions, dipoles, quad)
    w = amp.T @ amp
    deviation = float(np.max(np.abs(np.diag(w) - 1.0)))
    if deviation > 1e-8:
        raise AccuracyError(f"quadrature diagonal off by {deviation:.2e}; use more nodes")
    return DecayMatrix(0.5 * (w + w.T), mode, amp)


def decay_matrix(array: AtomArray) -> DecayMatrix:
    """Closed-form decay matrix matching the polarization mode of ``array``."""
    if array.polarization.is_scalar:
        return decay_matrix_chain(array)
    return decay_matrix_tensor(array)


def decay_rate(w: DecayMatrix, c) -> float:
    """``Gamma_N / Gamma`` of a unit exciton vector ``c``."""
    vec = np.asarray(getattr(c, "coefficients", c), dtype=float)
    if vec.shape != (w.dim,):
        raise InputError(f"vector of length {vec.size} does not match decay matrix of dim {w.dim}")
    if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
        raise InputError("exciton vector must be normalized")
    if w.amplitude is not None:
        amp = w.amplitude @ vec
        return float(amp @ amp)
    rate = float(vec @ w.matrix @ vec)
    if rate < -1e-10:
        raise InputError(f"decay matrix is not positive semidefinite (C^T W C = {rate:.3e})")
    return max(rate, 0.0)
