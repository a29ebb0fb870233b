"""Non-retarded dipole-dipole coupling matrices.

Entries are in units of ``d**2 k**3``. Each off-diagonal entry is the
per-pair transfer matrix element between singly excited basis states; the
diagonal is zero because an atom does not couple to itself. Only the
near-field ``1/R**3`` interaction is included, which limits fidelity once
the spacing approaches a wavelength.

Vector-mode matrices use polarization-major ordering: index ``alpha*N + j``
addresses atom ``j`` excited with dipole along axis ``alpha`` (x, y, z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .geometry import AtomArray, Polarization

PAIR_PREFACTOR = {Polarization.PARALLEL: -2.0, Polarization.PERPENDICULAR: 1.0}


@dataclass(frozen=True)
class CouplingMatrix:
    matrix: np.ndarray
    mode: Polarization

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _inverse_cubes(array: AtomArray) -> np.ndarray:
    xi = array.separations()
    np.fill_diagonal(xi, np.inf)
    return 1.0 / xi**3


def coupling_chain(array: AtomArray) -> CouplingMatrix:
    """Scalar-mode coupling of a collinear array: ``-2/xi**3`` for dipoles
    along the chain and ``+1/xi**3`` for dipoles across it."""
    mode = array.polarization
    if not mode.is_scalar:
        raise UsageError("coupling_chain needs parallel or perpendicular polarization")
    u = PAIR_PREFACTOR[mode] * _inverse_cubes(array)
    return CouplingMatrix(u, mode)


def coupling_tensor(array: AtomArray) -> CouplingMatrix:
    """Full 3N x 3N coupling, blocks ``(delta_ab - 3 n_a n_b) / xi**3``."""
    n = array.n_atoms
    rel = array.positions[:, None, :] - array.positions[None, :, :]
    xi = np.linalg.norm(rel, axis=-1)
    np.fill_diagonal(xi, 1.0)
    unit = rel / xi[..., None]
    inv3 = 1.0 / xi**3
    np.fill_diagonal(inv3, 0.0)
    u = np.empty((3 * n, 3 * n))
    for a in range(3):
        for b in range(3):
            block = (float(a == b) - 3.0 * unit[..., a] * unit[..., b]) * inv3
            u[a * n : (a + 1) * n, b * n : (b + 1) * n] = block
    return CouplingMatrix(u, Polarization.VECTOR3D)


def coupling_matrix(array: AtomArray) -> CouplingMatrix:
    """Dispatch on the polarization mode of ``array``."""
    if array.polarization.is_scalar:
        return coupling_chain(array)
    return coupling_tensor(array)


def nearest_neighbor_coupling(array: AtomArray) -> float:
    """Coupling between the closest pair, the energy unit ``U`` of ``Omega/U``.

    Equals ``1/(ka)**3`` for perpendicular and ``-2/(ka)**3`` for parallel
    polarization.
    """
    mode = array.polarization
    if not mode.is_scalar:
        raise UsageError("nearest-neighbor coupling is defined for scalar modes only")
    return PAIR_PREFACTOR[mode] / array.nearest_neighbor_distance() ** 3
