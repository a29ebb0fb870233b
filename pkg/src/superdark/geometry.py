"""Atom arrays and unit conventions.

Lengths are dimensionless: a stored coordinate is ``k * R`` with
``k = 2*pi/lambda`` the resonant wavenumber. Interaction energies are then in
units of ``d**2 k**3`` and decay rates in units of the single-atom rate.
The wavenumber is held at its bare value; the tiny dependence of ``k`` on the
collective eigenenergy is neglected.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GeometryError, UsageError

COLLINEAR_TOL = 1e-12


class Polarization(enum.Enum):
    PARALLEL = "par"
    PERPENDICULAR = "perp"
    VECTOR3D = "vector"

    @property
    def is_scalar(self) -> bool:
        return self is not Polarization.VECTOR3D

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        aliases = {
            "par": cls.PARALLEL,
            "parallel": cls.PARALLEL,
            "z": cls.PARALLEL,
            "perp": cls.PERPENDICULAR,
            "perpendicular": cls.PERPENDICULAR,
            "x": cls.PERPENDICULAR,
            "vector": cls.VECTOR3D,
            "vector3d": cls.VECTOR3D,
            "3d": cls.VECTOR3D,
        }
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise UsageError(f"unknown polarization {value!r}") from None


def _separations(positions: np.ndarray) -> np.ndarray:
    return np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)


def _chain_axis(positions: np.ndarray) -> np.ndarray | None:
    """Unit vector along which all points lie, or None if they are not collinear."""
    rel = positions - positions[0]
    far = int(np.argmax(np.linalg.norm(rel, axis=1)))
    axis = rel[far] / np.linalg.norm(rel[far])
    transverse = rel - np.outer(rel @ axis, axis)
    scale = max(np.max(np.abs(rel)), 1.0)
    if np.max(np.linalg.norm(transverse, axis=1)) > COLLINEAR_TOL * scale:
        return None
    return axis


@dataclass(frozen=True)
class AtomArray:
    """Atom positions (units of 1/k) plus the excitation polarization mode.

    Scalar modes (parallel/perpendicular) require a collinear array; the
    vector mode accepts any arrangement.
    """

    positions: np.ndarray
    polarization: Polarization = Polarization.VECTOR3D
    axis: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[1] > 3:
            raise GeometryError(f"positions must be a list of 3-vectors, got shape {pos.shape}")
        if pos.shape[1] < 3:
            # 1-D input is read as z coordinates, 2-D input as (x, y)
            pad = np.zeros((pos.shape[0], 3))
            if pos.shape[1] == 1:
                pad[:, 2] = pos[:, 0]
            else:
                pad[:, : pos.shape[1]] = pos
            pos = pad
        if not np.all(np.isfinite(pos)):
            raise GeometryError("positions must be finite")
        if pos.shape[0] < 2:
            raise GeometryError(f"an array needs at least 2 atoms, got {pos.shape[0]}")
        sep = _separations(pos)
        np.fill_diagonal(sep, np.inf)
        if np.min(sep) <= 0.0:
            i, j = np.unravel_index(np.argmin(sep), sep.shape)
            raise GeometryError(f"atoms {i} and {j} coincide")
        pol = Polarization.parse(self.polarization)
        axis = _chain_axis(pos)
        if pol.is_scalar and axis is None:
            raise GeometryError(f"{pol.name.lower()} polarization requires a collinear array")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "polarization", pol)
        object.__setattr__(self, "axis", axis)

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    def __len__(self):
        return self.n_atoms

    @property
    def is_collinear(self) -> bool:
        return self.axis is not None

    def separations(self) -> np.ndarray:
        """Pairwise distances ``xi_jj' = k |R_j - R_j'|``."""
        return _separations(self.positions)

    def coordinates(self) -> np.ndarray:
        """Signed coordinates along the chain axis, measured from atom 0."""
        if self.axis is None:
            raise GeometryError("array is not collinear")
        return (self.positions - self.positions[0]) @ self.axis

    @property
    def extent(self) -> float:
        """Largest interatomic distance, ``k r``."""
        return float(np.max(self.separations()))

    def nearest_neighbor_distance(self) -> float:
        sep = self.separations()
        np.fill_diagonal(sep, np.inf)
        return float(np.min(sep))

    def with_polarization(self, pol) -> "AtomArray":
        return AtomArray(self.positions, Polarization.parse(pol))


@dataclass(frozen=True)
class ChainSpec:
    n_atoms: int
    ka: float

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 2:
            raise GeometryError(f"a chain needs N >= 2 atoms, got {self.n_atoms}")
        if not (np.isfinite(self.ka) and self.ka > 0):
            raise GeometryError(f"ka must be positive, got {self.ka}")


def make_chain(spec: ChainSpec, pol=Polarization.PERPENDICULAR) -> AtomArray:
    """Equally spaced chain along z: atom j sits at ``(0, 0, j*ka)``."""
    pol = Polarization.parse(pol)
    if not pol.is_scalar:
        raise UsageError("make_chain builds scalar-mode chains; use make_array for vector mode")
    z = np.arange(spec.n_atoms) * float(spec.ka)
    positions = np.column_stack([np.zeros_like(z), np.zeros_like(z), z])
    return AtomArray(positions, pol)


def make_array(positions: Sequence[Sequence[float]]) -> AtomArray:
    """Arbitrary arrangement in vector (x, y, z) polarization mode."""
    return AtomArray(np.asarray(positions, dtype=float), Polarization.VECTOR3D)
