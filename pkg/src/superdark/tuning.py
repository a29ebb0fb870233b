"""Per-atom frequency shifts that make a chosen vector a Hamiltonian eigenstate.

The single-excitation Hamiltonian is ``H = diag(omega) + U``. For a target
``C`` with no vanishing component, ``H C = E C`` fixes each shift as
``omega_j = E - (U C)_j / C_j``; the additive freedom is removed by the
zero-sum gauge ``sum_j omega_j = 0``, which gives ``E = mean_j (U C)_j / C_j``.

Scans use the edge-referenced gauge instead (edge atoms unshifted). The two
differ by a constant, which moves all eigenvalues rigidly and leaves every
eigenvector, and hence every decay rate, unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .darkstate import ExcitonVector
from .errors import DegenerateTargetError, InputError, UsageError
from .geometry import Polarization
from .interactions import CouplingMatrix

MIN_AMPLITUDE = 1e-9


@dataclass(frozen=True)
class TuningResult:
    shifts: np.ndarray  # zero-sum gauge, units d^2 k^3
    eigenenergy: float
    target: ExcitonVector

    def edge_referenced(self) -> np.ndarray:
        """Shifts with the first atom as zero reference."""
        return self.shifts - self.shifts[0]

    def eigenenergy_edge_referenced(self) -> float:
        return self.eigenenergy - float(self.shifts[0])

    def middle_shifts_over_u(self, unit: float) -> np.ndarray:
        """Independent edge-referenced shifts ``omega_2 .. omega_ceil(N/2)`` in units of ``unit``.

        For a mirror-symmetric chain these are the scan coordinates; for
        ``N = 3, 4`` the single entry is ``Omega/U``.
        """
        n = len(self.shifts)
        return self.edge_referenced()[1 : (n + 1) // 2] / unit

    def omega_over_u(self, unit: float) -> float:
        """``(omega_2 - omega_1) / U``."""
        return float((self.shifts[1] - self.shifts[0]) / unit)


@dataclass(frozen=True)
class TunedHamiltonian:
    matrix: np.ndarray
    mode: Polarization
    coupling: CouplingMatrix | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def tune_frequencies(u: CouplingMatrix, c: ExcitonVector) -> TuningResult:
    """Zero-sum shifts and eigenenergy making ``c`` an eigenvector of ``diag(omega) + U``."""
    if not u.mode.is_scalar:
        raise UsageError(
            "frequency tuning is scalar-mode only; vector mode needs three shifts per atom"
        )
    coef = np.asarray(c.coefficients, dtype=float)
    if coef.shape != (u.dim,):
        raise InputError(f"target of length {coef.size} does not match coupling of dim {u.dim}")
    small = np.flatnonzero(np.abs(coef) <= MIN_AMPLITUDE)
    if small.size:
        raise DegenerateTargetError(
            f"target amplitude vanishes at atom(s) {small.tolist()}; tuning is undefined"
        )
    ratio = (u.matrix @ coef) / coef
    energy = float(np.mean(ratio))
    shifts = energy - ratio
    shifts = shifts - shifts.mean()
    return TuningResult(shifts, energy, c)


def build_hamiltonian(u: CouplingMatrix, shifts) -> TunedHamiltonian:
    """``H = diag(shifts) + U`` (any gauge)."""
    shifts = np.asarray(shifts, dtype=float)
    if shifts.shape != (u.dim,):
        raise InputError(f"{shifts.size} shifts for a coupling matrix of dim {u.dim}")
    return TunedHamiltonian(np.diag(shifts) + u.matrix, u.mode, u)


def verify_eigenstate(h: TunedHamiltonian, c) -> float:
    """Eigen-residual ``max |H C - (C^T H C) C|``."""
    vec = np.asarray(getattr(c, "coefficients", c), dtype=float)
    if vec.shape != (h.dim,):
        raise InputError("vector and Hamiltonian dimensions differ")
    hc = h.matrix @ vec
    return float(np.max(np.abs(hc - (vec @ hc) * vec)))
