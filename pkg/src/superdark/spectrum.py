"""Scans of the slowest eigenstate decay rate against frequency shifts.

For a chain Hamiltonian ``H(Omega) = diag(omega) + U`` the quantity of
interest is ``gamma_tilde``: the smallest decay rate among all eigenstates of
``H``. The shifts are parameterized in the edge-referenced gauge with mirror
symmetry: edge atoms unshifted, ``omega_j = omega_{N-j+1}``, leaving
``(N-1)//2`` free parameters, all measured in units of the nearest-neighbor
coupling ``U`` (``1/(ka)**3`` perpendicular, ``-2/(ka)**3`` parallel).
For ``N = 3, 4`` the single parameter is ``Omega/U = (omega_2 - omega_1)/U``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .darkstate import ExcitonVector, asymptotic_rate, moment_dark_state
from .decay import DecayMatrix, decay_matrix
from .errors import BracketError, InputError, UsageError
from .geometry import AtomArray, ChainSpec, Polarization, make_chain
from .interactions import coupling_chain, nearest_neighbor_coupling
from .numerics import eigh_symmetric, fix_sign, minimize_multi, minimize_scalar
from .tuning import TunedHamiltonian, build_hamiltonian, tune_frequencies

THREADS_ENV = "SUPERDARK_THREADS"
DEGENERACY_RTOL = 1e-10
SCAN_POINTS = 2001
SCAN_HALFWIDTH = 0.2
TABLE_HALFWIDTH = 2.0

# Published reference values for 3- and 4-atom chains:
# (N, polarization, (ka)^2) -> (minimized rate, rate without shifts), units of Gamma.
TABLE1_REFERENCE = {
    (3, "par", 0.01): (7.62e-7, 0.0040),
    (3, "par", 0.10): (7.64e-5, 0.039),
    (3, "par", 1.00): (7.73e-3, 0.036),
    (3, "perp", 0.01): (1.62e-6, 0.0079),
    (3, "perp", 0.10): (1.64e-4, 0.056),
    (3, "perp", 1.00): (1.79e-2, 0.025),
    (4, "par", 0.01): (5.45e-10, 4.4e-4),
    (4, "par", 0.10): (5.48e-7, 4.1e-3),
    (4, "par", 1.00): (5.78e-4, 2.2e-2),
    (4, "perp", 0.01): (1.26e-9, 8.8e-4),
    (4, "perp", 0.10): (1.28e-6, 8.0e-3),
    (4, "perp", 1.00): (1.46e-3, 2.7e-2),
}


def default_workers() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(int(value), 1)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ScanPoint:
    omega_over_u: float | tuple | None
    gamma_tilde_over_gamma: float
    darkest_state: ExcitonVector
    eigenenergy: float


@dataclass
class MinimumReport:
    n_atoms: int
    polarization: str
    ka: float
    omega_min_over_u: float | tuple
    gamma_min_over_gamma: float
    asymptotic_prediction: float | tuple
    gamma_at_prediction: float
    mismatch: float
    asymptotic_rate: float | None
    fall_factor: float | None
    evaluations: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _rates(w: DecayMatrix, vectors: np.ndarray) -> np.ndarray:
    if w.amplitude is not None:
        amp = w.amplitude @ vectors
        return np.sum(amp * amp, axis=0)
    return np.maximum(np.einsum("ij,ik,kj->j", vectors, w.matrix, vectors), 0.0)


def _clusters(values: np.ndarray, tol: float) -> list[slice]:
    out, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            out.append(slice(start, i))
            start = i
    return out


def gamma_tilde(h: TunedHamiltonian, w: DecayMatrix) -> ScanPoint:
    """Slowest decay rate among the eigenstates of ``h``.

    Eigenvalues closer than ``1e-10 * ||H||`` are treated as one degenerate
    subspace, inside which the darkest combination is selected.
    """
    if h.dim != w.dim:
        raise InputError(f"Hamiltonian dim {h.dim} != decay matrix dim {w.dim}")
    eig = eigh_symmetric(h.matrix)
    tol = DEGENERACY_RTOL * max(np.max(np.abs(h.matrix)), np.finfo(float).tiny)
    best = None
    for sl in _clusters(eig.values, tol):
        vecs = eig.vectors[:, sl]
        if vecs.shape[1] == 1:
            rate = float(_rates(w, vecs)[0])
            vec = vecs[:, 0]
        else:
            rate, vec = _darkest_in_subspace(w, vecs)
        if best is None or rate < best[0]:
            best = (rate, vec, float(np.mean(eig.values[sl])))
    rate, vec, energy = best
    return ScanPoint(None, rate, ExcitonVector(vec / np.linalg.norm(vec), w.mode), energy)


def _darkest_in_subspace(w: DecayMatrix, basis: np.ndarray):
    if w.amplitude is not None:
        _, s, vt = np.linalg.svd(w.amplitude @ basis, full_matrices=False)
        y = vt[-1]
        rate = float(s[-1] ** 2)
    else:
        sub = eigh_symmetric(basis.T @ w.matrix @ basis)
        y = sub.vectors[:, 0]
        rate = max(float(sub.values[0]), 0.0)
    return rate, fix_sign(basis @ y)


def n_scan_parameters(n_atoms: int) -> int:
    return (n_atoms - 1) // 2


def chain_shifts(array: AtomArray, params_over_u) -> np.ndarray:
    """Edge-referenced, mirror-symmetric shifts (units ``d^2 k^3``) from parameters in units of ``U``."""
    n = array.n_atoms
    params = np.atleast_1d(np.asarray(params_over_u, dtype=float))
    if params.size != n_scan_parameters(n):
        raise InputError(f"N={n} takes {n_scan_parameters(n)} shift parameters, got {params.size}")
    unit = nearest_neighbor_coupling(array)
    shifts = np.zeros(n)
    for i, p in enumerate(params):
        shifts[i + 1] = shifts[n - 2 - i] = p * unit
    return shifts


def _require_chain(array: AtomArray):
    if not array.polarization.is_scalar:
        raise UsageError("shift scans need a parallel or perpendicular chain")


def _objective(array: AtomArray, w: DecayMatrix):
    u = coupling_chain(array)

    def point(params) -> ScanPoint:
        return gamma_tilde(build_hamiltonian(u, chain_shifts(array, params)), w)

    return point


def predicted_parameters(array: AtomArray) -> np.ndarray:
    """Shift parameters (units of ``U``) at which the moment dark state is an exact eigenstate."""
    tuned = tune_frequencies(coupling_chain(array), moment_dark_state(array))
    return tuned.middle_shifts_over_u(nearest_neighbor_coupling(array))


def scan_omega(
    array: AtomArray,
    grid: Iterable[float],
    w: DecayMatrix | None = None,
    workers: int | None = None,
) -> list[ScanPoint]:
    """``gamma_tilde`` at each ``Omega/U`` of ``grid`` (N = 3 or 4); results keep grid order."""
    _require_chain(array)
    if array.n_atoms not in (3, 4):
        raise UsageError("one-parameter scans cover N = 3, 4; use scan_multi for N >= 5")
    grid = [float(x) for x in grid]
    if not grid:
        raise InputError("empty scan grid")
    w = w or decay_matrix(array)
    point = _objective(array, w)

    def evaluate(x):
        p = point([x])
        return ScanPoint(x, p.gamma_tilde_over_gamma, p.darkest_state, p.eigenenergy)

    workers = default_workers() if workers is None else max(int(workers), 1)
    if workers == 1 or len(grid) < 64:
        return [evaluate(x) for x in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(evaluate, grid))


def chain_spacing(array: AtomArray) -> float | None:
    """Lattice constant if the array is equally spaced, else None."""
    s = np.sort(array.coordinates())
    gaps = np.diff(s)
    if np.allclose(gaps, gaps[0], rtol=1e-9, atol=0.0):
        return float(gaps[0])
    return None


def find_minimum(
    array: AtomArray,
    w: DecayMatrix | None = None,
    bracket: tuple[float, float] | None = None,
    *,
    halfwidth: float = SCAN_HALFWIDTH,
    grid_points: int = SCAN_POINTS,
    tol: float = 1e-8,
) -> MinimumReport:
    """Locate the sharp minimum of ``gamma_tilde(Omega/U)`` for N = 3, 4.

    The default bracket is the tuned prediction plus/minus ``halfwidth``.
    Raises ``BracketError`` if the minimum sits on the bracket edge.
    """
    _require_chain(array)
    if array.n_atoms not in (3, 4):
        raise UsageError("find_minimum covers N = 3, 4; use scan_multi for N >= 5")
    w = w or decay_matrix(array)
    point = _objective(array, w)
    prediction = float(predicted_parameters(array)[0])
    if bracket is None:
        bracket = (prediction - halfwidth, prediction + halfwidth)
    lo, hi = map(float, bracket)
    count = [0]

    def f(x):
        count[0] += 1
        return point([x]).gamma_tilde_over_gamma

    x, fx = minimize_scalar(f, (lo, hi), tol=tol, grid_points=grid_points)
    spacing = (hi - lo) / (max(grid_points, 3) - 1)
    if x - lo < spacing or hi - x < spacing:
        raise BracketError(f"minimum at Omega/U = {x:.6g} lies on the edge of ({lo:.6g}, {hi:.6g})")
    return _report(array, x, fx, prediction, f(prediction), count[0], mismatch=x - prediction)


def _report(array, x, fx, prediction, at_prediction, evaluations, mismatch) -> MinimumReport:
    spacing = chain_spacing(array)
    asym = fall = None
    if spacing is not None:
        asym = asymptotic_rate(array.n_atoms, spacing, array.polarization)
        fall = asym / fx if fx > 0 else math.inf
    return MinimumReport(
        n_atoms=array.n_atoms,
        polarization=array.polarization.value,
        ka=spacing if spacing is not None else array.nearest_neighbor_distance(),
        omega_min_over_u=x,
        gamma_min_over_gamma=fx,
        asymptotic_prediction=prediction,
        gamma_at_prediction=at_prediction,
        mismatch=mismatch,
        asymptotic_rate=asym,
        fall_factor=fall,
        evaluations=evaluations,
    )


def scan_multi(
    array: AtomArray,
    w: DecayMatrix | None = None,
    start: Sequence[float] | None = None,
    *,
    step: float = 1e-2,
    tol: float = 1e-13,
) -> MinimumReport:
    """Local minimization over the ``(N-1)//2`` mirror-symmetric shifts (N >= 5).

    Seeds at the tuned prediction unless ``start`` is given. The mismatch is
    the Euclidean distance between minimizer and prediction.
    """
    _require_chain(array)
    if array.n_atoms < 5:
        raise UsageError("scan_multi is for N >= 5; use find_minimum for N = 3, 4")
    w = w or decay_matrix(array)
    point = _objective(array, w)
    prediction = predicted_parameters(array)
    seed = prediction if start is None else np.asarray(start, dtype=float)
    count = [0]

    def f(p):
        count[0] += 1
        return point(p).gamma_tilde_over_gamma

    x, fx = minimize_multi(f, seed, step=step, tol=tol)
    at_prediction = f(prediction)
    return _report(
        array,
        tuple(float(v) for v in x),
        fx,
        tuple(float(v) for v in prediction),
        at_prediction,
        count[0],
        mismatch=float(np.linalg.norm(x - prediction)),
    )


def minimize_chain(array: AtomArray, w: DecayMatrix | None = None, **kwargs) -> MinimumReport:
    """``find_minimum`` for N = 3, 4 and ``scan_multi`` beyond."""
    if array.n_atoms in (3, 4):
        return find_minimum(array, w, **kwargs)
    return scan_multi(array, w, **kwargs)


def no_shift_rate(array: AtomArray, w: DecayMatrix | None = None) -> float:
    """``gamma_tilde`` with all transition frequencies equal."""
    w = w or decay_matrix(array)
    u = coupling_chain(array)
    return gamma_tilde(build_hamiltonian(u, np.zeros(array.n_atoms)), w).gamma_tilde_over_gamma


@dataclass(frozen=True)
class Table1Row:
    n: int
    polarization: str
    ka2: float
    gamma_min: float
    gamma_noshift: float
    omega_min_over_u: float
    reference_min: float | None = None
    reference_noshift: float | None = None

    def deviations(self) -> tuple[float | None, float | None]:
        """Relative deviations from the reference values, if known."""
        dev = lambda ours, ref: None if ref is None else abs(ours / ref - 1.0)
        return dev(self.gamma_min, self.reference_min), dev(self.gamma_noshift, self.reference_noshift)


def table1(
    ka2_values: Sequence[float] = (0.01, 0.10, 1.00),
    n_values: Sequence[int] = (3, 4),
    polarizations: Sequence = (Polarization.PARALLEL, Polarization.PERPENDICULAR),
    *,
    halfwidth: float = TABLE_HALFWIDTH,
    grid_points: int = SCAN_POINTS,
) -> list[Table1Row]:
    """Minimized and unshifted ``gamma_tilde`` for each (N, polarization, (ka)^2).

    The bracket is wider than in ``find_minimum`` because at ``(ka)^2 = 1``
    the minimum moves far from the small-``ka`` prediction.
    """
    rows = []
    for n in n_values:
        for pol in polarizations:
            pol = Polarization.parse(pol)
            for ka2 in ka2_values:
                array = make_chain(ChainSpec(int(n), math.sqrt(ka2)), pol)
                w = decay_matrix(array)
                if array.n_atoms in (3, 4):
                    rep = find_minimum(array, w, halfwidth=halfwidth, grid_points=grid_points)
                else:
                    rep = scan_multi(array, w)
                ref = TABLE1_REFERENCE.get((int(n), pol.value, round(float(ka2), 6)), (None, None))
                rows.append(
                    Table1Row(
                        int(n),
                        pol.value,
                        float(ka2),
                        rep.gamma_min_over_gamma,
                        no_shift_rate(array, w),
                        rep.omega_min_over_u,
                        *ref,
                    )
                )
    return rows
