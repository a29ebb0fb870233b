"""Engineering maximally subradiant single-excitation states in small atom arrays.

Typical use::

    from superdark import ChainSpec, make_chain, decay_matrix, binomial_dark_state, decay_rate

    chain = make_chain(ChainSpec(3, 0.1), "perp")
    decay_rate(decay_matrix(chain), binomial_dark_state(3))
"""

__version__ = "0.1.0"

from .darkstate import (
    ExcitonVector,
    asymptotic_rate,
    binomial_dark_state,
    darkest_eigenvector,
    moment_dark_state,
)
from .decay import (
    DecayMatrix,
    decay_matrix,
    decay_matrix_chain,
    decay_matrix_quadrature,
    decay_matrix_tensor,
    decay_rate,
)
from .errors import (
    AccuracyError,
    BracketError,
    ConvergenceError,
    DegenerateTargetError,
    EvaluationError,
    GeometryError,
    InputError,
    SingularSystemError,
    SuperdarkError,
    UsageError,
)
from .geometry import AtomArray, ChainSpec, Polarization, make_array, make_chain
from .interactions import (
    CouplingMatrix,
    coupling_chain,
    coupling_matrix,
    coupling_tensor,
    nearest_neighbor_coupling,
)
from .numerics import (
    EigenDecomposition,
    SphereQuadrature,
    eigh_symmetric,
    minimize_multi,
    minimize_scalar,
    solve_moment_constraints,
    sphere_quadrature,
)
from .spectrum import (
    MinimumReport,
    ScanPoint,
    find_minimum,
    gamma_tilde,
    no_shift_rate,
    scan_multi,
    scan_omega,
    table1,
)
from .tuning import TunedHamiltonian, TuningResult, build_hamiltonian, tune_frequencies, verify_eigenstate
