import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from superdark import (
    AtomArray,
    ChainSpec,
    UsageError,
    coupling_chain,
    coupling_tensor,
    make_array,
    make_chain,
    nearest_neighbor_coupling,
)


def block(m, n, a, b):
    return m[a * n : (a + 1) * n, b * n : (b + 1) * n]


def test_pair_perpendicular():
    u = coupling_chain(make_chain(ChainSpec(2, 1.0), "perp")).matrix
    assert u[0, 1] == 1.0 and u[1, 0] == 1.0
    assert u[0, 0] == 0.0


def test_pair_parallel():
    u = coupling_chain(make_chain(ChainSpec(2, 1.0), "par")).matrix
    assert u[0, 1] == -2.0


def test_three_atom_perpendicular():
    u = coupling_chain(make_chain(ChainSpec(3, 0.5), "perp")).matrix
    assert u[0, 2] == pytest.approx(1.0, rel=1e-15)
    assert u[0, 1] == pytest.approx(8.0, rel=1e-15)
    np.testing.assert_array_equal(u, u.T)
    np.testing.assert_array_equal(np.diag(u), 0.0)


def test_chain_rejects_vector_mode():
    with pytest.raises(UsageError):
        coupling_chain(make_array([[0, 0, 0], [0, 0, 1]]))


def test_tensor_pair_along_z():
    u = coupling_tensor(make_array([[0, 0, 0], [0, 0, 1]])).matrix
    n = 2
    assert block(u, n, 2, 2)[0, 1] == pytest.approx(-2.0)
    assert block(u, n, 0, 0)[0, 1] == pytest.approx(1.0)
    assert block(u, n, 1, 1)[0, 1] == pytest.approx(1.0)
    for a in range(3):
        for b in range(3):
            if a != b:
                np.testing.assert_array_equal(block(u, n, a, b), 0.0)


def test_tensor_pair_along_x():
    u = coupling_tensor(make_array([[0, 0, 0], [1, 0, 0]])).matrix
    assert block(u, 2, 0, 0)[0, 1] == pytest.approx(-2.0)
    assert block(u, 2, 1, 1)[0, 1] == pytest.approx(1.0)
    assert block(u, 2, 2, 2)[0, 1] == pytest.approx(1.0)


def test_tensor_blocks_traceless():
    rng = np.random.default_rng(4)
    arr = make_array(rng.uniform(-1, 1, size=(5, 3)))
    u = coupling_tensor(arr).matrix
    n = arr.n_atoms
    trace = sum(block(u, n, a, a) for a in range(3))
    assert np.max(np.abs(trace)) <= 1e-12 * np.max(np.abs(u))


@pytest.mark.parametrize("n, ka", [(2, 0.3), (4, 0.1), (6, 1.7)])
def test_collinear_tensor_splits_into_scalar_modes(n, ka):
    spec = ChainSpec(n, ka)
    par = coupling_chain(make_chain(spec, "par")).matrix
    perp = coupling_chain(make_chain(spec, "perp")).matrix
    u = coupling_tensor(make_chain(spec, "par").with_polarization("vector")).matrix
    scale = np.max(np.abs(par))
    assert np.max(np.abs(block(u, n, 2, 2) - par)) <= 1e-12 * scale
    assert np.max(np.abs(block(u, n, 0, 0) - perp)) <= 1e-12 * scale
    assert np.max(np.abs(block(u, n, 1, 1) - perp)) <= 1e-12 * scale
    for a in range(3):
        for b in range(3):
            if a != b:
                assert np.max(np.abs(block(u, n, a, b))) <= 1e-12 * scale


@pytest.mark.parametrize("seed", range(4))
def test_rotation_covariance(seed):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-1, 1, size=(4, 3))
    rot = Rotation.random(random_state=seed).as_matrix()
    u = coupling_tensor(make_array(pos)).matrix
    u_rot = coupling_tensor(make_array(pos @ rot.T)).matrix
    # dipole indices rotate with the positions: U' = (R (x) 1) U (R (x) 1)^T
    big = np.kron(rot, np.eye(4))
    np.testing.assert_allclose(u_rot, big @ u @ big.T, atol=1e-12 * np.max(np.abs(u)))


def test_nearest_neighbor_unit():
    assert nearest_neighbor_coupling(make_chain(ChainSpec(3, 0.1), "perp")) == pytest.approx(1e3)
    assert nearest_neighbor_coupling(make_chain(ChainSpec(3, 0.1), "par")) == pytest.approx(-2e3)


def test_uneven_chain_unit_uses_closest_pair():
    arr = AtomArray([0.0, 0.5, 0.7, 1.5], "perp")
    assert nearest_neighbor_coupling(arr) == pytest.approx(1 / 0.2**3)
