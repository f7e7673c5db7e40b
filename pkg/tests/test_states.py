import math

import numpy as np
import pytest
from scipy.linalg import expm

from momentup.algebra import annihilation
from momentup.errors import CutoffTooSmallError, InvalidArgumentError, InvalidStateError
from momentup.states import (
    StateSpec,
    density_from_spec,
    random_mixed_state,
    thermal_populations,
)

BIG = 120


def _vacuum(n):
    v = np.zeros(n, dtype=complex)
    v[0] = 1
    return v


def _project(psi, n):
    return np.outer(psi[:n], psi[:n].conj())


@pytest.mark.parametrize("alpha", [0.0, 0.8, -0.3 + 1.1j, 2.0j])
def test_coherent_matches_displacement_series(alpha):
    a = annihilation(BIG)
    D = expm(alpha * a.T - np.conj(alpha) * a)
    psi = D @ _vacuum(BIG)
    rho = density_from_spec(StateSpec.coherent(alpha, cutoff=48)).matrix
    assert np.allclose(rho, _project(psi, 48), atol=1e-12)


@pytest.mark.parametrize("r,phi", [(0.2, 0.0), (0.6, 1.3), (0.9, -2.0)])
def test_squeezed_matches_exponential(r, phi):
    a = annihilation(BIG)
    zeta = r * np.exp(1j * phi)
    S = expm(0.5 * (zeta * a.T @ a.T - np.conj(zeta) * a @ a))
    psi = S @ _vacuum(BIG)
    rho = density_from_spec(StateSpec.squeezed_vacuum(r, phi, cutoff=80)).matrix
    assert np.allclose(rho, _project(psi, 80), atol=1e-10)


def test_squeezed_stretches_position_at_zero_angle():
    from momentup.algebra import make_quadratures

    r = 0.5
    rho = density_from_spec(StateSpec.squeezed_vacuum(r, cutoff=80, hbar=2.0)).matrix
    Q, _ = make_quadratures(80, 2.0)
    var_q = np.trace(rho @ Q.entries @ Q.entries).real
    assert var_q == pytest.approx(2.0 * math.exp(2 * r) / 2, rel=1e-10)


def test_thermal_geometric_series():
    nbar = 1.0
    rho = density_from_spec(StateSpec.thermal(nbar, cutoff=40)).matrix
    k = np.arange(40)
    expected = nbar**k / (nbar + 1) ** (k + 1)
    assert abs(np.trace(rho).real - 1) < 1e-10
    assert np.allclose(np.diag(rho).real, expected / expected.sum(), atol=1e-15)
    assert np.count_nonzero(rho - np.diag(np.diag(rho))) == 0
    p = thermal_populations(0.0, 5)
    assert list(p) == [1, 0, 0, 0, 0]


def test_fock_and_vacuum_examples():
    rho = density_from_spec(StateSpec.fock(2, cutoff=8)).matrix
    expected = np.zeros((8, 8))
    expected[2, 2] = 1
    assert np.array_equal(rho, expected)
    vac = density_from_spec(StateSpec.coherent(0, cutoff=8)).matrix
    assert np.array_equal(vac, np.diag([1.0] + [0.0] * 7))


def test_cutoff_too_small():
    with pytest.raises(CutoffTooSmallError):
        density_from_spec(StateSpec.coherent(3.0, cutoff=10))
    with pytest.raises(CutoffTooSmallError):
        density_from_spec(StateSpec.fock(8, cutoff=8))
    with pytest.raises(CutoffTooSmallError):
        density_from_spec(StateSpec.thermal(2.0, cutoff=30))


def test_spec_validation():
    with pytest.raises(InvalidArgumentError):
        StateSpec.thermal(-0.5)
    with pytest.raises(InvalidArgumentError):
        StateSpec.fock(-1)
    with pytest.raises(InvalidArgumentError):
        StateSpec("cat")
    with pytest.raises(InvalidArgumentError):
        StateSpec.explicit(np.eye(5) / 5, cutoff=4)


def test_explicit_states():
    m = np.diag([0.5, 0.3, 0.2 + 5e-9])
    rho = density_from_spec(StateSpec.explicit(m, cutoff=6))
    assert rho.cutoff == 6
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidStateError):
        density_from_spec(StateSpec.explicit(np.diag([0.5, 0.6]), cutoff=4))
    with pytest.raises(InvalidStateError):
        density_from_spec(StateSpec.explicit(np.array([[0.5, 0.9], [0.9, 0.5]]), cutoff=4))
    with pytest.raises(InvalidStateError):
        density_from_spec(StateSpec.explicit(np.array([[0.5, 0.1], [0.2, 0.5]]), cutoff=4))


def test_random_states_are_valid():
    rng = np.random.default_rng(3)
    for rank in (1, 2, None):
        rho = random_mixed_state(5, 12, rank=rank, rng=rng)
        assert rho.support() <= 5
        assert rho.tail_mass(5) == 0.0
        ev = np.linalg.eigvalsh(rho.matrix)
        assert ev[0] > -1e-12
        assert np.count_nonzero(ev > 1e-12) == (rank or 5)


def test_labels():
    assert StateSpec.fock(3).label() == "fock(3)"
    assert StateSpec.squeezed_vacuum(0.5).label().startswith("squeezed_vacuum")
