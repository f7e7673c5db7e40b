import math

import numpy as np
import pytest
from scipy.special import eval_hermite

from momentup.algebra import MonomialIndex
from momentup.covariance import G_K, Sp2Element
from momentup.errors import GridTooSmallError, InvalidArgumentError
from momentup.hierarchy import Provenance, build_omega_tilde, compute_moments
from momentup.states import DensityMatrix, StateSpec, density_from_spec, random_pure_state
from momentup.wigner import (
    LorentzClass,
    PhaseGrid,
    auto_extent,
    c_matrix,
    check_convergence,
    gaussian_grid,
    grid_from_csv,
    grid_to_csv,
    lorentz_average,
    omega1_wigner,
    overlap,
    pointwise_x_mu,
    quadrature_moments,
    state_overlap,
    wigner_at,
    wigner_grid,
)

from conftest import fock

N_TEST = 256


@pytest.fixture(scope="module")
def fock_grids():
    return {n: wigner_grid(fock(n), n_q=N_TEST, n_p=N_TEST) for n in range(4)}


def _hermite_function(n, x, hbar):
    norm = (1 / (math.pi * hbar)) ** 0.25 / math.sqrt(2.0**n * math.factorial(n))
    return norm * np.exp(-x * x / (2 * hbar)) * eval_hermite(n, x / math.sqrt(hbar))


def _wigner_by_fourier(coeffs, q, p, hbar):
    """Direct quadrature of W = (1/2 pi hbar) int dy <q - y/2|rho|q + y/2> e^{ipy/hbar}."""
    y = np.linspace(-30, 30, 6001)
    left = sum(c * _hermite_function(n, q - y / 2, hbar) for n, c in enumerate(coeffs))
    right = sum(c * _hermite_function(n, q + y / 2, hbar) for n, c in enumerate(coeffs))
    integrand = left * np.conj(right) * np.exp(1j * p * y / hbar)
    return np.trapezoid(integrand, y).real / (2 * math.pi * hbar)


def test_matches_fourier_integral():
    hbar = 0.7
    rng = np.random.default_rng(4)
    c = rng.normal(size=5) + 1j * rng.normal(size=5)
    c /= np.linalg.norm(c)
    rho = np.zeros((8, 8), dtype=complex)
    rho[:5, :5] = np.outer(c, c.conj())
    from momentup.algebra import FockOperator, HbarConfig

    dm = DensityMatrix(FockOperator(rho, 7), HbarConfig(hbar))
    for q, p in [(0.0, 0.0), (0.4, -0.9), (-1.3, 0.2), (1.7, 1.1), (-0.5, -2.0)]:
        assert float(wigner_at(dm, q, p)) == pytest.approx(_wigner_by_fourier(c, q, p, hbar), abs=1e-10)


def test_vacuum_and_fock1_origin():
    assert float(wigner_at(fock(0), 0.0, 0.0)) == pytest.approx(1 / math.pi, abs=1e-15)
    assert float(wigner_at(fock(1), 0.0, 0.0)) < 0
    assert float(wigner_at(fock(0, hbar=2.0), 0.0, 0.0)) == pytest.approx(1 / (2 * math.pi), abs=1e-15)


def test_normalization_and_reality(fock_grids):
    for g in fock_grids.values():
        assert g.values.dtype == float
        assert abs(g.normalization() - 1) < 1e-6
    g = wigner_grid(density_from_spec(StateSpec.coherent(0.5 - 0.8j, cutoff=40)), n_q=N_TEST, n_p=N_TEST)
    assert abs(g.normalization() - 1) < 1e-6


def test_moments_route_equivalence(fock_grids):
    for n, g in fock_grids.items():
        wm = quadrature_moments(g, 2)
        om = compute_moments(fock(n), 2)
        assert wm.provenance is Provenance.WIGNER_QUADRATURE
        for idx in om.values:
            assert wm[idx] == pytest.approx(om[idx], abs=1e-6)
            if idx.two_j % 2:
                assert abs(wm[idx]) < 1e-9
    assert quadrature_moments(fock_grids[0], 1)[MonomialIndex(2, 2)] == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("spec", [
    StateSpec.coherent(0.6 + 0.9j, cutoff=40, hbar=0.5),
    StateSpec.squeezed_vacuum(0.3, 0.8, cutoff=48),
    StateSpec.thermal(0.4, cutoff=64, hbar=1.5),
])
def test_moments_route_equivalence_zoo(spec):
    rho = density_from_spec(spec)
    wm = quadrature_moments(wigner_grid(rho, n_q=N_TEST, n_p=N_TEST), 2)
    om = compute_moments(rho, 2)
    for idx in om.values:
        assert wm[idx] == pytest.approx(om[idx], abs=1e-6)


def test_random_state_route_equivalence():
    rho = random_pure_state(5, 12, rng=8, hbar=1.2)
    g = wigner_grid(rho, n_q=N_TEST, n_p=N_TEST)
    assert omega1_wigner(g).omega_tilde == pytest.approx(build_omega_tilde(compute_moments(rho, 2), 1).omega_tilde, abs=1e-5)


def test_overlaps(fock_grids):
    g2 = fock_grids[2]
    ext = (g2.q_min, g2.q_max, g2.p_min, g2.p_max)
    g0 = wigner_grid(fock(0), ext, N_TEST, N_TEST)
    g1 = wigner_grid(fock(1), ext, N_TEST, N_TEST)
    g2 = wigner_grid(fock(2), ext, N_TEST, N_TEST)
    assert abs(overlap(g0, g1)) < 1e-6
    assert state_overlap(g0, g0) == pytest.approx(1.0, abs=1e-4)
    assert overlap(g0, g2) >= -1e-6
    assert state_overlap(g0, g0) == pytest.approx(2 * math.pi * overlap(g0, g0))
    with pytest.raises(InvalidArgumentError):
        overlap(g0, fock_grids[3])


def test_lorentz_average_fock(fock_grids):
    for n, g in fock_grids.items():
        lor = lorentz_average(g, 1.0)
        assert lor.x_mu == pytest.approx((n + 0.5, 0, 0), abs=1e-8)
        assert lor.invariant == pytest.approx((n + 0.5) ** 2, abs=1e-8)
        assert lor.classification is LorentzClass.ABOVE_BOUND


def test_pointwise_light_like(fock_grids):
    g = fock_grids[2]
    X = pointwise_x_mu(g, 0.1, -0.2)
    norm = X[0] ** 2 - X[1] ** 2 - X[2] ** 2
    assert np.max(np.abs(norm)) < 1e-12 * np.max(X[0] ** 2)
    assert np.all(X[0] >= 0)


def test_invalid_gaussian_below_bound():
    hbar = 1.0
    g = gaussian_grid((0, 0), np.diag([hbar / 8, hbar / 8]), (-3, 3, -3, 3), 256, 256, hbar)
    lor = lorentz_average(g)
    assert lor.invariant == pytest.approx(1 / 64, abs=1e-8)
    assert lor.classification is LorentzClass.BELOW_BOUND


def test_omega1_route_equivalence(fock_grids):
    for n, g in fock_grids.items():
        h = omega1_wigner(g)
        ref = build_omega_tilde(compute_moments(fock(n), 2), 1)
        assert h.index_order == ref.index_order
        assert np.max(np.abs(h.omega_tilde - ref.omega_tilde)) < 1e-5


def test_c_matrix_structure():
    rng = np.random.default_rng(0)
    q, p = rng.normal(size=20), rng.normal(size=20)
    hbar = 1.3
    C = c_matrix(q, p, hbar)
    assert np.allclose(C[0, 1], 0.5j * hbar)
    for k in range(20):
        ck = C[:, :, k]
        assert np.allclose(ck.real[2:, 2:], -hbar**2 / 4 * G_K)
        assert np.allclose(ck, ck.conj().T)


def test_rotation_covariance_of_fock_grid():
    rho = fock(2)
    s = Sp2Element.rotation(0.7).inverse().matrix
    q = np.linspace(-3, 3, 31)
    Q, P = np.meshgrid(q, q, indexing="ij")
    rq = s[0, 0] * Q + s[0, 1] * P
    rp = s[1, 0] * Q + s[1, 1] * P
    assert np.allclose(wigner_at(rho, rq, rp), wigner_at(rho, Q, P), atol=1e-13)


def test_grid_size_checks():
    rho = fock(1)
    with pytest.raises(GridTooSmallError):
        wigner_grid(rho, (-2, 2, -2, 2), 64, 64)
    ext = auto_extent(rho, 6.0)
    assert wigner_grid(rho, ext, 64, 64).n_q == 64
    narrow = PhaseGrid(-2, 2, -2, 2, 64, 64, wigner_at(rho, *np.meshgrid(np.linspace(-2, 2, 64), np.linspace(-2, 2, 64), indexing="ij")))
    with pytest.raises(GridTooSmallError):
        check_convergence(narrow)
    with pytest.raises(GridTooSmallError):
        quadrature_moments(narrow, 2)


def test_coarse_grid_fails_convergence():
    rho = fock(3)
    g = wigner_grid(rho, n_q=9, n_p=9)
    with pytest.raises(GridTooSmallError):
        check_convergence(g)


def test_csv_round_trip(tmp_path, fock_grids):
    g = wigner_grid(fock(1), n_q=16, n_p=12)
    path = tmp_path / "w.csv"
    grid_to_csv(g, path)
    first = path.read_text().splitlines()[0].split(",")
    assert len(first) == 6 and first[4:] == ["16", "12"]
    back = grid_from_csv(path)
    assert np.array_equal(back.values, g.values)
    assert (back.q_min, back.p_max) == (g.q_min, g.p_max)
    named = tmp_path / "named.csv"
    named.write_text("q_min,q_max,p_min,p_max,n_q,n_p\n" + path.read_text())
    assert np.array_equal(grid_from_csv(named).values, g.values)


def test_phase_grid_validation():
    with pytest.raises(InvalidArgumentError):
        PhaseGrid(0, 1, 0, 1, 3, 3, np.zeros((3, 4)))
    with pytest.raises(InvalidArgumentError):
        PhaseGrid(0, 1, 0, 1, 3, 3, np.zeros((3, 3), dtype=complex))
