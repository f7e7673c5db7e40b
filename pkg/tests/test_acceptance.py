"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a ``PASS``/``FAIL`` line; conftest prints them in the
terminal summary, and running this file directly prints them too.
"""

import numpy as np
import pytest

from momentup.algebra import MonomialIndex, all_indices, tau_product_expansion, weyl_monomial
from momentup.covariance import (
    G_K,
    M,
    M_INV,
    SymplecticForm,
    k_rep,
    lambda_of,
    random_sp2,
    random_symplectic,
    symplectic_trace_invariants,
    transform_moments,
    williamson_symplectic_eigenvalues,
)
from momentup.fourth_order import build_blocks, fourth_order_analysis, singular_a_analysis
from momentup.hierarchy import (
    Verdict,
    build_omega_tilde,
    check_psd,
    compute_moments,
    schur_increment,
    variance_matrix,
)
from momentup.states import random_mixed_state, random_pure_state
from momentup.wigner import omega1_wigner, quadrature_moments, wigner_grid

from conftest import ACCEPTANCE_LINES, ZOO, fock

SIGMA_2 = np.array([[0, -1j], [1j, 0]])
P_B = np.array([[1, 0, -1], [0, 1, 0], [-1, 0, 1]])
Q_B = np.array([[0, 1, 0], [-1, 0, 1], [0, -1, 0]])


def _record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_fock_moments():
    worst = 0.0
    for hbar in (1.0, 0.5):
        for n in range(6):
            mom = compute_moments(fock(n, hbar=hbar), 2)
            x = hbar * (n + 0.5)
            t2 = hbar**2 / 2 * (n * n + n + 0.5)
            got = [mom[MonomialIndex(2, m)] for m in (2, 0, -2)]
            got += [mom[MonomialIndex(4, m)] for m in (4, 2, 0, -2, -4)]
            want = [x, 0, x, 3 * t2, 0, t2, 0, 3 * t2]
            worst = max(worst, float(np.max(np.abs(np.subtract(got, want)))))
    _record(1, "Fock moments, n = 0..5, hbar in {1, 0.5}", worst <= 1e-10, f"max deviation {worst:.2e}")


def test_criterion_02_fock_blocks():
    worst = 0.0
    for n in range(6):
        b = build_blocks(compute_moments(fock(n), 2))
        a = (n + 0.5) * np.eye(2) - 0.5 * SIGMA_2
        bb = 0.5 * (n * n + n + 1) * P_B + 1j * (n + 0.5) * Q_B
        worst = max(
            worst,
            float(np.max(np.abs(b.a_block - a))),
            float(np.max(np.abs(b.b_block - bb))),
            float(np.max(np.abs(b.c_block))),
        )
    _record(2, "Fock blocks A, B, C, n = 0..5", worst <= 1e-10, f"max deviation {worst:.2e}")


def test_criterion_03_fourth_order_eigenvalues():
    worst = 0.0
    saturated = True
    double_zero = True
    for n in range(6):
        mom = compute_moments(fock(n), 2)
        if n == 0:
            # A is singular for the vacuum; the singular Schur branch supplies the pair
            _, _, verdict = singular_a_analysis(mom)
        else:
            _, _, verdict = fourth_order_analysis(mom)
        want = sorted([0.0, 0.5 * (n + 1) * (n + 2), 0.5 * n * (n - 1)])
        worst = max(worst, float(np.max(np.abs(np.subtract(verdict.eigenvalues, want)))))
        zeros = sum(abs(e) <= 1e-9 for e in verdict.eigenvalues)
        saturated &= zeros >= 1 and verdict.passes
        if n in (0, 1):
            double_zero &= zeros == 2
    ok = worst <= 1e-9 and saturated and double_zero
    _record(3, "fourth-order eigenvalues of Fock states", ok,
            f"max deviation {worst:.2e}, saturated {saturated}, double zero at n=0,1 {double_zero}")


def test_criterion_04_product_rule():
    worst = 0.0
    N = 16
    for hbar in (1.0, 2.0):
        for a in all_indices(4):
            for b in all_indices(4):
                dense = weyl_monomial(a, N, hbar).entries @ weyl_monomial(b, N, hbar).entries
                rebuilt = tau_product_expansion(a, b, hbar).to_matrix(N, hbar).entries
                k = N - (a.two_j + b.two_j)
                scale = max(1.0, float(np.max(np.abs(dense[:k, :k]))))
                worst = max(worst, float(np.max(np.abs(dense[:k, :k] - rebuilt[:k, :k]))) / scale)
    _record(4, "product rule vs dense products, j, j' <= 2, hbar in {1, 2}", worst <= 1e-10,
            f"max relative deviation {worst:.2e}")


def test_criterion_05_representation_identities():
    rng = np.random.default_rng(505)
    lam_dev = metric_dev = 0.0
    for _ in range(200):
        s = random_sp2(rng)
        K = k_rep(s, 1)
        lam_dev = max(lam_dev, float(np.max(np.abs(K - M_INV @ lambda_of(s).lam @ M))))
        metric_dev = max(metric_dev, float(np.max(np.abs(K @ G_K @ K.T - G_K))))
    hom_dev = 0.0
    for _ in range(50):
        s1, s2 = random_sp2(rng), random_sp2(rng)
        for two_j in range(1, 5):
            lhs = k_rep(s1 @ s2, two_j / 2)
            rhs = k_rep(s1, two_j / 2) @ k_rep(s2, two_j / 2)
            hom_dev = max(hom_dev, float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(lhs)))))
    ok = lam_dev <= 1e-9 and metric_dev <= 1e-9 and hom_dev <= 1e-9
    _record(5, "K(1) = M^-1 Lambda M, g_K preserved, homomorphism for j <= 2", ok,
            f"Lambda {lam_dev:.2e}, metric {metric_dev:.2e}, homomorphism (relative) {hom_dev:.2e}")


def test_criterion_06_hierarchy_closure():
    assert len(ZOO) >= 30
    worst = np.inf
    indefinite = []
    for label, rho in ZOO:
        mom = compute_moments(rho, 2)
        for J in (0.5, 1):
            rep = check_psd(build_omega_tilde(mom, J).omega_tilde)
            worst = min(worst, rep.min_eigenvalue)
            if rep.verdict is Verdict.INDEFINITE:
                indefinite.append(f"{label}@J={J}")
    ok = not indefinite and worst >= -1e-9
    _record(6, f"hierarchy closure over {len(ZOO)} states, J in {{1/2, 1}}", ok,
            f"min eigenvalue {worst:.2e}, indefinite {indefinite or 'none'}")


def test_criterion_07_schur_vs_direct():
    rng = np.random.default_rng(707)
    mismatches = 0
    checked = 0
    while checked < 20:
        mom = compute_moments(random_mixed_state(5, 18, rank=int(rng.integers(1, 4)), rng=rng), 2)
        small, big = build_omega_tilde(mom, 0.5), build_omega_tilde(mom, 1)
        rep = schur_increment(small, big)
        if not rep.a_invertible:
            continue
        checked += 1
        mismatches += rep.passes != check_psd(big.omega_tilde).passes
    mom0 = compute_moments(fock(0), 2)
    rep0 = schur_increment(build_omega_tilde(mom0, 0.5), build_omega_tilde(mom0, 1))
    ok = mismatches == 0 and not rep0.a_invertible and rep0.c2_norm < 1e-10
    _record(7, "Schur complement verdict vs direct; vacuum singular branch", ok,
            f"{mismatches} mismatches in {checked} states, vacuum |C2| {rep0.c2_norm:.2e}")


def test_criterion_08_sr_and_williamson():
    margin = np.inf
    for _, rho in ZOO:
        h = rho.hbar.hbar
        margin = min(margin, float(np.linalg.det(variance_matrix(compute_moments(rho, 1)))) - h * h / 4)
    vac = max(
        abs(float(np.linalg.det(variance_matrix(compute_moments(fock(0, hbar=h), 1)))) - h * h / 4)
        for h in (0.5, 1.0, 2.0)
    )
    form = SymplecticForm(2)
    rng = np.random.default_rng(808)
    w_dev = t_dev = 0.0
    for _ in range(10):
        S = random_symplectic(2, rng)
        v = S @ np.diag([2.0, 2.0, 3.0, 3.0]) @ S.T
        v = (v + v.T) / 2
        w_dev = max(w_dev, float(np.max(np.abs(np.subtract(williamson_symplectic_eigenvalues(v, form), (3.0, 2.0))))))
        t2, t4 = symplectic_trace_invariants(v, form)
        t_dev = max(t_dev, abs(t2 + 2 * (9 + 4)), abs(t4 - 2 * (81 + 16)))
    ok = margin >= -1e-12 and vac <= 1e-12 and w_dev <= 1e-8 and t_dev <= 1e-8
    _record(8, "det V >= hbar^2/4 with vacuum saturating; Williamson {3, 2}", ok,
            f"min margin {margin:.2e}, vacuum gap {vac:.2e}, Williamson {w_dev:.2e}, traces {t_dev:.2e}")


def test_criterion_09_wigner_route():
    mom_dev = omega_dev = norm_dev = 0.0
    for n in range(4):
        rho = fock(n)
        grid = wigner_grid(rho)
        assert grid.n_q == grid.n_p == 512
        norm_dev = max(norm_dev, abs(grid.normalization() - 1))
        direct = compute_moments(rho, 2)
        quad = quadrature_moments(grid, 2)
        mom_dev = max(mom_dev, max(abs(quad[idx] - direct[idx]) for idx in direct.values))
        diff = omega1_wigner(grid).omega_tilde - build_omega_tilde(direct, 1).omega_tilde
        omega_dev = max(omega_dev, float(np.max(np.abs(diff))))
    ok = mom_dev <= 1e-6 and omega_dev <= 1e-5 and norm_dev <= 1e-6
    _record(9, "Wigner route vs operator route, Fock n <= 3, 512 x 512 grid", ok,
            f"moments {mom_dev:.2e}, Omega {omega_dev:.2e}, normalization {norm_dev:.2e}")


def test_criterion_10_covariance_probes():
    mom = compute_moments(random_pure_state(5, 16, rng=1), 2)
    _, base_pair, base = fourth_order_analysis(mom)
    base_psd = [check_psd(build_omega_tilde(mom, J).omega_tilde).verdict for J in (0.5, 1)]
    base_scale = float(np.max(np.abs(base_pair.v_eff_t)))
    rng = np.random.default_rng(1010)
    verdict_flips = 0
    scs_dev = vec_dev = 0.0
    for _ in range(50):
        s = random_sp2(rng)
        moved = transform_moments(mom, s)
        verdict_flips += [check_psd(build_omega_tilde(moved, J).omega_tilde).verdict for J in (0.5, 1)] != base_psd
        _, pair, verdict = fourth_order_analysis(moved)
        verdict_flips += verdict.passes != base.passes
        # a congruence by Lambda scales the tensor, and its rounding noise, by about Lambda00^2
        scale = max(1.0, float(np.max(np.abs(pair.v_eff_t))) / base_scale)
        d = abs(verdict.scs_diagonal[0] - base.scs_diagonal[0])
        d = max(d, *np.abs(np.subtract(sorted(verdict.scs_diagonal[1:]), sorted(base.scs_diagonal[1:]))))
        scs_dev = max(scs_dev, d / scale)
        lam = lambda_of(s).lam
        expected = lam @ base_pair.a_upper
        vec_dev = max(vec_dev, float(np.max(np.abs(pair.a_upper - expected))) / max(1.0, float(np.max(np.abs(expected)))))
    ok = verdict_flips == 0 and scs_dev <= 1e-8 and vec_dev <= 1e-8
    _record(10, "invariance under 50 random S", ok,
            f"verdict changes {verdict_flips}, SCS diagonal (scaled) {scs_dev:.2e}, a -> Lambda a {vec_dev:.2e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
