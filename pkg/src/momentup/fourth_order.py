r"""The first step beyond Schrodinger-Robertson: moments up to fourth order.

With ``xi = (q, p)`` and ``X = (q^2, {q,p}/2, p^2)`` the hierarchy matrix at
``J = 1`` splits into ``A`` (2x2), ``B`` (3x3) and ``C`` (3x2).  When ``A`` is
invertible the new condition is
``B - C A^{-1} C^+ = V_eff + (i/2) w_eff >= 0``, which is SO(2,1) covariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import MonomialIndex
from .covariance import G, M, SCSResult, scs_normal_form
from .errors import InvalidArgumentError, NumericalFailureError, SingularAError
from .hierarchy import (
    DEFAULT_TOL,
    MomentTable,
    SchurReport,
    build_omega_tilde,
    hermitian_eigenvalues,
    schur_increment,
)

REALITY_TOL = 1e-12

SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_2 = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]])

XI_M = (1, -1)  # doubled m for q, p
X_M = (2, 0, -2)  # doubled m for q^2, qp, p^2


@dataclass(frozen=True, eq=False)
class FourthOrderBlocks:
    a_block: np.ndarray
    b_block: np.ndarray
    c_block: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    x_mu: np.ndarray
    kappa_inv: float
    hbar: float

    def a_inverse_scale(self) -> float:
        return max(float(self.x_mu[0]) ** 2, self.hbar**2 / 4)


def _sign_half(two_m: int) -> int:
    """``(-1)^(m - 1/2)`` for half-odd ``m`` given doubled."""
    return 1 if ((two_m - 1) // 2) % 2 == 0 else -1


def build_blocks(moments: MomentTable, hbar: float | None = None) -> FourthOrderBlocks:
    """Assemble ``A``, ``B``, ``C`` and their real/imaginary parts from moments."""
    if moments.two_j_max < 4:
        raise InvalidArgumentError("fourth-order blocks need moments with j_max >= 2")
    h = moments.hbar if hbar is None else float(hbar)
    if abs(h - moments.hbar) > 1e-15 * h:
        raise InvalidArgumentError("hbar does not match the moment table")

    def mom(two_j: int, two_m: int) -> float:
        if abs(two_m) > two_j:
            return 0.0
        return moments[MonomialIndex(two_j, two_m)]

    xi = {m: mom(1, m) for m in XI_M}
    X = {m: mom(2, m) for m in X_M}

    a1 = np.array([[mom(2, m + mp) - xi[m] * xi[mp] for mp in XI_M] for m in XI_M])
    a2 = np.array([[h / 2 * _sign_half(m) if m == -mp else 0.0 for mp in XI_M] for m in XI_M])

    b1 = np.zeros((3, 3))
    b2 = np.zeros((3, 3))
    for r, m in enumerate(X_M):
        for c, mp in enumerate(X_M):
            # the constant term is (hbar^2/4)(-1)^m (1 + m^2) for m' = -m
            const = h * h / 4 * (-1) ** (m // 2) * (1 + (m // 2) ** 2) if m == -mp else 0.0
            b1[r, c] = mom(4, m + mp) + const - X[m] * X[mp]
            b2[r, c] = h * (m - mp) / 2 * mom(2, m + mp)

    c1 = np.zeros((3, 2))
    c2 = np.zeros((3, 2))
    for r, m in enumerate(X_M):
        for c, mp in enumerate(XI_M):
            c1[r, c] = mom(3, m + mp) - X[m] * xi[mp]
            # the commutator term carries (1 + m^2): X_{+-1} xi differs from its Weyl symbol by i hbar xi
            c2[r, c] = -h / 2 * (1 + (m // 2) ** 2) * _sign_half(mp) * mom(1, m + mp)

    x_mu = np.array([0.5 * (a1[0, 0] + a1[1, 1]), 0.5 * (a1[0, 0] - a1[1, 1]), a1[0, 1]])
    kappa_inv = float(x_mu[0] ** 2 - x_mu[1] ** 2 - x_mu[2] ** 2 - h * h / 4)
    return FourthOrderBlocks(
        a1 + 1j * a2, b1 + 1j * b2, c1 + 1j * c2,
        a1, a2, b1, b2, c1, c2, x_mu, kappa_inv, h,
    )


def _x_tilde_sigma(x_mu: np.ndarray) -> np.ndarray:
    x0, x3, x1 = x_mu
    return x0 * np.eye(2) - x3 * SIGMA_3 - x1 * SIGMA_1


def invert_a(blocks: FourthOrderBlocks, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``A^{-1} = kappa (x~.sigma + (hbar/2) sigma_2)`` with ``x~ = (x0, -x3, -x1)``."""
    if blocks.kappa_inv <= tol * blocks.a_inverse_scale():
        raise SingularAError(f"det A = {blocks.kappa_inv:.3g} is not positive")
    kappa = 1 / blocks.kappa_inv
    inv = kappa * (_x_tilde_sigma(blocks.x_mu) + blocks.hbar / 2 * SIGMA_2)
    direct = np.linalg.inv(blocks.a_block)
    if np.max(np.abs(inv - direct)) > 1e-12 * max(1.0, float(np.max(np.abs(direct)))) * max(1.0, kappa * blocks.a_inverse_scale()):
        raise NumericalFailureError("closed-form inverse of A disagrees with direct inversion")
    return inv


@dataclass(frozen=True, eq=False)
class EffPair:
    """``V_eff`` / ``w_eff`` in the monomial basis and as SO(2,1) tensors.

    ``a_vector`` holds the lowered components ``(a_0, a_3, a_1)`` with
    ``w_eff_t[mu, nu] = eps^{mu nu lam} a_lam`` and ``eps^{031} = +1``.
    """

    v_eff_m: np.ndarray
    w_eff_m: np.ndarray
    v_eff_t: np.ndarray
    w_eff_t: np.ndarray
    a_vector: np.ndarray

    @property
    def a_upper(self) -> np.ndarray:
        """Contravariant components ``a^mu = g^{mu nu} a_nu``."""
        return G @ self.a_vector

    @property
    def complement_m(self) -> np.ndarray:
        return self.v_eff_m + 0.5j * self.w_eff_m


def _real_part(z: np.ndarray, what: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(z))))
    if np.max(np.abs(z.imag)) > REALITY_TOL * scale:
        raise NumericalFailureError(f"{what} has imaginary residue {np.max(np.abs(z.imag)):.3g}")
    return z.real


def dual_vector(w_t: np.ndarray) -> np.ndarray:
    """Lowered ``(a_0, a_3, a_1)`` of an antisymmetric tensor in ``(0, 3, 1)`` order."""
    return np.array([w_t[1, 2], -w_t[0, 2], w_t[0, 1]])


def eff_pair(blocks: FourthOrderBlocks, tol: float = DEFAULT_TOL) -> EffPair:
    """Effective variance and commutator matrices of ``B - C A^{-1} C^+``."""
    if blocks.kappa_inv <= tol * blocks.a_inverse_scale():
        raise SingularAError(f"det A = {blocks.kappa_inv:.3g} is not positive")
    kappa = 1 / blocks.kappa_inv
    xs = _x_tilde_sigma(blocks.x_mu)
    h = blocks.hbar
    c1, c2 = blocks.c1, blocks.c2
    v = blocks.b1 - kappa * (
        c1 @ xs @ c1.T + c2 @ xs @ c2.T
        + 1j * h / 2 * c2 @ SIGMA_2 @ c1.T - 1j * h / 2 * c1 @ SIGMA_2 @ c2.T
    )
    half_w = blocks.b2 - kappa * (
        c2 @ xs @ c1.T - c1 @ xs @ c2.T
        - 1j * h / 2 * c1 @ SIGMA_2 @ c1.T - 1j * h / 2 * c2 @ SIGMA_2 @ c2.T
    )
    v = _real_part(v, "V_eff")
    w = 2 * _real_part(half_w, "w_eff")
    v = (v + v.T) / 2
    w = (w - w.T) / 2
    v_t = M @ v @ M.T
    w_t = M @ w @ M.T
    return EffPair(v, w, v_t, w_t, dual_vector(w_t))


@dataclass(frozen=True, eq=False)
class FourthOrderVerdict:
    """Outcome of the fourth-order test.

    ``b_invariants = (b0, b3, b1)`` are read from the SCS-transformed ``w_eff``
    using the pattern ``[[0, -b1, b3], [b1, 0, b0], [-b3, -b0, 0]]``.
    """

    scs_diagonal: tuple[float, float, float]
    b_invariants: tuple[float, float, float]
    eigenvalues: tuple[float, ...]
    passes: bool
    generic_a: bool
    scs_generic: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "scs_diagonal": list(self.scs_diagonal),
            "b_invariants": list(self.b_invariants),
            "eigenvalues": list(self.eigenvalues),
            "passes": self.passes,
            "generic_a": self.generic_a,
            "scs_generic": self.scs_generic,
            "tolerance": self.tolerance,
        }


def fourth_order_verdict(pair: EffPair, tol: float = DEFAULT_TOL, generic_a: bool = True) -> FourthOrderVerdict:
    """Eigenvalue test of ``V_eff^{mu nu} + (i/2) w_eff^{mu nu}`` plus its SCS invariants."""
    herm = pair.v_eff_t + 0.5j * pair.w_eff_t
    eig = hermitian_eigenvalues(herm)
    scs: SCSResult = scs_normal_form(pair.v_eff_t, tol)
    lam = scs.lam.lam
    w = lam @ pair.w_eff_t @ lam.T
    b0, b3, b1 = float(w[1, 2]), float(w[0, 2]), float(w[1, 0])
    # the normal form fixes lam only up to a half-turn in the 3-1 plane, which
    # flips (b3, b1) together; pick b3 >= 0 (then b1 >= 0 when b3 vanishes)
    if b3 < -tol or (abs(b3) <= tol and b1 < 0):
        b3, b1 = -b3, -b1
    b = (b0, b3, b1)
    return FourthOrderVerdict(
        scs.diagonal, b, tuple(float(x) for x in eig),
        bool(eig[0] >= -tol), generic_a, scs.generic, tol,
    )


def fourth_order_analysis(moments: MomentTable, tol: float = DEFAULT_TOL) -> tuple[FourthOrderBlocks, EffPair, FourthOrderVerdict]:
    """Full pipeline; raises :class:`SingularAError` when ``A`` is singular."""
    blocks = build_blocks(moments)
    pair = eff_pair(blocks, tol)
    return blocks, pair, fourth_order_verdict(pair, tol)


def singular_a_analysis(moments: MomentTable, tol: float = DEFAULT_TOL) -> tuple[SchurReport, EffPair, FourthOrderVerdict]:
    """Fourth-order test when ``A`` is singular.

    The singular Schur branch supplies ``B - C1 A1^-1 C1^+`` on the range of
    ``A``; it stands in for ``V_eff + (i/2) w_eff`` and is only meaningful when
    the coupling ``C2`` to the null space of ``A`` vanishes, so ``passes``
    also requires that.
    """
    rep = schur_increment(build_omega_tilde(moments, 0.5), build_omega_tilde(moments, 1), tol)
    v = rep.complement.real
    w = 2 * rep.complement.imag
    v = (v + v.T) / 2
    w = (w - w.T) / 2
    w_t = M @ w @ M.T
    pair = EffPair(v, w, M @ v @ M.T, w_t, dual_vector(w_t))
    verdict = fourth_order_verdict(pair, tol, generic_a=rep.a_invertible)
    if not rep.passes:
        verdict = FourthOrderVerdict(
            verdict.scs_diagonal, verdict.b_invariants, verdict.eigenvalues, False,
            verdict.generic_a, verdict.scs_generic, tol,
        )
    return rep, pair, verdict
