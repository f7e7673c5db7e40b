r"""Moment tables, the hierarchy matrices :math:`\tilde\Omega^{(J)}` and their PSD tests.

Matrix entries are assembled from stored moments through the product rule of
:func:`momentup.algebra.tau_product_expansion`, never from dense operator
products, so the assembly is independent of the Fock truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .algebra import (
    HbarConfig,
    MonomialIndex,
    all_indices,
    format_half,
    hierarchy_indices,
    multiplet,
    tau_product_expansion,
    to_doubled,
    weyl_monomial,
)
from .errors import CutoffTooSmallError, InvalidArgumentError
from .states import DensityMatrix

DEFAULT_TOL = 1e-9
MOMENT_IMAG_TOL = 1e-9
TAIL_MASS_TOL = 1e-10


class Provenance(str, Enum):
    OPERATOR_TRACE = "operator-trace"
    WIGNER_QUADRATURE = "wigner-quadrature"
    TRANSFORMED = "transformed"


@dataclass(frozen=True)
class MomentTable:
    """Real expectation values ``<T_jm>`` for every ``j <= j_max``; ``<T_00> = 1``."""

    hbar: float
    two_j_max: int
    values: Mapping[MonomialIndex, float]
    provenance: Provenance = Provenance.OPERATOR_TRACE

    def __post_init__(self):
        vals = {k: float(v) for k, v in self.values.items()}
        missing = [str(k) for k in all_indices(self.two_j_max) if k not in vals]
        if missing:
            raise InvalidArgumentError(f"moment table lacks entries {missing}")
        if abs(vals[MonomialIndex(0, 0)] - 1) > 1e-12:
            raise InvalidArgumentError("moment table must have <T_00> = 1")
        object.__setattr__(self, "values", vals)

    @property
    def j_max(self) -> float:
        return self.two_j_max / 2

    def __getitem__(self, idx: MonomialIndex) -> float:
        return self.values[idx]

    def get(self, idx: MonomialIndex, default: float = 0.0) -> float:
        return self.values.get(idx, default)

    def vector(self, two_j: int) -> np.ndarray:
        """Moments of one multiplet, ``m`` descending."""
        return np.array([self.values[i] for i in multiplet(two_j)])

    def to_dict(self) -> dict:
        return {
            "hbar": self.hbar,
            "j_max": format_half(self.two_j_max),
            "provenance": self.provenance.value,
            "values": {str(k): v for k, v in sorted(self.values.items())},
        }


def compute_moments(rho: DensityMatrix, j_max) -> MomentTable:
    """``<T_jm> = Tr(rho T_jm)`` for all ``j <= j_max`` by dense traces."""
    two_j_max = to_doubled(j_max)
    N = rho.cutoff
    if N < two_j_max + 2:
        raise CutoffTooSmallError(f"cutoff {N} cannot hold monomials of order {two_j_max}")
    tail = rho.tail_mass(N - two_j_max)
    if tail > TAIL_MASS_TOL:
        raise CutoffTooSmallError(
            f"state has mass {tail:.3g} within {two_j_max} levels of the cutoff {N}"
        )
    h = rho.hbar.hbar
    r = rho.matrix
    values = {}
    for idx in all_indices(two_j_max):
        t = weyl_monomial(idx, N, h).entries
        val = np.sum(r * t.T)
        if abs(val.imag) > MOMENT_IMAG_TOL * max(1.0, abs(val.real)):
            raise InvalidArgumentError(f"<T{idx}> has imaginary part {val.imag:.3g}")
        values[idx] = val.real
    values[MonomialIndex(0, 0)] = 1.0
    return MomentTable(h, two_j_max, values, Provenance.OPERATOR_TRACE)


@dataclass(frozen=True, eq=False)
class HierarchyMatrix:
    """``omega_tilde = v_part + (i/2) w_part`` over monomials with ``1/2 <= j <= J``."""

    two_J: int
    omega_tilde: np.ndarray
    v_part: np.ndarray
    w_part: np.ndarray
    index_order: tuple[MonomialIndex, ...]
    moments: MomentTable | None = None

    @property
    def J(self) -> float:
        return self.two_J / 2

    @property
    def side(self) -> int:
        return len(self.index_order)

    def block(self, two_j: int, two_jp: int) -> np.ndarray:
        rows = [k for k, i in enumerate(self.index_order) if i.two_j == two_j]
        cols = [k for k, i in enumerate(self.index_order) if i.two_j == two_jp]
        return self.omega_tilde[np.ix_(rows, cols)]


def hierarchy_side(two_J: int) -> int:
    """``N_J = J (2J + 3)``."""
    return two_J * (two_J + 3) // 2


def build_omega_tilde(moments: MomentTable, J) -> HierarchyMatrix:
    r"""Assemble :math:`\tilde\Omega^{(J)}` with its symmetric/antisymmetric split."""
    two_J = to_doubled(J)
    if two_J < 1:
        raise InvalidArgumentError("J must be at least 1/2")
    if moments.two_j_max < 2 * two_J:
        raise InvalidArgumentError(
            f"J={format_half(two_J)} needs moments up to order {2 * two_J}, "
            f"table stops at {moments.two_j_max}"
        )
    order = hierarchy_indices(two_J)
    n = len(order)
    v = np.zeros((n, n))
    w = np.zeros((n, n))
    for r, a in enumerate(order):
        for c in range(r, n):
            b = order[c]
            sym = 0.0
            anti = 0.0
            for idx, coef in tau_product_expansion(a, b, moments.hbar).terms.items():
                mom = moments[idx]
                if (a.two_j + b.two_j - idx.two_j) % 4 == 0:
                    sym += coef.real * mom
                else:
                    anti += coef.imag * mom
            v[r, c] = v[c, r] = sym - moments[a] * moments[b]
            w[r, c] = 2 * anti
            w[c, r] = -2 * anti
    return HierarchyMatrix(two_J, v + 0.5j * w, v, w, tuple(order), moments)


class Verdict(str, Enum):
    POSITIVE_DEFINITE = "positive-definite"
    POSITIVE_SEMIDEFINITE = "positive-semidefinite"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class PsdReport:
    matrix_label: str
    side: int
    min_eigenvalue: float
    tolerance: float
    verdict: Verdict
    eigenvalues: tuple[float, ...]

    @property
    def passes(self) -> bool:
        return self.verdict is not Verdict.INDEFINITE

    def to_dict(self) -> dict:
        return {
            "matrix_label": self.matrix_label,
            "side": self.side,
            "min_eigenvalue": self.min_eigenvalue,
            "tolerance": self.tolerance,
            "verdict": self.verdict.value,
            "eigenvalues": list(self.eigenvalues),
        }


def classify(min_eig: float, tol: float) -> Verdict:
    if min_eig >= tol:
        return Verdict.POSITIVE_DEFINITE
    if abs(min_eig) < tol:
        return Verdict.POSITIVE_SEMIDEFINITE
    return Verdict.INDEFINITE


def hermitian_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix via its real symmetric embedding
    ``[[Re, -Im], [Im, Re]]``, whose spectrum is the original one doubled."""
    re, im = matrix.real, matrix.imag
    emb = np.block([[re, -im], [im, re]])
    emb = (emb + emb.T) / 2
    return np.linalg.eigvalsh(emb)[::2]


def check_psd(matrix, tol: float = DEFAULT_TOL, label: str = "") -> PsdReport:
    """Classify a Hermitian matrix by its smallest eigenvalue against ``±tol``."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError("check_psd needs a square matrix")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol * max(1.0, np.max(np.abs(m))):
        raise InvalidArgumentError(f"matrix {label!r} is not Hermitian (deviation {dev:.3g})")
    eig = hermitian_eigenvalues((m + m.conj().T) / 2)
    lo = float(eig[0]) if eig.size else 0.0
    return PsdReport(label, m.shape[0], lo, tol, classify(lo, tol), tuple(float(x) for x in eig))


@dataclass(frozen=True, eq=False)
class SchurReport:
    """Result of one step ``J -> J + 1/2`` of the hierarchy via the Schur complement.

    In the singular branch ``c2_norm`` is the norm of the coupling between the
    null space of ``A`` and the new rows; it must vanish for a PSD matrix.
    """

    two_J: int
    a_invertible: bool
    a_rank: int
    complement: np.ndarray
    complement_psd: PsdReport
    a_psd: PsdReport
    c2_norm: float | None = None
    c2_tolerance: float | None = None

    @property
    def J(self) -> float:
        return self.two_J / 2

    @property
    def passes(self) -> bool:
        ok = self.a_psd.passes and self.complement_psd.passes
        if not self.a_invertible:
            ok = ok and self.c2_norm <= self.c2_tolerance
        return ok

    def to_dict(self) -> dict:
        return {
            "J": format_half(self.two_J),
            "a_invertible": self.a_invertible,
            "a_rank": self.a_rank,
            "c2_norm": self.c2_norm,
            "c2_tolerance": self.c2_tolerance,
            "a_psd": self.a_psd.to_dict(),
            "complement_psd": self.complement_psd.to_dict(),
            "passes": self.passes,
        }


def schur_increment(h_small: HierarchyMatrix, h_big: HierarchyMatrix, tol: float = DEFAULT_TOL) -> SchurReport:
    """Test the new rows of ``h_big`` given ``h_small`` through ``B - C A^{-1} C^\\dagger``.

    ``A`` is declared singular when an eigenvalue falls below ``tol * max_eig``;
    the complement is then formed on the range of ``A`` only.
    """
    if h_big.two_J != h_small.two_J + 1:
        raise InvalidArgumentError("h_big must be one half-step above h_small")
    n = h_small.side
    big = h_big.omega_tilde
    if np.max(np.abs(big[:n, :n] - h_small.omega_tilde)) > 1e-12:
        raise InvalidArgumentError("leading block of h_big does not match h_small")
    A = big[:n, :n]
    B = big[n:, n:]
    C = big[n:, :n]
    a_psd = check_psd(A, tol, label=f"A (J={format_half(h_small.two_J)})")
    w, U = np.linalg.eigh(A)
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    keep = w > tol * scale
    rank = int(np.count_nonzero(keep))
    if rank == n:
        comp = B - C @ np.linalg.solve(A, C.conj().T)
        c2 = None
        c2_tol = None
    else:
        C1 = C @ U[:, keep]
        C2 = C @ U[:, ~keep]
        comp = B - C1 @ np.diag(1 / w[keep]) @ C1.conj().T
        c2 = float(np.linalg.norm(C2, 2))
        # a PSD matrix with a null eigenvalue eps of A allows |C2|^2 <= eps |B|
        b_scale = max(1.0, float(np.max(np.abs(B))))
        c2_tol = float(np.sqrt(tol * scale * b_scale))
    comp = (comp + comp.conj().T) / 2
    label = f"B - C A^-1 C^+ (J={format_half(h_small.two_J)}->{format_half(h_big.two_J)})"
    return SchurReport(
        h_small.two_J, rank == n, rank, comp, check_psd(comp, tol, label), a_psd, c2, c2_tol
    )


@dataclass(frozen=True)
class SRResult:
    det_v: float
    bound: float
    x_mu: tuple[float, float, float]
    invariant: float
    passes: bool

    @property
    def saturated(self) -> bool:
        return abs(self.det_v - self.bound) <= 1e-12 * max(1.0, self.bound)

    def to_dict(self) -> dict:
        return {
            "det_v": self.det_v,
            "bound": self.bound,
            "x_mu": list(self.x_mu),
            "invariant": self.invariant,
            "passes": self.passes,
            "saturated": self.saturated,
        }


def sr_up_check(v2, hbar: HbarConfig | float = 1.0) -> SRResult:
    """Schrodinger-Robertson test ``det V >= hbar^2/4`` on a 2x2 variance matrix.

    ``x_mu = ((Vqq+Vpp)/2, (Vqq-Vpp)/2, Vqp)`` in the (0, 3, 1) component order.
    """
    h = hbar.hbar if isinstance(hbar, HbarConfig) else float(hbar)
    v = np.asarray(v2, dtype=float)
    if v.shape != (2, 2):
        raise InvalidArgumentError("sr_up_check needs a 2x2 matrix")
    x0 = 0.5 * (v[0, 0] + v[1, 1])
    x3 = 0.5 * (v[0, 0] - v[1, 1])
    x1 = 0.5 * (v[0, 1] + v[1, 0])
    det = v[0, 0] * v[1, 1] - x1 * x1
    inv = x0 * x0 - x3 * x3 - x1 * x1
    bound = h * h / 4
    return SRResult(float(det), bound, (float(x0), float(x3), float(x1)), float(inv),
                    bool(det >= bound - 1e-12 and x0 > 0))


def variance_matrix(moments: MomentTable) -> np.ndarray:
    """2x2 symmetrised covariance of ``(q, p)`` from a moment table."""
    q = moments[MonomialIndex(1, 1)]
    p = moments[MonomialIndex(1, -1)]
    return np.array([
        [moments[MonomialIndex(2, 2)] - q * q, moments[MonomialIndex(2, 0)] - q * p],
        [moments[MonomialIndex(2, 0)] - q * p, moments[MonomialIndex(2, -2)] - p * p],
    ])
