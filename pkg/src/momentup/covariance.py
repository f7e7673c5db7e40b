r"""Sp(2,R) and SO(2,1) machinery acting on moments and hierarchy matrices.

Three-vectors and 3x3 tensors use the component order ``(0, 3, 1)`` with the
Lorentz metric ``g = diag(+1, -1, -1)``.  The monomial ("m") basis
``(q^2, qp, p^2)`` is related to it by the fixed matrix ``M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import expm

from .algebra import MonomialIndex, multiplet, to_doubled
from .errors import InvalidArgumentError, NumericalFailureError
from .hierarchy import (
    DEFAULT_TOL,
    HierarchyMatrix,
    MomentTable,
    Provenance,
    build_omega_tilde,
    check_psd,
)


@dataclass(frozen=True)
class Sp2Element:
    """Real 2x2 matrix ``[[a, b], [c, d]]`` with unit determinant."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1) > 1e-12 * max(1.0, abs(self.a * self.d), abs(self.b * self.c)):
            raise InvalidArgumentError(f"Sp(2,R) element must have det 1, got {det!r}")

    @classmethod
    def from_matrix(cls, m) -> "Sp2Element":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def identity(cls) -> "Sp2Element":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, theta: float) -> "Sp2Element":
        c, s = math.cos(theta), math.sin(theta)
        return cls(c, s, -s, c)

    @classmethod
    def squeeze(cls, r: float) -> "Sp2Element":
        return cls(math.exp(r), 0.0, 0.0, math.exp(-r))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "Sp2Element") -> "Sp2Element":
        return Sp2Element.from_matrix(self.matrix @ other.matrix)

    def __neg__(self) -> "Sp2Element":
        return Sp2Element(-self.a, -self.b, -self.c, -self.d)

    def inverse(self) -> "Sp2Element":
        return Sp2Element(self.d, -self.b, -self.c, self.a)


def random_sp2(rng=None, low: float = -2.0, high: float = 2.0) -> Sp2Element:
    """Uniform entries in ``[low, high]`` rescaled to unit determinant."""
    rng = np.random.default_rng(rng)
    while True:
        m = rng.uniform(low, high, size=(2, 2))
        det = np.linalg.det(m)
        if abs(det) > 1e-3:
            break
    if det < 0:
        m[0] *= -1
        det = -det
    m /= math.sqrt(det)
    # absorb the rounding left in det so the invariant holds tightly
    m[1] /= np.linalg.det(m)
    return Sp2Element.from_matrix(m)


@dataclass(frozen=True, eq=False)
class SymplecticForm:
    """``beta = 1_n (x) i sigma_2`` for ``n`` modes ordered ``(q1, p1, q2, p2, ...)``."""

    n_modes: int

    def __post_init__(self):
        if self.n_modes < 1:
            raise InvalidArgumentError("need at least one mode")

    @property
    def beta(self) -> np.ndarray:
        return np.kron(np.eye(self.n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


G = np.diag([1.0, -1.0, -1.0])
M = np.array([[0.5, 0.0, 0.5], [0.5, 0.0, -0.5], [0.0, 1.0, 0.0]])
M_INV = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, -1.0, 0.0]])
G_K = M_INV @ G @ M_INV.T


@dataclass(frozen=True, eq=False)
class MetricConstants:
    g: np.ndarray = G
    g_k: np.ndarray = G_K
    m: np.ndarray = M
    m_inv: np.ndarray = M_INV


METRICS = MetricConstants()


@dataclass(frozen=True, eq=False)
class LorentzElement:
    """Proper orthochronous element of SO(2,1) in the ``(0, 3, 1)`` ordering."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.shape != (3, 3):
            raise InvalidArgumentError("Lorentz element must be 3x3")
        scale = max(1.0, float(np.max(np.abs(lam))) ** 2)
        if np.max(np.abs(lam.T @ G @ lam - G)) > 1e-10 * scale:
            raise InvalidArgumentError("matrix does not preserve the Lorentz metric")
        if np.linalg.det(lam) < 0 or lam[0, 0] < 1 - 1e-10:
            raise InvalidArgumentError("Lorentz element must be proper and orthochronous")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)


def k_rep(s: Sp2Element, j) -> np.ndarray:
    r"""Representation matrix :math:`K^{(j)}(S)` on degree-``2j`` monomials.

    Row ``m`` holds the coefficients of ``(aq + bp)^{j+m} (cq + dp)^{j-m}`` on
    ``q^{j+m'} p^{j-m'}``, both orderings with ``m`` descending.
    """
    two_j = to_doubled(j)
    if two_j < 1:
        raise InvalidArgumentError("k_rep needs j >= 1/2")
    out = np.zeros((two_j + 1, two_j + 1))
    # polynomials in t = q/p, coefficient k multiplies q^k p^(2j-k)
    for row, nq in enumerate(range(two_j, -1, -1)):
        poly = npoly.polymul(npoly.polypow([s.b, s.a], nq), npoly.polypow([s.d, s.c], two_j - nq))
        for k, coef in enumerate(poly[: two_j + 1]):
            out[row, two_j - k] = coef
    return out


def k_direct_sum(s: Sp2Element, two_J: int) -> np.ndarray:
    """Block direct sum of ``K^(j)(S)`` for ``j = 1/2..J``."""
    blocks = [k_rep(s, two_j / 2) for two_j in range(1, two_J + 1)]
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    pos = 0
    for b in blocks:
        k = b.shape[0]
        out[pos:pos + k, pos:pos + k] = b
        pos += k
    return out


def lambda_of(s: Sp2Element) -> LorentzElement:
    """The SO(2,1) image of ``S``, acting on ``(x^0, x^3, x^1)``."""
    a, b, c, d = s.a, s.b, s.c, s.d
    lam = np.array([
        [0.5 * (a * a + b * b + c * c + d * d), 0.5 * (a * a - b * b + c * c - d * d), a * b + c * d],
        [0.5 * (a * a + b * b - c * c - d * d), 0.5 * (a * a - b * b - c * c + d * d), a * b - c * d],
        [a * c + b * d, a * c - b * d, a * d + b * c],
    ])
    return LorentzElement(lam)


def transform_moments(moments: MomentTable, s: Sp2Element) -> MomentTable:
    """Moments of the state conjugated by the metaplectic unitary of ``S``."""
    values = {MonomialIndex(0, 0): 1.0}
    for two_j in range(1, moments.two_j_max + 1):
        new = k_rep(s, two_j / 2) @ moments.vector(two_j)
        for idx, val in zip(multiplet(two_j), new):
            values[idx] = float(val)
    return MomentTable(moments.hbar, moments.two_j_max, values, Provenance.TRANSFORMED)


@dataclass(frozen=True)
class CovarianceCheck:
    max_deviation: float
    psd_preserved: bool
    verdict_before: str
    verdict_after: str

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "psd_preserved": self.psd_preserved,
            "verdict_before": self.verdict_before,
            "verdict_after": self.verdict_after,
        }


def congruence_covariance_check(
    h: HierarchyMatrix, s: Sp2Element, moments: MomentTable | None = None, tol: float = DEFAULT_TOL
) -> CovarianceCheck:
    """Compare the hierarchy matrix of the transformed moments with ``K(S) h K(S)^T``.

    ``moments`` defaults to the table ``h`` was built from.
    """
    moments = h.moments if moments is None else moments
    if moments is None:
        raise InvalidArgumentError("hierarchy matrix carries no source moments")
    K = k_direct_sum(s, h.two_J)
    direct = K @ h.omega_tilde @ K.T
    rebuilt = build_omega_tilde(transform_moments(moments, s), h.J).omega_tilde
    dev = float(np.max(np.abs(direct - rebuilt)))
    before = check_psd(h.omega_tilde, tol).verdict
    after = check_psd(rebuilt, tol).verdict
    return CovarianceCheck(dev, before == after, before.value, after.value)


def random_symplectic(n_modes: int, rng=None, scale: float = 0.5) -> np.ndarray:
    """Random element of Sp(2n,R) as a product of exponentiated generators."""
    rng = np.random.default_rng(rng)
    beta = SymplecticForm(n_modes).beta
    out = np.eye(2 * n_modes)
    for _ in range(3):
        h = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
        out = out @ expm(beta @ (h + h.T) / 2)
    return out


def symplectic_trace_invariants(v, form: SymplecticForm) -> tuple[float, float]:
    """``Tr (V beta^-1)^2`` and ``Tr (V beta^-1)^4``."""
    x = np.asarray(v, dtype=float) @ np.linalg.inv(form.beta)
    x2 = x @ x
    return float(np.trace(x2)), float(np.trace(x2 @ x2))


def williamson_symplectic_eigenvalues(v, form: SymplecticForm, pair_tol: float = 1e-9) -> tuple[float, ...]:
    r"""Symplectic eigenvalues of a positive definite variance matrix, descending.

    Computed as the positive eigenvalues of :math:`i V \beta^{-1}` and checked
    against the trace invariants ``Tr (V b^-1)^2 = -2 sum k^2`` and
    ``Tr (V b^-1)^4 = 2 sum k^4``.
    """
    v = np.asarray(v, dtype=float)
    n = form.n_modes
    if v.shape != (2 * n, 2 * n):
        raise InvalidArgumentError(f"variance matrix must be {2 * n}x{2 * n}")
    if np.max(np.abs(v - v.T)) > 1e-12 * max(1.0, np.max(np.abs(v))):
        raise InvalidArgumentError("variance matrix is not symmetric")
    try:
        np.linalg.cholesky((v + v.T) / 2)
    except np.linalg.LinAlgError:
        raise InvalidArgumentError("variance matrix is not positive definite") from None
    ev = np.linalg.eigvals(1j * v @ np.linalg.inv(form.beta))
    scale = float(np.max(np.abs(ev)))
    if np.max(np.abs(ev.imag)) > pair_tol * scale:
        raise NumericalFailureError("i V beta^-1 has non-real eigenvalues")
    ev = np.sort(ev.real)
    pos = ev[n:][::-1]
    neg = -ev[:n]
    if np.max(np.abs(pos - neg)) > pair_tol * scale or np.any(pos <= 0):
        raise NumericalFailureError(f"eigenvalues of i V beta^-1 do not pair: {ev}")
    kappa = 0.5 * (pos + neg)
    t2, t4 = symplectic_trace_invariants(v, form)
    if (abs(t2 + 2 * np.sum(kappa**2)) > 1e-8 * max(1.0, abs(t2))
            or abs(t4 - 2 * np.sum(kappa**4)) > 1e-8 * max(1.0, abs(t4))):
        raise NumericalFailureError("symplectic eigenvalues violate the trace identities")
    return tuple(float(k) for k in kappa)


@dataclass(frozen=True, eq=False)
class SCSResult:
    """``lam @ v @ lam.T`` is diagonal with entries ``(v00, v33, v11)`` when ``generic``."""

    lam: LorentzElement
    diagonal: tuple[float, float, float]
    generic: bool


def _is_pd(v: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(v)
    except np.linalg.LinAlgError:
        return False
    return True


def _scs_positive_definite(v: np.ndarray, tol: float) -> SCSResult:
    """SCS form of a positive definite tensor via ``v = L L^T``.

    ``v g`` is similar to the symmetric ``L^T g L``: an eigenpair ``(mu, y)``
    gives the eigenvector ``e = L y`` with ``e^T g e = mu``.  By Sylvester's
    law exactly one ``mu`` is positive.  The diagonal is read off the
    spectrum, which stays accurate when ``v`` carries a large boost.
    """
    L = np.linalg.cholesky(v)
    h = L.T @ G @ L
    mu, y = np.linalg.eigh((h + h.T) / 2)
    # eigh sorts ascending: two spacelike directions, then the timelike one
    e0 = L @ y[:, 2] / math.sqrt(mu[2])
    if e0[0] < 0:
        e0 = -e0
    e3 = L @ y[:, 0] / math.sqrt(-mu[0])
    e1 = L @ y[:, 1] / math.sqrt(-mu[1])
    E = np.column_stack([e0, e3, e1])
    if np.linalg.det(E) < 0:
        E[:, 2] *= -1
    diagonal = (float(mu[2]), float(-mu[0]), float(-mu[1]))
    generic = abs(mu[1] - mu[0]) > tol * float(np.max(np.abs(mu)))
    try:
        lam_el = LorentzElement(G @ E.T @ G)
    except InvalidArgumentError:
        return SCSResult(LorentzElement(np.eye(3)), diagonal, False)
    return SCSResult(lam_el, diagonal, generic)


def scs_normal_form(v, tol: float = DEFAULT_TOL) -> SCSResult:
    """Diagonalise a symmetric 3x3 tensor by a Lorentz congruence.

    The congruence ``L v L^T = D`` is equivalent to the similarity
    ``L (v g) L^-1 = D g``, so the columns of ``L^-1`` are g-normalised
    eigenvectors of ``v g``.  Spacelike entries are ordered ``v33 >= v11``.
    Complex spectra, g-null eigenvectors, degenerate spectra and non positive
    definite input are reported as ``generic = False``.
    """
    v = np.asarray(v, dtype=float)
    v = (v + v.T) / 2
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    pd = _is_pd(v)
    ident = LorentzElement(np.eye(3))

    off = v - np.diag(np.diag(v))
    if np.max(np.abs(off)) <= tol * scale:
        d = np.diag(v)
        generic = pd and abs(d[1] - d[2]) > tol * scale
        return SCSResult(ident, (float(d[0]), float(d[1]), float(d[2])), generic)

    if pd:
        return _scs_positive_definite(v, tol)

    evals, evecs = np.linalg.eig(v @ G)
    if np.max(np.abs(evals.imag)) > tol * scale:
        return SCSResult(ident, tuple(float(x) for x in np.diag(v)), False)
    evals = evals.real
    if np.iscomplexobj(evecs):
        piv = evecs[np.argmax(np.abs(evecs), axis=0), np.arange(3)]
        evecs = evecs / (piv / np.abs(piv))
    evecs = np.real(evecs)

    # group (near-)degenerate eigenvalues and g-orthogonalise within each group
    order = np.argsort(evals)
    groups: list[list[int]] = []
    for k in order:
        if groups and abs(evals[k] - evals[groups[-1][-1]]) <= tol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    degenerate = any(len(g) > 1 for g in groups)
    vecs, lams = [], []
    for grp in groups:
        E = evecs[:, grp]
        gram = E.T @ G @ E
        _, rot = np.linalg.eigh((gram + gram.T) / 2)
        for col in (E @ rot).T:
            vecs.append(col)
            lams.append(float(np.mean(evals[grp])))

    norms = [float(e @ G @ e) for e in vecs]
    null = any(abs(nm) <= tol * float(e @ e) for nm, e in zip(norms, vecs))
    timelike = [k for k, nm in enumerate(norms) if nm > 0]
    if null or len(timelike) != 1:
        return SCSResult(ident, tuple(float(x) for x in np.diag(v)), False)

    t = timelike[0]
    e0 = vecs[t] / math.sqrt(norms[t])
    if e0[0] < 0:
        e0 = -e0
    space = [k for k in range(3) if k != t]
    # D = lambda * g_kk, so spacelike diagonal entries are -lambda
    space.sort(key=lambda k: lams[k])
    e3, e1 = (vecs[k] / math.sqrt(-norms[k]) for k in space)
    E = np.column_stack([e0, e3, e1])
    if np.linalg.det(E) < 0:
        E[:, 2] *= -1
    lam = G @ E.T @ G
    try:
        lam_el = LorentzElement(lam)
    except InvalidArgumentError:
        return SCSResult(ident, tuple(float(x) for x in np.diag(v)), False)
    d = lam @ v @ lam.T
    generic = pd and not degenerate
    if np.max(np.abs(d - np.diag(np.diag(d)))) > max(tol, 1e-8) * max(scale, float(np.max(np.abs(d)))):
        generic = False
    return SCSResult(lam_el, (float(d[0, 0]), float(d[1, 1]), float(d[2, 2])), generic)
