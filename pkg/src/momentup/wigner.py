r"""Wigner distributions on phase-space grids and the phase-space route to moments.

The Wigner function of a number-basis density matrix is summed from the
cross-Wigner kernels of ``|m><n|``, generated by a three-term recurrence in
``m`` and ``n``.  Integrals use the composite trapezoid rule on uniform grids.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .algebra import MonomialIndex, all_indices, hierarchy_indices, to_doubled
from .errors import GridTooSmallError, InvalidArgumentError, NumericalFailureError
from .hierarchy import HierarchyMatrix, MomentTable, Provenance
from .states import DensityMatrix

NORM_TOL = 1e-6
CONVERGENCE_TOL = 1e-6
DEFAULT_POINTS = 512
DEFAULT_SIGMAS = 8.0
MIN_SIGMAS = 6.0


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """``values[i, j] = W(q_i, p_j)`` on a uniform grid, both axes ascending."""

    q_min: float
    q_max: float
    p_min: float
    p_max: float
    n_q: int
    n_p: int
    values: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise InvalidArgumentError("Wigner grid values must be real")
        v = np.array(v, dtype=float)
        if v.shape != (self.n_q, self.n_p):
            raise InvalidArgumentError(f"grid values have shape {v.shape}, expected {(self.n_q, self.n_p)}")
        if self.n_q < 3 or self.n_p < 3 or not (self.q_max > self.q_min and self.p_max > self.p_min):
            raise InvalidArgumentError("degenerate phase-space grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q, self.p, indexing="ij")

    def same_axes(self, other: "PhaseGrid") -> bool:
        return (self.q_min, self.q_max, self.p_min, self.p_max, self.n_q, self.n_p) == (
            other.q_min, other.q_max, other.p_min, other.p_max, other.n_q, other.n_p
        )

    def integrate(self, f: np.ndarray | float = 1.0) -> float:
        """Trapezoid quadrature of ``W * f`` (rows first, then the q axis)."""
        integrand = self.values * f
        inner = np.trapezoid(integrand, self.p, axis=1)
        return float(np.trapezoid(inner, self.q))

    def normalization(self) -> float:
        return self.integrate()


def _kernel_sum(rho: np.ndarray, q: np.ndarray, p: np.ndarray, hbar: float) -> np.ndarray:
    """Complex ``sum_{mn} rho_mn W_{|m><n|}(q, p)`` by recurrence."""
    D = rho.shape[0]
    A = (q + 1j * p) / math.sqrt(2 * hbar)
    w = [None] * D
    w[0] = np.exp(-2 * np.abs(A) ** 2) / (math.pi * hbar) + 0j
    total = rho[0, 0] * w[0]
    for n in range(1, D):
        w[n] = 2 * A * w[n - 1] / math.sqrt(n)
        total += rho[0, n] * w[n] + rho[n, 0] * np.conj(w[n])
    # after pass m, w[n] holds the kernel of (m, n) for n >= m
    for m in range(1, D):
        prev = w[m].copy()
        w[m] = (2 * np.conj(A) * prev - math.sqrt(m) * w[m - 1]) / math.sqrt(m)
        total += rho[m, m] * w[m]
        for n in range(m + 1, D):
            nxt = (2 * A * w[n - 1] - math.sqrt(m) * prev) / math.sqrt(n)
            prev = w[n]
            w[n] = nxt
            total += rho[m, n] * w[n] + rho[n, m] * np.conj(w[n])
    return total


def wigner_at(rho: DensityMatrix, q, p) -> np.ndarray:
    """Wigner function at arbitrary points (broadcast ``q`` against ``p``)."""
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    d = rho.support()
    total = _kernel_sum(rho.matrix[:d, :d], q, p, rho.hbar.hbar)
    scale = max(1.0, float(np.max(np.abs(total.real)))) if total.size else 1.0
    if total.size and np.max(np.abs(total.imag)) > 1e-9 * scale:
        raise NumericalFailureError("Wigner function has an imaginary residue")
    return total.real


def _marginal_stats(rho: DensityMatrix) -> tuple[float, float, float, float]:
    from .algebra import make_quadratures

    d = min(rho.cutoff, rho.support() + 2)
    r = rho.matrix[:d, :d]
    Q, P = (x.entries for x in make_quadratures(d, rho.hbar.hbar))
    mq = np.trace(r @ Q).real
    mp = np.trace(r @ P).real
    vq = np.trace(r @ Q @ Q).real - mq * mq
    vp = np.trace(r @ P @ P).real - mp * mp
    return mq, mp, math.sqrt(max(vq, 0.0)), math.sqrt(max(vp, 0.0))


def auto_extent(rho: DensityMatrix, sigmas: float = DEFAULT_SIGMAS) -> tuple[float, float, float, float]:
    """``mean +- sigmas * std`` per axis, from the state's second moments."""
    mq, mp, sq, sp = _marginal_stats(rho)
    return mq - sigmas * sq, mq + sigmas * sq, mp - sigmas * sp, mp + sigmas * sp


def wigner_grid(
    rho: DensityMatrix,
    extent: tuple[float, float, float, float] | None = None,
    n_q: int = DEFAULT_POINTS,
    n_p: int = DEFAULT_POINTS,
) -> PhaseGrid:
    """Sample the Wigner function of ``rho`` on a uniform grid.

    The default extent is ``mean +- 8 std`` per axis; an explicit extent must
    cover at least ``mean +- 6 std``.
    """
    if extent is None:
        extent = auto_extent(rho)
    else:
        lo_q, hi_q, lo_p, hi_p = auto_extent(rho, MIN_SIGMAS)
        q_min, q_max, p_min, p_max = extent
        if q_min > lo_q or q_max < hi_q or p_min > lo_p or p_max < hi_p:
            raise GridTooSmallError(
                f"grid {extent} does not cover 6 standard deviations {(lo_q, hi_q, lo_p, hi_p)}"
            )
    q_min, q_max, p_min, p_max = (float(x) for x in extent)
    q = np.linspace(q_min, q_max, n_q)
    p = np.linspace(p_min, p_max, n_p)
    Q, P = np.meshgrid(q, p, indexing="ij")
    return PhaseGrid(q_min, q_max, p_min, p_max, n_q, n_p, wigner_at(rho, Q, P), rho.hbar.hbar)


def gaussian_grid(
    mean, cov, extent: tuple[float, float, float, float], n_q: int = DEFAULT_POINTS,
    n_p: int = DEFAULT_POINTS, hbar: float = 1.0,
) -> PhaseGrid:
    """Normalised Gaussian phase-space density; need not be a valid Wigner function."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    q = np.linspace(extent[0], extent[1], n_q)
    p = np.linspace(extent[2], extent[3], n_p)
    Q, P = np.meshgrid(q, p, indexing="ij")
    d = np.stack([Q - mean[0], P - mean[1]], axis=-1)
    inv = np.linalg.inv(cov)
    expo = -0.5 * np.einsum("...i,ij,...j->...", d, inv, d)
    vals = np.exp(expo) / (2 * math.pi * math.sqrt(np.linalg.det(cov)))
    return PhaseGrid(*extent, n_q, n_p, vals, hbar)


def _require_normalized(grid: PhaseGrid) -> None:
    norm = grid.normalization()
    if abs(norm - 1) > NORM_TOL:
        raise GridTooSmallError(f"grid normalization {norm!r} misses 1 by more than {NORM_TOL}")


def _moments_of(grid: PhaseGrid, two_j_max: int, stride: int = 1) -> dict[MonomialIndex, float]:
    if stride != 1:
        grid = PhaseGrid(
            grid.q_min, grid.q[::stride][-1], grid.p_min, grid.p[::stride][-1],
            len(grid.q[::stride]), len(grid.p[::stride]), grid.values[::stride, ::stride], grid.hbar,
        )
    Q, P = grid.mesh()
    values = {}
    for idx in all_indices(two_j_max):
        values[idx] = grid.integrate(Q ** idx.q_power * P ** idx.p_power)
    return values


def quadrature_moments(grid: PhaseGrid, j_max) -> MomentTable:
    """Phase-space moments ``int W q^{j+m} p^{j-m}`` for all ``j <= j_max``."""
    two_j_max = to_doubled(j_max)
    _require_normalized(grid)
    values = _moments_of(grid, two_j_max)
    values[MonomialIndex(0, 0)] = 1.0
    return MomentTable(grid.hbar, two_j_max, values, Provenance.WIGNER_QUADRATURE)


def check_convergence(grid: PhaseGrid, j_max=2, tol: float = CONVERGENCE_TOL) -> float:
    """Largest change in moments up to ``j_max`` between the grid and its
    half-resolution subgrid; raises :class:`GridTooSmallError` above ``tol``."""
    two_j_max = to_doubled(j_max)
    fine = _moments_of(grid, two_j_max)
    coarse = _moments_of(grid, two_j_max, stride=2)
    edge = np.concatenate([grid.values[0], grid.values[-1], grid.values[:, 0], grid.values[:, -1]])
    peak = float(np.max(np.abs(grid.values)))
    if np.max(np.abs(edge)) > 1e-10 * peak:
        raise GridTooSmallError("Wigner function has not decayed at the grid boundary")
    diff = max(abs(fine[k] - coarse[k]) / max(1.0, abs(fine[k])) for k in fine)
    if diff > tol:
        raise GridTooSmallError(f"moments move by {diff:.3g} under grid halving (tolerance {tol})")
    return diff


def overlap(g1: PhaseGrid, g2: PhaseGrid) -> float:
    """``int W1 W2 dq dp``; multiply by ``2 pi hbar`` for ``Tr(rho1 rho2)``."""
    if not g1.same_axes(g2):
        raise InvalidArgumentError("overlap needs identical grids")
    return g1.integrate(g2.values)


def state_overlap(g1: PhaseGrid, g2: PhaseGrid) -> float:
    """``Tr(rho1 rho2) = 2 pi hbar int W1 W2``."""
    if g1.hbar != g2.hbar:
        raise InvalidArgumentError("grids carry different hbar")
    return 2 * math.pi * g1.hbar * overlap(g1, g2)


class LorentzClass(str, Enum):
    ABOVE_BOUND = "timelike-positive-above-bound"
    BELOW_BOUND = "timelike-positive-below-bound"
    OTHER = "other"


@dataclass(frozen=True)
class LorentzAverage:
    mean_q: float
    mean_p: float
    x_mu: tuple[float, float, float]
    invariant: float
    classification: LorentzClass

    def to_dict(self) -> dict:
        return {
            "mean_q": self.mean_q,
            "mean_p": self.mean_p,
            "x_mu": list(self.x_mu),
            "invariant": self.invariant,
            "classification": self.classification.value,
        }


def pointwise_x_mu(grid: PhaseGrid, mean_q: float, mean_p: float) -> np.ndarray:
    """The displaced light-like vector ``X^mu(q, p)`` at every grid point, shape (3, n_q, n_p)."""
    Q, P = grid.mesh()
    dq, dp = Q - mean_q, P - mean_p
    return np.stack([0.5 * (dq * dq + dp * dp), 0.5 * (dq * dq - dp * dp), dq * dp])


def lorentz_average(grid: PhaseGrid, hbar: float | None = None, tol: float = NORM_TOL) -> LorentzAverage:
    """Average ``X^mu(q, p)`` against ``W`` and place it relative to ``x.x = hbar^2/4``."""
    h = grid.hbar if hbar is None else float(hbar)
    _require_normalized(grid)
    Q, P = grid.mesh()
    mq = grid.integrate(Q)
    mp = grid.integrate(P)
    X = pointwise_x_mu(grid, mq, mp)
    x = tuple(grid.integrate(X[k]) for k in range(3))
    inv = x[0] * x[0] - x[1] * x[1] - x[2] * x[2]
    bound = h * h / 4
    if x[0] > 0 and inv >= bound - tol * max(1.0, bound):
        cls = LorentzClass.ABOVE_BOUND
    elif x[0] > 0 and inv > 0:
        cls = LorentzClass.BELOW_BOUND
    else:
        cls = LorentzClass.OTHER
    return LorentzAverage(mq, mp, x, inv, cls)


def c_matrix(q, p, hbar: float = 1.0) -> np.ndarray:
    r"""Correction ``C(q,p)`` with ``A_a A_b = (A_a A_b)_W + (C_ab)_W`` for
    ``A = (q, p, q^2, qp, p^2)``; shape ``(5, 5) + shape(q)``.

    The ``(q, p^2)`` and ``(p, q^2)`` entries carry ``i hbar``, not ``i hbar / 2``.
    """
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    h = hbar
    z = np.zeros_like(q)
    one = np.ones_like(q)
    ih = 1j * h
    rows = [
        [z, ih / 2 * one, z, ih * q / 2, ih * p],
        [-ih / 2 * one, z, -ih * q, -ih * p / 2, z],
        [z, ih * q, z, ih * q * q, -h * h / 2 + 2 * ih * q * p],
        [-ih * q / 2, ih * p / 2, -ih * q * q, h * h / 4 * one, ih * p * p],
        [-ih * p, z, -h * h / 2 - 2 * ih * q * p, -ih * p * p, z],
    ]
    return np.array([[np.asarray(x, dtype=complex) for x in row] for row in rows])


def omega1_wigner(grid: PhaseGrid, hbar: float | None = None, convergence_tol: float = CONVERGENCE_TOL) -> HierarchyMatrix:
    r""":math:`\tilde\Omega^{(1)} = \int W (x x^T + C)` by quadrature, rows ``(q, p, q^2, qp, p^2)``."""
    h = grid.hbar if hbar is None else float(hbar)
    _require_normalized(grid)
    check_convergence(grid, 2, convergence_tol)
    Q, P = grid.mesh()
    funcs = [Q, P, Q * Q, Q * P, P * P]
    means = [grid.integrate(f) for f in funcs]
    x = [f - m for f, m in zip(funcs, means)]
    C = c_matrix(Q, P, h)
    out = np.zeros((5, 5), dtype=complex)
    for a in range(5):
        for b in range(a, 5):
            re = grid.integrate(x[a] * x[b] + C[a, b].real)
            im = grid.integrate(C[a, b].imag)
            out[a, b] = re + 1j * im
            out[b, a] = re - 1j * im
    v = out.real.copy()
    w = 2 * out.imag
    return HierarchyMatrix(2, v + 0.5j * w, v, w, tuple(hierarchy_indices(2)))


def grid_to_csv(grid: PhaseGrid, path) -> None:
    """Write ``q_min,q_max,p_min,p_max,n_q,n_p`` then one row per ``q``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([repr(grid.q_min), repr(grid.q_max), repr(grid.p_min), repr(grid.p_max), grid.n_q, grid.n_p])
        for row in grid.values:
            w.writerow([repr(float(x)) for x in row])


def grid_from_csv(path, hbar: float = 1.0) -> PhaseGrid:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    try:
        float(head[0])
    except ValueError:
        # a line of column names precedes the numeric header
        rows = rows[1:]
        head = rows[0]
    if len(head) != 6:
        raise InvalidArgumentError("CSV header must have 6 fields")
    q_min, q_max, p_min, p_max = (float(x) for x in head[:4])
    n_q, n_p = int(head[4]), int(head[5])
    vals = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    return PhaseGrid(q_min, q_max, p_min, p_max, n_q, n_p, vals, hbar)
