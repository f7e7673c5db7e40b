"""Declarative single-mode state specifications and validated density matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algebra import FockOperator, HbarConfig
from .errors import CutoffTooSmallError, InvalidArgumentError, InvalidStateError

STATE_TOL = 1e-8
MASS_LOSS_TOL = 1e-10
KINDS = ("fock", "coherent", "thermal", "squeezed_vacuum", "explicit")


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator (to ``STATE_TOL``)."""

    op: FockOperator
    hbar: HbarConfig = HbarConfig()

    def __post_init__(self):
        validate_density(self.op.entries)

    @property
    def cutoff(self) -> int:
        return self.op.cutoff

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    def support(self, tol: float = 1e-15) -> int:
        """One past the highest number state touched by a row or column."""
        mags = np.max(np.abs(self.matrix), axis=0)
        nz = np.nonzero(mags > tol)[0]
        return int(nz[-1]) + 1 if nz.size else 1

    def tail_mass(self, start: int) -> float:
        """Population of number states ``>= start``."""
        return float(np.sum(np.real(np.diag(self.matrix))[start:]))


def validate_density(rho: np.ndarray, tol: float = STATE_TOL) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("density matrix has non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm > tol:
        raise InvalidStateError(f"density matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise InvalidStateError(f"density matrix trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lo < -tol:
        raise InvalidStateError(f"density matrix has negative eigenvalue {lo:.3g}")


@dataclass(frozen=True)
class StateSpec:
    """One of the supported state families, plus ``hbar`` and Fock cutoff.

    ``squeezed_vacuum(r, phi)`` stretches the quadrature along angle ``phi/2``
    by ``e^r``: at ``phi = 0`` it equals the vacuum acted on by the canonical map
    ``diag(e^r, e^-r)``, so the position variance is ``hbar e^{2r} / 2``.
    """

    kind: str
    n: Optional[int] = None
    alpha: complex = 0j
    nbar: Optional[float] = None
    r: float = 0.0
    phi: float = 0.0
    matrix: Optional[np.ndarray] = None
    hbar: float = 1.0
    cutoff: int = 64

    def __post_init__(self):
        HbarConfig(self.hbar)
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown state kind {self.kind!r}; expected one of {KINDS}")
        if self.cutoff < 2:
            raise InvalidArgumentError("cutoff must be at least 2")
        if self.kind == "fock" and (self.n is None or int(self.n) != self.n or self.n < 0):
            raise InvalidArgumentError(f"fock state needs integer n >= 0, got {self.n!r}")
        if self.kind == "thermal" and (self.nbar is None or not self.nbar >= 0):
            raise InvalidArgumentError(f"thermal state needs nbar >= 0, got {self.nbar!r}")
        if self.kind == "squeezed_vacuum" and not math.isfinite(self.r):
            raise InvalidArgumentError("squeeze parameter must be finite")
        if self.kind == "explicit":
            if self.matrix is None:
                raise InvalidArgumentError("explicit state needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InvalidStateError("explicit matrix must be square")
            if m.shape[0] > self.cutoff:
                raise InvalidArgumentError(f"explicit matrix side {m.shape[0]} exceeds cutoff {self.cutoff}")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @classmethod
    def fock(cls, n: int, **kw) -> "StateSpec":
        return cls("fock", n=n, **kw)

    @classmethod
    def coherent(cls, alpha: complex, **kw) -> "StateSpec":
        return cls("coherent", alpha=complex(alpha), **kw)

    @classmethod
    def thermal(cls, nbar: float, **kw) -> "StateSpec":
        return cls("thermal", nbar=float(nbar), **kw)

    @classmethod
    def squeezed_vacuum(cls, r: float, phi: float = 0.0, **kw) -> "StateSpec":
        return cls("squeezed_vacuum", r=float(r), phi=float(phi), **kw)

    @classmethod
    def explicit(cls, matrix, **kw) -> "StateSpec":
        return cls("explicit", matrix=np.asarray(matrix, dtype=complex), **kw)

    def label(self) -> str:
        if self.kind == "fock":
            return f"fock({self.n})"
        if self.kind == "coherent":
            return f"coherent({self.alpha:.6g})"
        if self.kind == "thermal":
            return f"thermal({self.nbar:.6g})"
        if self.kind == "squeezed_vacuum":
            return f"squeezed_vacuum(r={self.r:.6g}, phi={self.phi:.6g})"
        return f"explicit({self.matrix.shape[0]}x{self.matrix.shape[0]})"


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    c = np.zeros(cutoff, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for k in range(1, cutoff):
        c[k] = c[k - 1] * alpha / math.sqrt(k)
    return c


def squeezed_amplitudes(r: float, phi: float, cutoff: int) -> np.ndarray:
    t = np.exp(1j * phi) * math.tanh(r)
    c = np.zeros(cutoff, dtype=complex)
    c[0] = 1 / math.sqrt(math.cosh(r))
    for k in range(2, cutoff, 2):
        c[k] = c[k - 2] * t * math.sqrt((k - 1) / k)
    return c


def thermal_populations(nbar: float, cutoff: int) -> np.ndarray:
    if nbar == 0:
        p = np.zeros(cutoff)
        p[0] = 1.0
        return p
    ratio = nbar / (nbar + 1)
    return ratio ** np.arange(cutoff) / (nbar + 1)


def _from_mass(rho: np.ndarray, spec: StateSpec) -> np.ndarray:
    mass = np.trace(rho).real
    if 1 - mass > MASS_LOSS_TOL:
        raise CutoffTooSmallError(
            f"{spec.label()} loses {1 - mass:.3g} of its norm at cutoff {spec.cutoff}"
        )
    return rho / mass


def density_from_spec(spec: StateSpec) -> DensityMatrix:
    """Build the normalized density matrix described by ``spec``."""
    N = spec.cutoff
    if spec.kind == "fock":
        if spec.n >= N:
            raise CutoffTooSmallError(f"fock({spec.n}) does not fit under cutoff {N}")
        rho = np.zeros((N, N), dtype=complex)
        rho[spec.n, spec.n] = 1.0
    elif spec.kind == "coherent":
        c = coherent_amplitudes(spec.alpha, N)
        rho = _from_mass(np.outer(c, c.conj()), spec)
    elif spec.kind == "thermal":
        rho = _from_mass(np.diag(thermal_populations(spec.nbar, N)).astype(complex), spec)
    elif spec.kind == "squeezed_vacuum":
        c = squeezed_amplitudes(spec.r, spec.phi, N)
        rho = _from_mass(np.outer(c, c.conj()), spec)
    else:
        m = spec.matrix
        tr = np.trace(m).real
        if abs(tr - 1) >= STATE_TOL:
            raise InvalidStateError(f"explicit matrix trace {tr!r} deviates from 1 by >= {STATE_TOL}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > STATE_TOL:
            raise InvalidStateError(f"explicit matrix is not Hermitian (deviation {herm:.3g})")
        m = (m + m.conj().T) / 2 / tr
        rho = np.zeros((N, N), dtype=complex)
        d = m.shape[0]
        rho[:d, :d] = m
    return DensityMatrix(FockOperator(rho, N - 1), HbarConfig(spec.hbar))


def random_mixed_state(dim: int, cutoff: int, rank: int | None = None, rng=None, hbar: float = 1.0) -> DensityMatrix:
    """Random density matrix supported on the lowest ``dim`` number states."""
    rng = np.random.default_rng(rng)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[:dim, :dim] = m
    return DensityMatrix(FockOperator(rho, cutoff - 1), HbarConfig(hbar))


def random_pure_state(dim: int, cutoff: int, rng=None, hbar: float = 1.0) -> DensityMatrix:
    return random_mixed_state(dim, cutoff, rank=1, rng=rng, hbar=hbar)
