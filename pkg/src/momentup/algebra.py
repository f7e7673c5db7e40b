r"""Truncated Fock-space operators and the Weyl-ordered monomial algebra.

Half-integer quantum numbers are stored doubled (``two_j``, ``two_m``) so that
all index arithmetic stays in the integers.  The monomial :math:`T_{jm}` is
the Weyl-symmetrised operator counterpart of :math:`q^{j+m} p^{j-m}`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np

from .errors import InvalidArgumentError


def to_doubled(x) -> int:
    """Convert a (half-)integer given as int, float, str or Fraction to ``2x``."""
    try:
        f = Fraction(x)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{x!r} is not a half-integer") from exc
    two = 2 * f
    if two.denominator != 1:
        raise InvalidArgumentError(f"{x!r} is not a half-integer")
    return int(two)


def format_half(two_x: int) -> str:
    return str(two_x // 2) if two_x % 2 == 0 else f"{two_x}/2"


@dataclass(frozen=True)
class HbarConfig:
    """Scale of the canonical commutator ``[q, p] = i hbar``."""

    hbar: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise InvalidArgumentError(f"hbar must be positive, got {self.hbar}")


@dataclass(frozen=True, order=True)
class MonomialIndex:
    """The label ``(j, m)`` of the monomial :math:`T_{jm}`, stored doubled."""

    two_j: int
    two_m: int

    def __post_init__(self):
        if self.two_j < 0 or abs(self.two_m) > self.two_j or (self.two_j - self.two_m) % 2:
            raise InvalidArgumentError(
                f"invalid monomial index two_j={self.two_j}, two_m={self.two_m}"
            )

    @classmethod
    def of(cls, j, m) -> "MonomialIndex":
        """Build from ordinary (half-)integers, e.g. ``MonomialIndex.of(1.5, -0.5)``."""
        return cls(to_doubled(j), to_doubled(m))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def m(self) -> float:
        return self.two_m / 2

    @property
    def q_power(self) -> int:
        return (self.two_j + self.two_m) // 2

    @property
    def p_power(self) -> int:
        return (self.two_j - self.two_m) // 2

    def __str__(self) -> str:
        return f"({format_half(self.two_j)},{format_half(self.two_m)})"


def multiplet(two_j: int) -> list[MonomialIndex]:
    """All indices of one ``j`` in descending ``m``."""
    return [MonomialIndex(two_j, two_m) for two_m in range(two_j, -two_j - 1, -2)]


def hierarchy_indices(two_J: int) -> list[MonomialIndex]:
    """Row ordering of the hierarchy matrix: ``j = 1/2..J`` ascending, ``m`` descending."""
    out = []
    for two_j in range(1, two_J + 1):
        out.extend(multiplet(two_j))
    return out


def all_indices(two_j_max: int) -> Iterator[MonomialIndex]:
    """Every valid index with ``j <= j_max``, including ``(0, 0)``."""
    for two_j in range(0, two_j_max + 1):
        yield from multiplet(two_j)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense operator in the number basis ``|0>, ..., |cutoff-1>``.

    ``bandwidth`` is a guaranteed bound: entries with ``|row - col| > bandwidth``
    are exactly zero.
    """

    entries: np.ndarray
    bandwidth: int

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgumentError("FockOperator entries must be a square matrix")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0]

    def measured_bandwidth(self) -> int:
        """Largest ``|row - col|`` carrying a nonzero entry (scan)."""
        rows, cols = np.nonzero(self.entries)
        if rows.size == 0:
            return 0
        return int(np.max(np.abs(rows - cols)))

    def respects_bandwidth(self) -> bool:
        return self.measured_bandwidth() <= self.bandwidth

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.entries @ other.entries, self.bandwidth + other.bandwidth)

    def dag(self) -> "FockOperator":
        return FockOperator(self.entries.conj().T, self.bandwidth)


def _hbar_value(hbar) -> float:
    return hbar.hbar if isinstance(hbar, HbarConfig) else HbarConfig(float(hbar)).hbar


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1)


def make_quadratures(cutoff: int, hbar: HbarConfig | float = 1.0) -> tuple[FockOperator, FockOperator]:
    r"""Position and momentum in the truncated number basis.

    Inverts :math:`a = (q + i p)/\sqrt{2\hbar}`.  The truncation spoils the
    commutator in the last diagonal entry only:
    ``(QP - PQ)[N-1, N-1] = -i hbar (N - 1)``.
    """
    if cutoff < 2:
        raise InvalidArgumentError(f"cutoff must be at least 2, got {cutoff}")
    h = _hbar_value(hbar)
    a = annihilation(cutoff)
    ad = a.T
    s = math.sqrt(h / 2)
    return FockOperator(s * (a + ad), 1), FockOperator(1j * s * (ad - a), 1)


@lru_cache(maxsize=512)
def _weyl_entries(two_j: int, two_m: int, cutoff: int, hbar: float) -> np.ndarray:
    q, p = make_quadratures(cutoff, hbar)
    Q, P = q.entries, p.entries
    nq = (two_j + two_m) // 2
    np_ = (two_j - two_m) // 2
    # words[a][b]: sum of all words with a factors Q and b factors P
    words = [[None] * (np_ + 1) for _ in range(nq + 1)]
    words[0][0] = np.eye(cutoff, dtype=complex)
    for a in range(nq + 1):
        for b in range(np_ + 1):
            if a == 0 and b == 0:
                continue
            acc = np.zeros((cutoff, cutoff), dtype=complex)
            if a > 0:
                acc += Q @ words[a - 1][b]
            if b > 0:
                acc += P @ words[a][b - 1]
            words[a][b] = acc
    out = words[nq][np_] / math.comb(nq + np_, nq)
    # Hermitian in exact arithmetic; make it bitwise so
    out = (out + out.conj().T) / 2
    out.setflags(write=False)
    return out


def weyl_monomial(idx: MonomialIndex, cutoff: int, hbar: HbarConfig | float = 1.0) -> FockOperator:
    """Weyl-ordered monomial ``T_jm``: the average over all orderings of the word
    with ``j+m`` factors of Q and ``j-m`` factors of P.

    Only the block ``[0, cutoff - 2j)`` squared is free of truncation error.
    """
    if cutoff < idx.two_j + 2:
        raise InvalidArgumentError(
            f"cutoff {cutoff} too small for monomial {idx} (need >= {idx.two_j + 2})"
        )
    return FockOperator(_weyl_entries(idx.two_j, idx.two_m, cutoff, _hbar_value(hbar)), idx.two_j)


# ---------------------------------------------------------------------------
# Clebsch-Gordan coefficients


def _fact(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=None)
def cg_squared_signed(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int) -> Fraction:
    """Exact ``sign(C) * C**2`` for doubled arguments (Racah closed form)."""
    tM = tm1 + tm2
    if (
        tj1 < 0 or tj2 < 0 or tJ < 0
        or abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ
        or (tj1 - tm1) % 2 or (tj2 - tm2) % 2 or (tJ - tM) % 2
        or tJ < abs(tj1 - tj2) or tJ > tj1 + tj2 or (tj1 + tj2 - tJ) % 2
    ):
        return Fraction(0)
    # all of these are integers once the selection rules hold
    a = (tJ + tj1 - tj2) // 2
    b = (tJ - tj1 + tj2) // 2
    c = (tj1 + tj2 - tJ) // 2
    d = (tj1 + tj2 + tJ) // 2 + 1
    pref = Fraction((tJ + 1) * _fact(a) * _fact(b) * _fact(c), _fact(d))
    pref *= (
        _fact((tJ + tM) // 2) * _fact((tJ - tM) // 2)
        * _fact((tj1 - tm1) // 2) * _fact((tj1 + tm1) // 2)
        * _fact((tj2 - tm2) // 2) * _fact((tj2 + tm2) // 2)
    )
    s = Fraction(0)
    for k in range(0, c + 1):
        dens = (
            c - k,
            (tj1 - tm1) // 2 - k,
            (tj2 + tm2) // 2 - k,
            (tJ - tj2 + tm1) // 2 + k,
            (tJ - tj1 - tm2) // 2 + k,
        )
        if min(dens) < 0:
            continue
        den = _fact(k)
        for x in dens:
            den *= _fact(x)
        s += Fraction((-1) ** k, den)
    sq = pref * s * s
    return sq if s >= 0 else -sq


def _signed_sqrt(x: Fraction) -> float:
    mag = math.sqrt(abs(x.numerator)) / math.sqrt(x.denominator)
    return mag if x >= 0 else -mag


def clebsch_gordan(j1, m1, j2, m2, J) -> float:
    """Condon-Shortley coefficient ``<j1 m1; j2 m2 | J, m1+m2>``.

    Arguments are ordinary (half-)integers.  Selection-rule violations give 0.
    """
    return _signed_sqrt(
        cg_squared_signed(to_doubled(j1), to_doubled(m1), to_doubled(j2), to_doubled(m2), to_doubled(J))
    )


def clebsch_gordan_doubled(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int) -> float:
    return _signed_sqrt(cg_squared_signed(tj1, tm1, tj2, tm2, tJ))


# ---------------------------------------------------------------------------
# Product rule


@dataclass(frozen=True)
class PolynomialExpansion:
    """Linear combination of monomials ``sum_k c_k T_k`` (no zero coefficients)."""

    terms: Mapping[MonomialIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {k: complex(v) for k, v in self.terms.items() if v != 0}
        for k in clean:
            if not isinstance(k, MonomialIndex):
                raise InvalidArgumentError(f"expansion key {k!r} is not a MonomialIndex")
        object.__setattr__(self, "terms", dict(sorted(clean.items(), reverse=True)))

    def __getitem__(self, idx: MonomialIndex) -> complex:
        return self.terms.get(idx, 0j)

    def to_matrix(self, cutoff: int, hbar: HbarConfig | float = 1.0) -> FockOperator:
        out = np.zeros((cutoff, cutoff), dtype=complex)
        band = 0
        for idx, c in self.terms.items():
            out += c * weyl_monomial(idx, cutoff, hbar).entries
            band = max(band, idx.two_j)
        return FockOperator(out, band)


def _norm_factor(idx: MonomialIndex) -> int:
    return _fact(idx.q_power) * _fact(idx.p_power)


@lru_cache(maxsize=None)
def _product_terms(a: MonomialIndex, b: MonomialIndex, hbar: float) -> tuple:
    tj, tjp = a.two_j, b.two_j
    tM = a.two_m + b.two_m
    out = []
    for tjpp in range(abs(tj - tjp), tj + tjp + 1, 2):
        if abs(tM) > tjpp:
            continue
        k = (tj + tjp - tjpp) // 2
        # sqrt((j+j'+j''+1)! / ((2j''+1)(j+j'-j'')!(j'+j''-j)!(j''+j-j')!))
        radicand = Fraction(
            _fact((tj + tjp + tjpp) // 2 + 1),
            (tjpp + 1) * _fact(k) * _fact((tjp + tjpp - tj) // 2) * _fact((tjpp + tj - tjp) // 2),
        )
        target = MonomialIndex(tjpp, tM)
        # tau -> T rescaling
        radicand *= Fraction(_norm_factor(a) * _norm_factor(b), _norm_factor(target))
        cg = cg_squared_signed(tj, a.two_m, tjp, b.two_m, tjpp)
        if cg == 0:
            continue
        mag = _signed_sqrt(radicand * cg)
        out.append((target, (0.5j * hbar) ** k * mag))
    return tuple(out)


def tau_product_expansion(a: MonomialIndex, b: MonomialIndex, hbar: HbarConfig | float = 1.0) -> PolynomialExpansion:
    """Expand ``T_a T_b`` over monomials ``T_{j'', m_a + m_b}``.

    Terms with ``j + j' - j''`` even have real coefficients, odd ones pure
    imaginary coefficients.
    """
    return PolynomialExpansion(dict(_product_terms(a, b, _hbar_value(hbar))))
