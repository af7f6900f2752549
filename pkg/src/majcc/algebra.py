"""Exact symbolic algebra of Majorana monomials.

A monomial is a scalar i^k times an ascending-ordered product of Majorana
mode operators c_{m1} c_{m2} ... (m1 < m2 < ...).  Because c_i^2 = 1 and
{c_i, c_j} = 2*delta_ij, any product of mode operators reduces to a unique
canonical form of this shape.  Phases are tracked mod 4 (scalars +-1, +-i);
no other coefficients occur anywhere in this package.

Also provides GF(2) linear algebra over mode supports, used to count
independent stabilizer generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass(frozen=True)
class MajoranaMonomial:
    """A signed product of Majorana operators: i^phase * prod_{m in support} c_m.

    ``support`` is a frozenset of mode indices and ``phase`` an exponent of i,
    stored mod 4.  Equality of two monomials is field equality, which is
    exactly operator equality thanks to the canonical ascending order.
    """

    support: frozenset[int] = field(default_factory=frozenset)
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "support", frozenset(self.support))
        object.__setattr__(self, "phase", self.phase % 4)
        if any(m < 0 for m in self.support):
            raise ValueError("mode indices must be >= 0")

    @property
    def weight(self) -> int:
        return len(self.support)

    def is_identity(self) -> bool:
        return not self.support and self.phase == 0

    def scalar(self) -> complex:
        """The scalar i^phase in front of the ordered product."""
        return 1j ** self.phase

    def __repr__(self):
        pre = {0: "+", 1: "+i ", 2: "-", 3: "-i "}[self.phase]
        body = " ".join(f"c{m}" for m in sorted(self.support)) or "1"
        return f"{pre}{body}"


def monomial(modes: Iterable[int], phase: int = 0) -> MajoranaMonomial:
    return MajoranaMonomial(frozenset(modes), phase)


IDENTITY = MajoranaMonomial()


def _inversions(a_sorted: Sequence[int], b_sorted: Sequence[int]) -> int:
    """Number of pairs (x in a, y in b) with y < x.

    This is the number of anticommutation swaps needed to interleave the
    ascending product over ``a`` with the ascending product over ``b`` into
    one ascending product (equal indices end up adjacent and are not
    counted: c_m c_m cancels without a swap).
    """
    count = 0
    j = 0
    nb = len(b_sorted)
    for x in a_sorted:
        while j < nb and b_sorted[j] < x:
            j += 1
        count += j
    return count


def mono_mul(a: MajoranaMonomial, b: MajoranaMonomial) -> MajoranaMonomial:
    """Canonical form of the operator product a * b.

    The phase accounts for every anticommutation swap needed to reach
    ascending order and for c_m^2 = 1 eliminations.
    """
    sa = sorted(a.support)
    sb = sorted(b.support)
    swaps = _inversions(sa, sb)
    support = a.support ^ b.support
    phase = (a.phase + b.phase + 2 * swaps) % 4
    return MajoranaMonomial(support, phase)


def mono_pow_is_plus_one(a: MajoranaMonomial) -> bool:
    """True iff a * a is exactly +1."""
    return mono_mul(a, a) == IDENTITY


def adjoint(a: MajoranaMonomial) -> MajoranaMonomial:
    """Hermitian adjoint: reverse the product and conjugate the scalar."""
    w = a.weight
    # Reversing an ascending product of w distinct anticommuting factors
    # costs w(w-1)/2 swaps; conjugating i^k gives i^{-k}.
    phase = (-a.phase + 2 * (w * (w - 1) // 2)) % 4
    return MajoranaMonomial(a.support, phase)


def is_hermitian(a: MajoranaMonomial) -> bool:
    return adjoint(a) == a


def hermitian_phase(support: Iterable[int]) -> int:
    """Phase exponent k making i^k * (ascending product over support) Hermitian.

    Follows the stabilizer convention k = |support| / 2 mod 4, which also
    guarantees the resulting monomial squares to +1.  Odd supports are
    rejected: an odd product changes fermion parity and cannot appear as a
    stabilizer.
    """
    modes = frozenset(support)
    if len(modes) % 2 != 0:
        raise ValueError(f"odd support of size {len(modes)} has no Hermitian stabilizer phase")
    return (len(modes) // 2) % 4


def hermitian_monomial(support: Iterable[int]) -> MajoranaMonomial:
    modes = frozenset(support)
    return MajoranaMonomial(modes, hermitian_phase(modes))


def commutes(a: MajoranaMonomial, b: MajoranaMonomial) -> bool:
    """True iff a*b == b*a.

    Moving b through a costs |a||b| - |a & b| anticommutations, so the two
    orders agree exactly when that count is even.  For two even-weight
    monomials this reduces to an even overlap.
    """
    sign = a.weight * b.weight - len(a.support & b.support)
    return sign % 2 == 0


class SupportMatrix:
    """Rows of mode-index sets read as GF(2) vectors over a fixed mode universe."""

    def __init__(self, rows: Iterable[Iterable[int]]):
        self.rows: list[frozenset[int]] = [frozenset(r) for r in rows]

    def bit_rows(self) -> list[int]:
        return [sum(1 << m for m in row) for row in self.rows]


def _gf2_pivots(bit_rows: Iterable[int]) -> dict[int, int]:
    """Row-reduce integer bitmasks; returns {leading bit: pivot row}."""
    pivots: dict[int, int] = {}
    for row in bit_rows:
        row = _gf2_reduce(row, pivots)
        if row:
            pivots[row.bit_length() - 1] = row
    return pivots


def _gf2_reduce(vec: int, pivots: dict[int, int]) -> int:
    while vec:
        lead = vec.bit_length() - 1
        if lead not in pivots:
            break
        vec ^= pivots[lead]
    return vec


def gf2_rank(m: SupportMatrix) -> int:
    """GF(2) rank by elimination on integer bitmasks."""
    return len(_gf2_pivots(m.bit_rows()))


def gf2_in_span(m: SupportMatrix, target: Iterable[int]) -> bool:
    """True iff the GF(2) vector of ``target`` lies in the row span of ``m``."""
    vec = sum(1 << i for i in frozenset(target))
    return _gf2_reduce(vec, _gf2_pivots(m.bit_rows())) == 0
