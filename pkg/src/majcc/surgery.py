"""Symbolic verification of lattice-surgery operator identities.

Merged layouts are built with the same corner-frame machinery as single
patches.  For the type-I measurement two triangles face each other with
their red-deficient legs across an ancilla strip of width ~d; the strip's
lower boundary follows the two hypotenuse extensions down to a corner where
the meeting vertex is omitted (keeping all plaquettes even).  The merged
domain is then simply {u >= -c, v >= 0, u + v <= d - 1}, which is invariant
under the mirror that swaps the two patches.

The bar pattern is forced by the requirement that every ancilla stabilizer
of the outcome-carrying color's complement be a product of bars and
pre-merge stabilizers: each strip blue square contributes its two
corner pairs that lie inside faces of the non-outcome colors, and bare
ancilla modes pair up inside those faces along the boundary.  Orientations
(the initialization sign of each bar) are solved over GF(2); the one global
sign left free is fixed by the product identity itself.

All identity checks are exact monomial computations; no tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .algebra import (
    IDENTITY,
    MajoranaMonomial,
    commutes,
    hermitian_monomial,
    mono_mul,
    monomial,
)
from .code import (
    BLUE,
    GREEN,
    RED,
    CheckResult,
    CodeLayout,
    Lattice,
    ValidationReport,
)

TYPE_I = "type-I"
TYPE_II = "type-II"
PARITY_PROJECTION = "parity-projection"


@dataclass
class MergedLayout:
    merge_type: str
    d: int
    separation: int
    lattice: Lattice
    patch_modes: list[frozenset[int]]      # modes of each logical patch
    ancilla_modes: frozenset[int]
    outcome_color: str                     # color whose product carries i a b
    color_of: dict                         # face color names (possibly dualized)

    @property
    def plaquettes(self):
        return self.lattice.plaquettes

    def stabilizer(self, pl) -> MajoranaMonomial:
        return hermitian_monomial(pl.support)

    def logicals(self) -> list[MajoranaMonomial]:
        out = []
        for modes in self.patch_modes:
            if len(modes) % 4 != 1:
                raise ValueError("patch mode count must be 1 mod 4")
            out.append(MajoranaMonomial(modes, 0))
        return out


@dataclass(frozen=True)
class Bar:
    """An oriented ancilla pair: the operator sign * i c_i c_j."""

    modes: tuple[int, int]
    sign: int = 1  # +1 or -1

    def monomial(self) -> MajoranaMonomial:
        i, j = self.modes
        base = monomial([i, j], 1)  # i c_i c_j with i < j
        if self.sign < 0:
            return MajoranaMonomial(base.support, (base.phase + 2) % 4)
        return base


@dataclass
class BarPattern:
    bars: list[Bar]
    boundary_bars: list[int] = field(default_factory=list)  # indices into bars

    def product(self) -> MajoranaMonomial:
        out = IDENTITY
        for bar in self.bars:
            out = mono_mul(out, bar.monomial())
        return out

    def boundary_product(self) -> MajoranaMonomial:
        out = IDENTITY
        for k in self.boundary_bars:
            out = mono_mul(out, self.bars[k].monomial())
        return out

    def covered_modes(self) -> frozenset[int]:
        return frozenset(m for bar in self.bars for m in bar.modes)


# -- Merged-lattice construction -----------------------------------------------


def _triangle_points(d: int):
    squares = [(u0, v0) for v0 in range(1, d) for u0 in range(v0, d - v0)]
    bares = [(s, 0) for s in range(d)]
    faces = [(p, q) for q in range(0, d - 1) for p in range(q, d - 1 - q)]
    return squares, bares, faces


def build_merge(a: CodeLayout, b: CodeLayout, merge_type: str,
                separation: Optional[int] = None) -> MergedLayout:
    """Merge two (or, for the parity projection, four) patches with ancillas.

    ``a`` and ``b`` fix the patch size; both must share the same d.  The
    separation between the facing boundaries defaults to d (odd), matching
    the ~d spacing of the protocols.
    """
    if a.d != b.d:
        raise ValueError(f"patch sizes differ: {a.d} vs {b.d}")
    d = a.d
    c = separation if separation is not None else d
    if c % 2 == 0 or c < 3:
        raise ValueError("separation must be odd and >= 3 so boundary bars pair up")
    if merge_type in (TYPE_I, TYPE_II):
        return _merge_two(d, c, merge_type)
    if merge_type == PARITY_PROJECTION:
        return _merge_four(d, c)
    raise ValueError(f"unknown merge type {merge_type!r}")


def _merge_two(d: int, c: int, merge_type: str) -> MergedLayout:
    # Domain: u >= -c, v >= 0, u+v <= d-1; the corner vertex (-c, 0) where
    # the two hypotenuse lines meet is omitted.
    squares = [(u0, v0)
               for v0 in range(1, d + c - 1)
               for u0 in range(-c + 1, d - v0)]
    bares = ([(m, 0) for m in range(-c + 1, d)]
             + [(-c, t) for t in range(1, d + c)])
    faces = [(p, q)
             for q in range(0, d + c - 1)
             for p in range(-c, d - 1 - q)]
    lattice = Lattice(squares, bares, faces)

    def patch_a(uv_kind) -> bool:
        kind, pt = uv_kind
        if kind == "square":
            return pt[1] <= pt[0]
        return pt[1] == 0 and pt[0] >= 0

    def patch_b(uv_kind) -> bool:
        kind, pt = uv_kind
        if kind == "square":
            return pt[1] >= pt[0] + 2 * c
        return pt[0] == -c and pt[1] >= c

    a_modes, b_modes, anc = set(), set(), set()
    for v in lattice.vertices:
        if v.kind == "bare":
            key = ("bare", v.home)
        else:
            key = ("square", v.home[:2])
        if patch_a(key):
            a_modes.add(v.id)
        elif patch_b(key):
            b_modes.add(v.id)
        else:
            anc.add(v.id)

    # Type-II is the color dual: the outcome rides on the green product and
    # the merged faces are recolored accordingly.
    if merge_type == TYPE_I:
        color_of = {pl.id: pl.color for pl in lattice.plaquettes}
        outcome = RED
    else:
        swap = {RED: GREEN, GREEN: RED, BLUE: BLUE}
        color_of = {pl.id: swap[pl.color] for pl in lattice.plaquettes}
        outcome = GREEN
    return MergedLayout(merge_type=merge_type, d=d, separation=c,
                        lattice=lattice,
                        patch_modes=[frozenset(a_modes), frozenset(b_modes)],
                        ancilla_modes=frozenset(anc),
                        outcome_color=outcome, color_of=color_of)


def _merge_four(d: int, c: int) -> MergedLayout:
    """Four-patch parity-projection merge: not constructible from the text.

    A four-fold arrangement with every red leg facing a shared ancilla
    region forces either ancilla plaquettes beneath some patch hypotenuse
    (odd plaquette overlaps) or a bare boundary chain terminating against a
    square corner (an odd-sized plaquette); resolving the corner structure
    requires the parity-projection figure's actual geometry, which the text
    does not specify.  The group-consistency content of the protocol's
    outcome table is checked by verify_parity_table_consistency instead.
    """
    raise NotImplementedError(
        "the four-patch parity-projection geometry is figure-dependent; "
        "see verify_parity_table_consistency for the checkable content")


# -- Pattern construction --------------------------------------------------------


class PatternSearchError(RuntimeError):
    pass


def construct_pattern(merged: MergedLayout) -> BarPattern:
    """Bar pattern forced by the determined-stabilizer conditions.

    Every ancilla blue square contributes the two corner pairs lying inside
    faces of the non-outcome octagon color; bare ancilla modes pair up along
    the boundary inside non-outcome faces.  Bar orientations are solved so
    that the product of the bars inside each determined stabilizer equals
    that stabilizer exactly (times the pre-merge stabilizers it restricts
    to); the final global degree of freedom is fixed by the outcome-color
    product identity.
    """
    lat = merged.lattice
    anc = merged.ancilla_modes
    det_color = {RED: GREEN, GREEN: RED}[merged.outcome_color]

    bars: list[tuple[int, int]] = []
    # blue-square bars: the corner pairs facing this square's det_color faces
    for pl in lat.plaquettes:
        if pl.kind != "square":
            continue
        if not set(pl.vertices) <= anc:
            continue
        u0, v0 = pl.grid
        complement = {("W", "S"): ("E", "N"), ("E", "N"): ("W", "S"),
                      ("E", "S"): ("W", "N"), ("W", "N"): ("E", "S")}
        name_pairs = []
        for (fp, fq), names in (((u0 - 1, v0 - 1), ("W", "S")),
                                ((u0, v0 - 1), ("E", "S")),
                                ((u0 - 1, v0), ("W", "N")),
                                ((u0, v0), ("E", "N"))):
            fid = lat.face_id(fp, fq)
            if fid is not None and merged.color_of[fid] == det_color:
                name_pairs.append(names)
        if len(name_pairs) == 1:
            # boundary square missing its second det_color face: the
            # complementary pair sits on no face and constrains nothing.
            name_pairs.append(complement[name_pairs[0]])
        elif not name_pairs:
            name_pairs = [("W", "S"), ("E", "N")]
        if len(name_pairs) != 2 or set(name_pairs[0]) & set(name_pairs[1]):
            raise PatternSearchError(
                f"ancilla square {pl.grid} has no valid bar pairing")
        bars.extend(tuple(sorted(lat.square_mode(u0, v0, n) for n in names))
                    for names in name_pairs)

    # bare-mode bars: pair adjacent bare ancilla modes inside det_color faces
    bare_anc = [v for v in lat.vertices if v.kind == "bare" and v.id in anc]
    used: set[int] = set()
    boundary_bars: list[tuple[int, int]] = []
    by_home = {v.home: v.id for v in lat.vertices if v.kind == "bare"}
    for v in bare_anc:
        if v.id in used:
            continue
        placed = False
        for fid in lat.incidence[v.id]:
            pl = lat.plaquettes[fid]
            if pl.kind != "face" or merged.color_of[fid] != det_color:
                continue
            partners = [m for m in pl.vertices
                        if m != v.id and m in anc and m not in used
                        and lat.vertices[m].kind == "bare"]
            if partners:
                pair = tuple(sorted((v.id, partners[0])))
                boundary_bars.append(pair)
                used.update(pair)
                placed = True
                break
        if not placed:
            raise PatternSearchError(
                f"bare ancilla mode {v.home} has no bar partner in a {det_color} face")
    bars.extend(boundary_bars)

    covered = {m for pair in bars for m in pair}
    if covered != set(anc):
        raise PatternSearchError(
            f"bars cover {len(covered)} of {len(anc)} ancilla modes")
    if len(covered) != 2 * len(bars):
        raise PatternSearchError("bars overlap")

    signs = _solve_orientations(merged, bars)
    pattern = BarPattern(
        bars=[Bar(modes=pair, sign=signs[i]) for i, pair in enumerate(bars)],
        boundary_bars=[len(bars) - len(boundary_bars) + i
                       for i in range(len(boundary_bars))])

    # Fix the leftover global sign with the product identity itself: the
    # initialization sign of one boundary bar is the free knob.
    report = _product_identity_residual(merged, pattern)
    if report == MajoranaMonomial(frozenset(), 2):
        k = pattern.boundary_bars[0]
        old = pattern.bars[k]
        pattern.bars[k] = Bar(modes=old.modes, sign=-old.sign)
    return pattern


def _determined_stabilizer_constraints(merged: MergedLayout, bars):
    """Yield (plaquette, bar indices inside it, pre-merge factor monomial)."""
    lat = merged.lattice
    anc = merged.ancilla_modes
    det_color = {RED: GREEN, GREEN: RED}[merged.outcome_color]
    bar_index = {pair: i for i, pair in enumerate(bars)}
    for pl in lat.plaquettes:
        color = BLUE if pl.kind == "square" else merged.color_of[pl.id]
        if color not in (BLUE, det_color):
            continue
        support = set(pl.vertices)
        anc_part = support & set(merged.ancilla_modes)
        if not anc_part:
            continue
        inside = []
        cover = set()
        for pair, idx in bar_index.items():
            if set(pair) <= support:
                inside.append(idx)
                cover.update(pair)
        if cover != anc_part:
            raise PatternSearchError(
                f"stabilizer {pl.grid} ({color}) ancilla part not covered by bars")
        rest = support - anc_part
        pre = hermitian_monomial(rest) if rest else IDENTITY
        yield pl, inside, pre


def _solve_orientations(merged: MergedLayout, bars) -> list[int]:
    """GF(2) solve: product of bars inside each determined stabilizer (times
    its pre-merge restriction) must equal the stabilizer with sign +1."""
    n = len(bars)
    rows = []
    for pl, inside, pre in _determined_stabilizer_constraints(merged, bars):
        target = merged.stabilizer(pl)
        prod = pre
        for idx in inside:
            prod = mono_mul(prod, Bar(modes=bars[idx]).monomial())
        if prod.support != target.support:
            raise PatternSearchError(f"support mismatch at {pl.grid}")
        phase_diff = (target.phase - prod.phase) % 4
        if phase_diff not in (0, 2):
            raise PatternSearchError(f"imaginary mismatch at {pl.grid}")
        rows.append((inside, 1 if phase_diff == 2 else 0))

    # Gaussian elimination over GF(2) on sparse rows.
    signs = [0] * n
    pivots: dict[int, tuple[set[int], int]] = {}
    for cols, rhs in rows:
        cols = set(cols)
        while cols:
            lead = max(cols)
            if lead not in pivots:
                pivots[lead] = (cols, rhs)
                break
            pcols, prhs = pivots[lead]
            cols = cols ^ pcols
            rhs ^= prhs
        else:
            if rhs:
                raise PatternSearchError("inconsistent orientation constraints")
    for lead in sorted(pivots):
        cols, rhs = pivots[lead]
        val = rhs
        for ccol in cols:
            if ccol != lead:
                val ^= signs[ccol]
        signs[lead] = val
    return [(-1) ** s for s in signs]


def _product_identity_residual(merged: MergedLayout, pattern: BarPattern) -> MajoranaMonomial:
    """(i a1 a2 ... Q_A)^-1 * Q_C for the outcome color C; identity if exact."""
    lat = merged.lattice
    q = IDENTITY
    for pl in lat.plaquettes:
        if pl.kind == "face" and merged.color_of[pl.id] == merged.outcome_color:
            q = mono_mul(q, merged.stabilizer(pl))
    rhs = MajoranaMonomial(frozenset(), 1)  # the explicit i
    for logical in merged.logicals():
        rhs = mono_mul(rhs, logical)
    rhs = mono_mul(rhs, pattern.product())
    return mono_mul(adjoint_inverse(rhs), q)


def adjoint_inverse(m: MajoranaMonomial) -> MajoranaMonomial:
    """Inverse of a monomial u with u^2 = +-1: u^-1 = u / u^2."""
    sq = mono_mul(m, m)
    inv = m
    if sq.phase == 2:
        inv = MajoranaMonomial(m.support, (m.phase + 2) % 4)
    return inv


# -- Verification ----------------------------------------------------------------


def verify_pattern(merged: MergedLayout, pattern: BarPattern) -> ValidationReport:
    """Exact checks of the surgery identities for a merged layout + pattern."""
    checks: list[CheckResult] = []
    lat = merged.lattice

    covered = pattern.covered_modes()
    checks.append(CheckResult("bars cover every ancilla mode exactly once",
                              covered == merged.ancilla_modes
                              and len(covered) == 2 * len(pattern.bars)))

    sizes_ok = all(pl.size in (4, 6, 8) for pl in lat.plaquettes)
    checks.append(CheckResult("merged plaquettes even-sized", sizes_ok))
    masks = [sum(1 << m for m in pl.vertices) for pl in lat.plaquettes]
    odd = 0
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            if (masks[i] & masks[j]).bit_count() % 2:
                odd += 1
    checks.append(CheckResult("merged plaquettes overlap evenly", odd == 0,
                              f"{odd} odd overlaps"))

    # (ii) determined stabilizers factor over bars and pre-merge stabilizers
    try:
        bad = []
        for pl, inside, pre in _determined_stabilizer_constraints(
                merged, [b.modes for b in pattern.bars]):
            prod = pre
            for idx in inside:
                prod = mono_mul(prod, pattern.bars[idx].monomial())
            if prod != merged.stabilizer(pl):
                bad.append(pl.grid)
        checks.append(CheckResult(
            "determined stabilizers = bars x pre-merge stabilizers",
            not bad, str(bad[:4])))
    except PatternSearchError as exc:
        checks.append(CheckResult(
            "determined stabilizers = bars x pre-merge stabilizers",
            False, str(exc)))

    # (i) product identity: Q_C = i * (logicals...) * Q_A, exact phases
    resid = _product_identity_residual(merged, pattern)
    label = {RED: "Q_R", GREEN: "Q_G"}[merged.outcome_color]
    names = " ".join(f"a{k+1}" for k in range(len(merged.patch_modes)))
    checks.append(CheckResult(
        f"{label} = i {names} Q_A exactly", resid == IDENTITY, repr(resid)))

    # support statement: for type-I the red product covers every mode
    if merged.merge_type == TYPE_I:
        q = IDENTITY
        for pl in lat.plaquettes:
            if pl.kind == "face" and merged.color_of[pl.id] == RED:
                q = mono_mul(q, merged.stabilizer(pl))
        checks.append(CheckResult(
            "Q_R support = all modes",
            q.support == frozenset(v.id for v in lat.vertices)))

    # (iii) conserved quantity: i * logicals * Q_b commutes with everything
    k = MajoranaMonomial(frozenset(), 1)
    for logical in merged.logicals():
        k = mono_mul(k, logical)
    k = mono_mul(k, pattern.boundary_product())
    bad_comm = [pl.grid for pl in lat.plaquettes
                if not commutes(k, merged.stabilizer(pl))]
    checks.append(CheckResult(
        "i (logicals) Q_b commutes with every merged stabilizer",
        not bad_comm, str(bad_comm[:4])))
    return ValidationReport(checks)


def restriction_report(merged: MergedLayout, patch: CodeLayout,
                       which: int) -> ValidationReport:
    """Merged plaquettes restricted to one patch reproduce its stabilizers."""
    lat = merged.lattice
    modes = merged.patch_modes[which]
    # map patch-local homes to merged ids
    if which == 0 or merged.merge_type != TYPE_I:
        # patch 0 shares coordinates with the standalone triangle
        home_map = {}
        for v in lat.vertices:
            home_map[(v.kind, v.home)] = v.id
        patch_supports = set()
        ok = True
        for pl in patch.plaquettes:
            sup = []
            for m in pl.vertices:
                pv = patch.vertices[m]
                key = (pv.kind, pv.home)
                if key not in home_map:
                    ok = False
                    break
                sup.append(home_map[key])
            patch_supports.add(frozenset(sup))
        merged_restrictions = set()
        for mpl in lat.plaquettes:
            inter = frozenset(mpl.vertices) & modes
            if inter:
                merged_restrictions.add(inter)
        missing = patch_supports - merged_restrictions
        return ValidationReport([
            CheckResult("patch coordinates embed in merge", ok),
            CheckResult("restrictions reproduce the patch stabilizers",
                        not missing, f"{len(missing)} missing")])
    raise ValueError("restriction check is exposed for patch 0")


def verify_logical_phase(layout: CodeLayout) -> ValidationReport:
    """The chain of single-mode phase operations equals the logical phase.

    Compares flip frames: for any test operator X, applying [c_i] for every
    mode flips X exactly when an odd number of the c_i anticommute with X;
    the logical [c-bar] must produce the same flip for every X, checked on
    all stabilizers, on an adjoined external mode, and on random monomials.
    """
    import random

    checks = []
    cbar = MajoranaMonomial(layout.logical_support, 0)
    n = layout.n_modes
    ext = n  # an external Majorana mode outside the patch

    def chain_flips(x: MajoranaMonomial) -> bool:
        flips = 0
        for m in range(n):
            if not commutes(monomial([m]), x):
                flips ^= 1
        return bool(flips)

    bad = [pl.id for pl in layout.plaquettes
           if chain_flips(layout.stabilizer(pl)) or
           not commutes(cbar, layout.stabilizer(pl))]
    checks.append(CheckResult("stabilizers unflipped by the phase chain",
                              not bad, str(bad[:4])))

    rng = random.Random(21)
    mismatch = []
    for _ in range(200):
        support = set(rng.sample(range(n), rng.randrange(0, 5)))
        if rng.random() < 0.7:
            support.add(ext)
        x = monomial(support)
        if chain_flips(x) != (not commutes(cbar, x)):
            mismatch.append(sorted(support))
    checks.append(CheckResult("flip frame of the chain = flip frame of [c-bar]",
                              not mismatch, str(mismatch[:3])))

    checks.append(CheckResult("external mode anticommutes with the logical",
                              not commutes(cbar, monomial([ext]))))
    checks.append(CheckResult("odd logical support (single ancilla suffices)",
                              len(cbar.support) % 2 == 1))
    return ValidationReport(checks)


# -- Table I right half: group-consistency check ---------------------------------

PARITY_TABLE = {
    (+1, +1, +1, +1): (),
    (-1, -1, +1, +1): ("a", "d"),
    (+1, -1, -1, +1): ("d",),
    (+1, +1, -1, -1): ("a", "b"),
    (-1, +1, +1, -1): ("b",),
    (-1, +1, -1, +1): ("a",),
    (+1, -1, +1, -1): ("c",),
    (-1, -1, -1, -1): ("a", "c"),
}


def verify_parity_table_consistency() -> ValidationReport:
    """The eta -> correction table is a group homomorphism mod [abcd].

    Without the figure's exact bar geometry the right half of the outcome
    table can only be checked for internal consistency: valid patterns form
    the even subgroup, the correction map is linear modulo the measured
    parity a b c d, and C and C[abcd] act identically.
    """
    checks = []
    rows = list(PARITY_TABLE.items())
    ok_parity = all(e[0] * e[1] * e[2] * e[3] == +1 for e, _ in rows)
    checks.append(CheckResult("listed outcomes have eta product +1", ok_parity))

    def combine(c1, c2):
        out = set(c1) ^ set(c2)
        if out >= {"a", "b", "c", "d"}:
            out ^= {"a", "b", "c", "d"}
        return out

    linear = True
    for e1, c1 in rows:
        for e2, c2 in rows:
            e3 = tuple(a * b for a, b in zip(e1, e2))
            c3 = set(PARITY_TABLE[e3])
            got = combine(c1, c2)
            if got != c3 and got ^ {"a", "b", "c", "d"} != c3:
                linear = False
    checks.append(CheckResult("correction map linear modulo [abcd]", linear))
    return ValidationReport(checks)
