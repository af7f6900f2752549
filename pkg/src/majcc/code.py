"""Triangular (4,8^2) Majorana color code: construction, validation, unfolding.

Geometry lives in an integer "corner frame" (u, v) obtained by rotating the
drawing plane 45 degrees: x = (u - v)/2, y = (u + v)/2.  In that frame the
patch is the domain {v >= 0, v <= u, u + v <= d - 1}:

* the hypotenuse is the line v = 0 and carries d bare Majorana modes at
  (s, 0), s = 0..d-1 (these sit on no blue square);
* blue squares sit at integer points (u0, v0) with 1 <= v0 <= u0 and
  u0 + v0 <= d - 1, each carrying four modes at (u0 +- h, v0), (u0, v0 +- h);
* octagon-class plaquettes sit at faces (p + 1/2, q + 1/2) with
  0 <= q <= p and p + q <= d - 2, red when p + q is odd, green when even.

A face collects, from each of its four corner points, either one bare
hypotenuse mode (corner on v = 0), the two facing modes of a blue square,
or nothing (corner outside the domain).  Bulk faces are octagons; faces
along the boundary degenerate to 6 or 4 modes, which is why the schedule
must support 4-, 6- and 8-mode stabilizer measurements.

Unfolding reflects the green faces through the hypotenuse, turning the
two-mode errors that are invisible to blue squares into the edges of a
square matching lattice; the two edges living on one blue square are
"images" of each other and jointly cost two, not four, single-mode errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import atan2
from typing import Iterable, Optional

from .algebra import (
    MajoranaMonomial,
    SupportMatrix,
    commutes,
    gf2_rank,
    hermitian_monomial,
    mono_mul,
)

RED = "red"
GREEN = "green"
BLUE = "blue"

# Corner roles of a face at (p + 1/2, q + 1/2), with the two square modes
# the face receives from each corner.
_CORNER_MODES = {
    "SW": ("E", "N"),
    "SE": ("W", "N"),
    "NW": ("E", "S"),
    "NE": ("W", "S"),
}
_CORNER_OFFSETS = {"SW": (0, 0), "SE": (1, 0), "NW": (0, 1), "NE": (1, 1)}

# Mode positions on a blue square at (u0, v0), in quarter-integer (u, v) units.
_SQUARE_MODE_OFFSETS = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}


@dataclass(frozen=True)
class Vertex:
    id: int
    x: Fraction
    y: Fraction
    kind: str  # "square" or "bare"
    home: tuple  # square center (u, v) or bare-vertex (u, v)


@dataclass(frozen=True)
class Plaquette:
    id: int
    color: str
    vertices: tuple[int, ...]  # cyclic boundary order; index pairs (0,1),(2,3),.. share a corner
    center: tuple[Fraction, Fraction]
    kind: str  # "square" or "face"
    grid: tuple[int, int]  # (u0, v0) for squares, (p, q) for faces

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.vertices)


class Lattice:
    """A (4,8^2) patch over an arbitrary domain in the corner frame.

    The domain is supplied as three predicates so that lattice-surgery
    merges can reuse the same mode/plaquette assembly.
    """

    def __init__(self, square_points: Iterable[tuple[int, int]],
                 bare_points: Iterable[tuple[int, int]],
                 face_points: Iterable[tuple[int, int]]):
        self.square_points = sorted(set(square_points))
        self.bare_points = sorted(set(bare_points))
        self.face_points = sorted(set(face_points))
        self._build()

    # -- assembly ---------------------------------------------------------

    def _build(self):
        self.vertices: list[Vertex] = []
        self._square_modes: dict[tuple[int, int], dict[str, int]] = {}
        self._bare_mode: dict[tuple[int, int], int] = {}

        positions: list[tuple[Fraction, Fraction, str, tuple]] = []
        for (u, v) in self.bare_points:
            positions.append((Fraction(u - v, 2), Fraction(u + v, 2), "bare", (u, v)))
        for (u0, v0) in self.square_points:
            for name, (du, dv) in _SQUARE_MODE_OFFSETS.items():
                uu = Fraction(4 * u0 + 2 * du, 4)
                vv = Fraction(4 * v0 + 2 * dv, 4)
                positions.append(((uu - vv) / 2, (uu + vv) / 2, "square", (u0, v0, name)))
        # Row-major ids from the lower-left corner of the drawing plane.
        positions.sort(key=lambda t: (t[1], t[0]))
        for i, (x, y, kind, home) in enumerate(positions):
            self.vertices.append(Vertex(i, x, y, kind, home))
            if kind == "bare":
                self._bare_mode[home] = i
            else:
                u0, v0, name = home
                self._square_modes.setdefault((u0, v0), {})[name] = i

        squares = set(self.square_points)
        bares = set(self.bare_points)
        plaquettes: list[Plaquette] = []

        for (u0, v0) in self.square_points:
            modes = self._square_modes[(u0, v0)]
            verts = tuple(modes[n] for n in ("E", "N", "W", "S"))
            plaquettes.append(Plaquette(
                id=-1, color=BLUE, vertices=verts,
                center=(Fraction(u0 - v0, 2), Fraction(u0 + v0, 2)),
                kind="square", grid=(u0, v0)))

        for (p, q) in self.face_points:
            groups: list[tuple[tuple, list[int]]] = []
            for corner, (du, dv) in _CORNER_OFFSETS.items():
                cu, cv = p + du, q + dv
                if (cu, cv) in bares:
                    groups.append((("bare", cu, cv), [self._bare_mode[(cu, cv)]]))
                elif (cu, cv) in squares:
                    names = _CORNER_MODES[corner]
                    sq = self._square_modes[(cu, cv)]
                    groups.append((("sq", cu, cv), [sq[names[0]], sq[names[1]]]))
            verts = self._cyclic_order(groups, Fraction(2 * p + 1, 2), Fraction(2 * q + 1, 2))
            color = RED if (p + q) % 2 else GREEN
            cx = Fraction(2 * p + 1 - 2 * q - 1, 4)
            cy = Fraction(2 * p + 1 + 2 * q + 1, 4)
            plaquettes.append(Plaquette(
                id=-1, color=color, vertices=verts,
                center=(cx, cy), kind="face", grid=(p, q)))

        # Stable ids: blue squares first, then faces, each sorted by center.
        def sort_key(pl: Plaquette):
            rank = 0 if pl.color == BLUE else 1
            return (rank, pl.center[1], pl.center[0])

        plaquettes.sort(key=sort_key)
        self.plaquettes = [
            Plaquette(i, pl.color, pl.vertices, pl.center, pl.kind, pl.grid)
            for i, pl in enumerate(plaquettes)
        ]
        self.incidence: dict[int, list[int]] = {v.id: [] for v in self.vertices}
        for pl in self.plaquettes:
            for m in pl.vertices:
                self.incidence[m].append(pl.id)
        self._plq_by_grid = {(pl.kind, pl.grid): pl.id for pl in self.plaquettes}

    def _cyclic_order(self, groups, cu, cv) -> tuple[int, ...]:
        """Order face modes around the face center, keeping corner pairs adjacent.

        Groups (one per occupied corner, plus bare modes) are sorted by the
        angle of their centroid; modes inside a two-mode group sort by their
        own angle.  Bare modes merge pairwise so that the 8-mode measurement
        circuit sees the two hypotenuse modes of a boundary face as one
        projection pair.
        """
        merged: list[list[int]] = []
        bare_pool: list[int] = []
        for key, modes in groups:
            if key[0] == "bare":
                bare_pool.extend(modes)
            else:
                merged.append(modes)
        if bare_pool:
            assert len(bare_pool) == 2, "faces carry at most two bare modes"
            merged.append(bare_pool)

        def frame_angle(m: int) -> float:
            vert = self.vertices[m]
            uu = vert.x + vert.y   # back to corner frame: u = x + y
            vv = vert.y - vert.x   # v = y - x
            return atan2(float(vv - cv), float(uu - cu))

        for g in merged:
            g.sort(key=frame_angle)
        merged.sort(key=lambda g: atan2(
            float(sum((self.vertices[m].y - self.vertices[m].x) for m in g) / len(g) - cv),
            float(sum((self.vertices[m].x + self.vertices[m].y) for m in g) / len(g) - cu)))
        # Faces carrying bare (hypotenuse) modes are 4- or 6-mode.  In the
        # 6-mode measurement circuit the outcome-dependent corrections hit
        # the first and third projection pairs (the second is only ever hit
        # jointly with the face stabilizer), so the bare pair is rotated
        # into the middle slot to keep miscorrections off the fragile
        # single-mode-error channels.
        if bare_pool and len(merged) == 3:
            while merged[1][0] not in bare_pool:
                merged = merged[1:] + merged[:1]
        out: list[int] = []
        for g in merged:
            out.extend(g)
        return tuple(out)

    # -- lookups ----------------------------------------------------------

    def face_id(self, p: int, q: int) -> Optional[int]:
        return self._plq_by_grid.get(("face", (p, q)))

    def square_id(self, u0: int, v0: int) -> Optional[int]:
        return self._plq_by_grid.get(("square", (u0, v0)))

    def square_mode(self, u0: int, v0: int, name: str) -> int:
        return self._square_modes[(u0, v0)][name]

    def bare_mode(self, u: int, v: int) -> int:
        return self._bare_mode[(u, v)]


@dataclass
class CodeLayout:
    """Vertices, colored plaquettes and logical support of one triangle."""

    d: int
    lattice: Lattice = field(repr=False)

    @property
    def vertices(self) -> list[Vertex]:
        return self.lattice.vertices

    @property
    def plaquettes(self) -> list[Plaquette]:
        return self.lattice.plaquettes

    @property
    def n_modes(self) -> int:
        return len(self.lattice.vertices)

    @property
    def logical_support(self) -> frozenset[int]:
        return frozenset(v.id for v in self.lattice.vertices)

    def stabilizer(self, plq: Plaquette) -> MajoranaMonomial:
        return hermitian_monomial(plq.support)

    def by_color(self, color: str) -> list[Plaquette]:
        return [pl for pl in self.plaquettes if pl.color == color]

    def plaquettes_containing(self, mode: int) -> list[int]:
        return self.lattice.incidence[mode]

    # Serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "vertices": [
                {"id": v.id, "x": float(v.x), "y": float(v.y)} for v in self.vertices
            ],
            "plaquettes": [
                {"id": pl.id, "color": pl.color, "vertices": list(pl.vertices)}
                for pl in self.plaquettes
            ],
            "logical_support": sorted(self.logical_support),
        }

    def save(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)


def build_code(d: int) -> CodeLayout:
    """Construct the triangular (4,8^2) code of side length d.

    Only d >= 5 with d = 1 (mod 4) is supported; that is the family whose
    threshold behaviour this package reproduces.
    """
    if not isinstance(d, int) or d < 5:
        raise ValueError(f"side length must be an integer >= 5, got {d!r}")
    if d % 2 == 0:
        raise ValueError(f"side length must be odd (got d={d}): an even side has no "
                         "odd total mode count, hence no single logical Majorana mode")
    if d % 4 != 1:
        raise ValueError(f"side length must satisfy d = 1 (mod 4), got d={d}")

    squares = [(u0, v0)
               for v0 in range(1, d) for u0 in range(v0, d - v0)]
    bares = [(s, 0) for s in range(d)]
    faces = [(p, q)
             for q in range(0, d - 1) for p in range(q, d - 1 - q)]
    layout = CodeLayout(d=d, lattice=Lattice(squares, bares, faces))

    expected_v = 4 * ((d + 1) // 2 - 1) ** 2 + d
    assert layout.n_modes == expected_v
    return layout


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"[{mark}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        return "\n".join(lines)


def validate_code(layout: CodeLayout) -> ValidationReport:
    """Run every structural invariant of a CodeLayout; failures are report entries."""
    checks: list[CheckResult] = []
    plaquettes = layout.plaquettes
    v_count = layout.n_modes

    checks.append(CheckResult("odd mode count", v_count % 2 == 1, f"V={v_count}"))

    bad_sizes = [(pl.id, pl.size) for pl in plaquettes if pl.size not in (4, 6, 8)]
    checks.append(CheckResult("plaquette sizes in {4,6,8}", not bad_sizes, str(bad_sizes[:4])))

    dup = [pl.id for pl in plaquettes if len(set(pl.vertices)) != pl.size]
    checks.append(CheckResult("no repeated modes in a plaquette", not dup, str(dup[:4])))

    masks = [sum(1 << m for m in pl.vertices) for pl in plaquettes]
    odd_overlap = []
    same_color_touch = []
    for i in range(len(plaquettes)):
        for j in range(i + 1, len(plaquettes)):
            ov = (masks[i] & masks[j]).bit_count()
            if ov % 2:
                odd_overlap.append((plaquettes[i].id, plaquettes[j].id, ov))
            if ov and plaquettes[i].color == plaquettes[j].color:
                same_color_touch.append((plaquettes[i].id, plaquettes[j].id))
    checks.append(CheckResult("pairwise even overlap", not odd_overlap, str(odd_overlap[:4])))
    checks.append(CheckResult("touching plaquettes differ in color",
                              not same_color_touch, str(same_color_touch[:4])))

    uncovered = [m for m, plqs in layout.lattice.incidence.items() if not plqs]
    checks.append(CheckResult("every mode covered by a plaquette", not uncovered,
                              str(uncovered[:6])))

    rank = gf2_rank(SupportMatrix([pl.support for pl in plaquettes]))
    want = (v_count - 1) // 2
    checks.append(CheckResult("independent generators = (V-1)/2",
                              rank == want, f"rank={rank}, want={want}"))

    logical = logical_operator(layout)
    bad_comm = [pl.id for pl in plaquettes
                if pl.size % 2 == 0 and not commutes(logical, layout.stabilizer(pl))]
    # Odd plaquettes were already flagged by the size check above.
    checks.append(CheckResult("logical commutes with all generators",
                              not bad_comm, str(bad_comm[:4])))
    checks.append(CheckResult("logical squares to +1",
                              mono_mul(logical, logical).is_identity()))
    return ValidationReport(checks)


def logical_operator(layout: CodeLayout) -> MajoranaMonomial:
    """The logical Majorana operator: phase times the product of every mode.

    The mode count of every supported triangle is 1 (mod 4), for which the
    bare ascending product is already Hermitian and squares to +1.
    """
    v = layout.n_modes
    if v % 4 != 1:
        raise ValueError(f"unexpected mode count {v} (not 1 mod 4)")
    return MajoranaMonomial(layout.logical_support, 0)


# -- Unfolded decoding lattice ------------------------------------------------

LEFT_BOUNDARY = "L"
RIGHT_BOUNDARY = "R"


@dataclass(frozen=True)
class UnfoldedEdge:
    id: int
    endpoints: tuple  # two entries: plaquette id (int) or boundary marker str
    kind: str  # "ER", "EG", or "diag"
    correction: frozenset[int]
    image_edge: int  # edge id; diagonal edges are their own image
    source: tuple  # ("square", u0, v0) or ("bare", s)


@dataclass
class UnfoldedGraph:
    layout: CodeLayout
    nodes: list[int]  # red/green plaquette ids
    edges: list[UnfoldedEdge]

    def boundary_nodes(self) -> tuple[str, str]:
        return (LEFT_BOUNDARY, RIGHT_BOUNDARY)


def unfold(layout: CodeLayout) -> UnfoldedGraph:
    """Build the deformed square matching lattice of the code.

    Each blue square contributes one red-red edge and one green-green edge
    (images of each other); each hypotenuse mode contributes a self-image
    red-green edge.  Every edge's correction flips exactly the stabilizers
    at its endpoints and no blue square.
    """
    lat = layout.lattice
    d = layout.d
    nodes = [pl.id for pl in layout.plaquettes if pl.color != BLUE]
    edges: list[UnfoldedEdge] = []

    def face_or(p: int, q: int, fallback: str):
        fid = lat.face_id(p, q)
        return fid if fid is not None else fallback

    next_id = 0
    for pl in layout.plaquettes:
        if pl.color != BLUE:
            continue
        u0, v0 = pl.grid
        par = (u0 + v0) % 2
        sw, se, nw, ne = (u0 - 1, v0 - 1), (u0, v0 - 1), (u0 - 1, v0), (u0, v0)
        if par == 0:
            # SE/NW odd parity: red; SW/NE even: green.
            red_pair, green_pair = (se, nw), (sw, ne)
            corr_r = ("W", "S")   # the square pair inside the southern green (SW face)
            corr_g = ("E", "S")   # the square pair inside the southern red (SE face)
        else:
            red_pair, green_pair = (sw, ne), (se, nw)
            corr_r = ("E", "S")   # inside the southern green (SE face)
            corr_g = ("W", "S")   # inside the southern red (SW face)
        # Endpoints: the only face a blue square can miss on the red side is
        # NW (left leg -> left boundary), on the green side NE (top leg ->
        # right boundary); boundary squares always have even parity.
        er_nodes = tuple(face_or(*f, LEFT_BOUNDARY) for f in red_pair)
        eg_nodes = tuple(face_or(*f, RIGHT_BOUNDARY) for f in green_pair)
        er_corr = frozenset(lat.square_mode(u0, v0, n) for n in corr_r)
        eg_corr = frozenset(lat.square_mode(u0, v0, n) for n in corr_g)
        er_id, eg_id = next_id, next_id + 1
        next_id += 2
        edges.append(UnfoldedEdge(er_id, er_nodes, "ER", er_corr, eg_id,
                                  ("square", u0, v0)))
        edges.append(UnfoldedEdge(eg_id, eg_nodes, "EG", eg_corr, er_id,
                                  ("square", u0, v0)))

    for s in range(d):
        mode = lat.bare_mode(s, 0)
        left_face = lat.face_id(s - 1, 0)
        right_face = lat.face_id(s, 0)
        a = left_face if left_face is not None else LEFT_BOUNDARY
        b = right_face if right_face is not None else RIGHT_BOUNDARY
        edges.append(UnfoldedEdge(next_id, (a, b), "diag", frozenset([mode]),
                                  next_id, ("bare", s)))
        next_id += 1

    return UnfoldedGraph(layout=layout, nodes=nodes, edges=edges)


def syndrome_of(layout: CodeLayout, modes: Iterable[int]) -> frozenset[int]:
    """Plaquette ids whose stabilizer anticommutes with the given mode-flip set."""
    mask = 0
    for m in modes:
        mask |= 1 << m
    flipped = []
    for pl in layout.plaquettes:
        if (mask & sum(1 << m for m in pl.vertices)).bit_count() % 2:
            flipped.append(pl.id)
    return frozenset(flipped)


def min_logical_weight(layout: CodeLayout) -> int:
    """Minimum single-mode-error cost over boundary-crossing strings.

    Exhaustive branch-and-bound over simple left-to-right paths on the
    unfolded lattice with the image-aware cost 2*n_e - n_i: an edge alone
    costs two single-mode errors, but an edge together with its image costs
    two in total, and a diagonal edge (its own image) costs one.
    """
    if layout.d > 9:
        raise ValueError("exhaustive path search is limited to d <= 9")
    graph = unfold(layout)
    adj: dict[object, list[UnfoldedEdge]] = {}
    for e in graph.edges:
        for end in e.endpoints:
            adj.setdefault(end, []).append(e)
    image = {e.id: e.image_edge for e in graph.edges}

    # Unweighted hop distance to the right boundary, for the bound
    # cost >= n_e = hops used + hops remaining.
    dist: dict[object, int] = {RIGHT_BOUNDARY: 0}
    frontier = [RIGHT_BOUNDARY]
    while frontier:
        nxt = []
        for node in frontier:
            for e in adj.get(node, []):
                for other in e.endpoints:
                    if other not in dist:
                        dist[other] = dist[node] + 1
                        nxt.append(other)
        frontier = nxt

    best = [2 * len(graph.edges)]
    inf = 10 ** 9

    def marginal_cost(edge: UnfoldedEdge, used: set[int]) -> int:
        if edge.kind == "diag":
            return 1
        return 0 if image[edge.id] in used else 2

    def dfs(node, used: set[int], visited: set, cost: int):
        if node == RIGHT_BOUNDARY:
            if cost < best[0]:
                best[0] = cost
            return
        # Any completion needs >= dist[node] further edges and the final
        # cost is at least the final edge count (n_i <= n_e), so:
        if len(used) + dist.get(node, inf) >= best[0] or cost >= best[0]:
            return
        for e in adj.get(node, []):
            if e.id in used:
                continue
            other = e.endpoints[0] if e.endpoints[1] == node else e.endpoints[1]
            if other == LEFT_BOUNDARY or other in visited:
                continue
            step = marginal_cost(e, used)
            used.add(e.id)
            visited.add(other)
            dfs(other, used, visited, cost + step)
            visited.discard(other)
            used.discard(e.id)

    dfs(LEFT_BOUNDARY, set(), {LEFT_BOUNDARY}, 0)
    return best[0]


def load_layout(path: str) -> CodeLayout:
    """Rebuild a CodeLayout from the JSON schema written by ``save``.

    The geometry is reconstructed from d; the file's plaquette and vertex
    lists are checked against the reconstruction so that a hand-edited file
    cannot silently disagree with the constructor.
    """
    with open(path) as fh:
        data = json.load(fh)
    layout = build_code(int(data["d"]))
    ours = layout.to_json_dict()
    if ours["plaquettes"] != data["plaquettes"] or ours["vertices"] != data["vertices"]:
        raise ValueError(f"layout file {path} disagrees with the d={data['d']} constructor")
    return layout
