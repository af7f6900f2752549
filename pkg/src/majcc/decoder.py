"""Two-step decoder: blue-square correction, then space-time MWPM.

Blue squares are handled directly: every blue detection event applies a
phase correction on that square's lower-left mode and flips the recorded
outcomes of the red/green plaquettes containing it from that round onward.
What remains maps onto the unfolded lattice, replicated per round into a
space-time graph whose edges carry first-order fault probabilities
aggregated from the schedule's fault sites; matching detection events along
least-weight paths yields the correction frame.

Logical failure is the parity of the residual frame: an undetectable
residual is either a product of stabilizers (even weight) or a nontrivial
boundary-to-boundary string (odd weight), and only the latter flips the
logical Majorana mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .code import BLUE, CodeLayout, UnfoldedGraph, unfold
from .matching import EventMatching, MatchingInfeasibleError, match_events
from .noisesim import (
    ErrorParams,
    FaultModel,
    SyndromeHistory,
    records_to_events,
)


@dataclass
class BlueStepInfo:
    """Per-blue-square data for the direct correction step."""

    mode_mask: int                 # bit of the lower-left mode
    rg_plaquettes: tuple[int, ...]  # red/green plaquettes containing that mode


def blue_step_info(layout: CodeLayout) -> dict[int, BlueStepInfo]:
    info = {}
    for pl in layout.by_color(BLUE):
        u0, v0 = pl.grid
        mode = layout.lattice.square_mode(u0, v0, "W")  # lower-left in the drawing plane
        rg = tuple(q for q in layout.plaquettes_containing(mode)
                   if layout.plaquettes[q].color != BLUE)
        info[pl.id] = BlueStepInfo(mode_mask=1 << mode, rg_plaquettes=rg)
    return info


def blue_step(history: SyndromeHistory,
              layout: Optional[CodeLayout] = None) -> tuple[SyndromeHistory, frozenset[int]]:
    """Consume blue detection events; returns (updated history, partial frame).

    The updated history carries the adjusted red/green records (blue rows are
    left in place but are fully accounted for and ignored downstream).
    """
    layout = layout or history.layout
    info = blue_step_info(layout)
    records = history.records.copy()
    ev = records_to_events(records)
    corr = 0
    for b, binfo in info.items():
        for rnd in np.nonzero(ev[b])[0]:
            corr ^= binfo.mode_mask
            for q in binfo.rg_plaquettes:
                records[q, rnd:] ^= 1
    out = SyndromeHistory(layout=layout, rounds=history.rounds, records=records,
                          true_frame=history.true_frame, seed=history.seed)
    modes = frozenset(m for m in range(layout.n_modes) if (corr >> m) & 1)
    return out, modes


# -- Matching graph -------------------------------------------------------------


@dataclass
class MatchingGraph:
    layout: CodeLayout
    rounds: int
    params: ErrorParams
    weighting: str
    node_cells: list[int]                    # rg (plaquette, round) cells
    cell_to_node: dict[int, int]
    dist: np.ndarray                         # (n+1, n+1) incl. boundary row/col
    pred: np.ndarray
    edge_corr: dict[tuple[int, int], int]    # node-pair (or (node, -1)) -> frame mask
    edge_prob: dict[tuple[int, int], float]
    boundary: int                            # boundary node index = n
    skipped_faults: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.node_cells)

    def nodes_of_events(self, cells: Sequence[int]) -> list[int]:
        return [self.cell_to_node[c] for c in cells]


def _blue_processed(model: FaultModel, blue_ids: set[int],
                    binfo: dict, mask: int, cells):
    """Push one fault's raw effect through the blue step.

    Returns (rg cell set, net frame mask after blue corrections).
    """
    layers = model.n_layers
    rg = set()
    frame = mask
    for c in cells:
        plq = c // layers
        if plq in blue_ids:
            rnd = c % layers
            bi = binfo[plq]
            frame ^= bi.mode_mask
            for q in bi.rg_plaquettes:
                cq = q * layers + rnd
                if cq in rg:
                    rg.discard(cq)
                else:
                    rg.add(cq)
        else:
            if c in rg:
                rg.discard(c)
            else:
                rg.add(c)
    return rg, frame


def build_matching_graph(unfolded: UnfoldedGraph, rounds: int,
                         params: ErrorParams, weighting: str = "log",
                         model: Optional[FaultModel] = None) -> MatchingGraph:
    """Space-time detection graph: unfolded edges per round plus time edges.

    The edge set is canonical -- every unfolded-lattice edge replicated in
    each round (space), and one vertical edge per red/green plaquette
    between consecutive rounds (time).  Edge probabilities are aggregated
    to first order from the schedule's fault sites: every fault branch is
    pushed through the blue step and its detection-event set is routed over
    canonical edges (faults whose events are not a single canonical edge
    are chained over shortest hop paths).
    """
    if weighting not in ("log", "unit"):
        raise ValueError(f"unknown weighting {weighting!r}")
    layout = unfolded.layout
    eps = params.epsilon if params.epsilon > 0 else 1e-3
    model = model or FaultModel(layout, rounds, ErrorParams(eps))
    layers = model.n_layers
    binfo = blue_step_info(layout)
    blue_ids = set(binfo)

    rg_plqs = [pl.id for pl in layout.plaquettes if pl.color != BLUE]
    node_cells = [p * layers + r for p in rg_plqs for r in range(layers)]
    cell_to_node = {c: i for i, c in enumerate(node_cells)}
    n = len(node_cells)
    boundary = n

    # Canonical edge set with geometric corrections.
    edge_corr: dict[tuple[int, int], int] = {}
    space_keys: dict[tuple[int, int], tuple[int, int]] = {}  # (edge id, round) -> key
    for e in unfolded.edges:
        corr = 0
        for m in e.correction:
            corr |= 1 << m
        real = [p for p in e.endpoints if not isinstance(p, str)]
        for r in range(layers):
            if len(real) == 2:
                a = cell_to_node[real[0] * layers + r]
                b = cell_to_node[real[1] * layers + r]
                key = (a, b) if a < b else (b, a)
            else:
                key = (cell_to_node[real[0] * layers + r], -1)
            edge_corr.setdefault(key, corr)
            space_keys[(e.id, r)] = key
    for p in rg_plqs:
        for r in range(rounds):
            a = cell_to_node[p * layers + r]
            b = cell_to_node[p * layers + r + 1]
            edge_corr[(a, b) if a < b else (b, a)] = 0

    def mirror_round0(q: dict):
        # No state error can first appear in the round-0 readout, so the
        # round-0 space layer would otherwise be weight-starved; weights are
        # made time-translation invariant by copying the first bulk round.
        if rounds >= 1:
            for e in unfolded.edges:
                k0, k1 = space_keys[(e.id, 0)], space_keys[(e.id, 1)]
                if k1 in q:
                    q[k0] = q[k1]

    # Pass 1: faults whose blue-processed signature is exactly one canonical
    # edge contribute directly.
    edge_q: dict[tuple[int, int], float] = {}

    def credit(key, p):
        edge_q[key] = edge_q.get(key, 1.0) * (1.0 - p)

    deferred = []
    for label, p, mask, cells in model.enumerate_faults():
        if p <= 0.0:
            continue
        rg, frame = _blue_processed(model, blue_ids, binfo, mask, cells)
        if not rg:
            continue
        nodes = sorted(cell_to_node[c] for c in rg)
        if len(nodes) == 2 and (nodes[0], nodes[1]) in edge_corr:
            credit((nodes[0], nodes[1]), p)
        elif len(nodes) == 1 and (nodes[0], -1) in edge_corr:
            credit((nodes[0], -1), p)
        else:
            deferred.append((p, nodes, frame))

    mirror_round0(edge_q)

    # Pass 2: remaining faults are chains of canonical edges; route them
    # along probability-weighted shortest paths over the pass-1 weights,
    # pairing their events (or sending them to the boundary) at minimum
    # total weight -- mirroring what the decoder itself will do.
    def weight_of(key):
        pe = 1.0 - edge_q.get(key, 1.0)
        pe = max(pe, 1e-9)
        return -math.log(min(pe, 1 - 1e-12))

    rows, cols, vals = [], [], []
    for (a, b), _ in edge_corr.items():
        bb = boundary if b == -1 else b
        rows.append(a)
        cols.append(bb)
        vals.append(weight_of((a, b)))
    g1 = coo_matrix((vals + vals, (rows + cols, cols + rows)),
                    shape=(n + 1, n + 1)).tocsr()
    dist1, pred1 = dijkstra(g1, directed=False, return_predecessors=True)

    def path_keys(src, dst):
        out = []
        cur = dst
        while cur != src:
            nxt = int(pred1[src, cur])
            if nxt < 0:
                return None
            a, b = (nxt, cur) if nxt < cur else (cur, nxt)
            out.append((a, -1) if b == boundary else (a, b))
            cur = nxt
        return out

    # Stabilizer span for frame-consistency tests: among candidate pairings
    # of a fault's events, only those whose accumulated edge corrections
    # equal the fault's frame modulo stabilizer products are physical
    # decompositions (this pins the image-pair split of E_RG-type faults).
    stab_pivots: dict[int, int] = {}
    for pl in layout.plaquettes:
        row = 0
        for m in pl.vertices:
            row ^= 1 << m
        while row:
            lead = row.bit_length() - 1
            if lead not in stab_pivots:
                stab_pivots[lead] = row
                break
            row ^= stab_pivots[lead]

    def in_stab_span(vec: int) -> bool:
        while vec:
            lead = vec.bit_length() - 1
            if lead not in stab_pivots:
                return False
            vec ^= stab_pivots[lead]
        return True

    def plan_candidates(idx: list[int]):
        """All pairings of events (pair up or go to boundary)."""
        if not idx:
            yield []
            return
        first, rest = idx[0], idx[1:]
        for sub in plan_candidates(rest):
            yield [(first, -1)] + sub
        for pos, j in enumerate(rest):
            others = rest[:pos] + rest[pos + 1:]
            for sub in plan_candidates(others):
                yield [(first, j)] + sub

    skipped = 0
    from .matching import brute_force_match

    for p, nodes, frame in deferred:
        k = len(nodes)
        dsub = dist1[np.ix_(nodes, nodes)]
        bvec = dist1[nodes, boundary]
        if not (np.isfinite(bvec).all() and np.isfinite(dsub).all()) or k > 12:
            skipped += 1
            continue
        best_keys, best_cost = None, math.inf
        if k <= 6:
            for plan in plan_candidates(list(range(k))):
                keys: list[tuple[int, int]] = []
                cost = 0.0
                feasible = True
                for i, j in plan:
                    if j == -1:
                        kk = path_keys(nodes[i], boundary)
                        cost += bvec[i]
                    else:
                        kk = path_keys(nodes[i], nodes[j])
                        cost += dsub[i, j]
                    if kk is None:
                        feasible = False
                        break
                    keys.extend(kk)
                if not feasible or cost >= best_cost:
                    continue
                corr = frame
                for key in keys:
                    corr ^= edge_corr[key]
                if in_stab_span(corr):
                    best_keys, best_cost = keys, cost
        if best_keys is None:
            plan = brute_force_match(dsub, bvec)
            keys = []
            ok = True
            for i, j in plan.pairs:
                kk = path_keys(nodes[i], nodes[j])
                ok = ok and kk is not None
                keys.extend(kk or [])
            for i in plan.to_boundary:
                kk = path_keys(nodes[i], boundary)
                ok = ok and kk is not None
                keys.extend(kk or [])
            if not ok:
                skipped += 1
                continue
            best_keys = keys
        for key in best_keys:
            credit(key, p)

    mirror_round0(edge_q)
    edge_prob = {k: 1.0 - edge_q.get(k, 1.0) for k in edge_corr}
    floor = min((v for v in edge_prob.values() if v > 0), default=eps) * 1e-3
    rows, cols, vals = [], [], []
    for (a, b), pe in edge_prob.items():
        pe = max(pe, floor)
        w = 1.0 if weighting == "unit" else -math.log(min(pe, 1 - 1e-12))
        bb = boundary if b == -1 else b
        rows.append(a)
        cols.append(bb)
        vals.append(w)
    g2 = coo_matrix((vals + vals, (rows + cols, cols + rows)),
                    shape=(n + 1, n + 1)).tocsr()
    dist, pred = dijkstra(g2, directed=False, return_predecessors=True)
    return MatchingGraph(layout=layout, rounds=rounds, params=params,
                         weighting=weighting, node_cells=node_cells,
                         cell_to_node=cell_to_node, dist=dist, pred=pred,
                         edge_corr=edge_corr, edge_prob=edge_prob,
                         boundary=boundary, skipped_faults=skipped)


# -- MWPM over the graph --------------------------------------------------------


@dataclass
class MatchedPair:
    nodes: tuple[int, int]   # second entry -1 for a boundary match
    weight: float
    path: list[tuple[int, int]]  # edge keys along the shortest path


@dataclass
class Pairing:
    pairs: list[MatchedPair]
    total_weight: float


def _walk_path(graph: MatchingGraph, src: int, dst: int) -> list[tuple[int, int]]:
    """Edge keys along the shortest path src -> dst using the predecessors."""
    path = []
    cur = dst
    while cur != src:
        nxt = int(graph.pred[src, cur])
        if nxt < 0:
            raise MatchingInfeasibleError(f"no path between nodes {src} and {dst}")
        a, b = (nxt, cur) if nxt < cur else (cur, nxt)
        if b == graph.boundary:
            path.append((a, -1))
        else:
            path.append((a, b))
        cur = nxt
    return path


def mwpm(graph: MatchingGraph, events) -> Pairing:
    """Minimum-weight perfect matching of detection events with the boundary.

    Events are (plaquette, round) pairs or raw cell indices.  Odd event
    counts are absorbed by the boundary pseudo-node.  Raises
    MatchingInfeasibleError when some event has no finite-weight route.
    """
    layers = graph.rounds + 1
    nodes = []
    for e in events:
        cell = e[0] * layers + e[1] if isinstance(e, tuple) else int(e)
        if cell not in graph.cell_to_node:
            raise ValueError(f"event {e!r} is not a red/green detection cell")
        nodes.append(graph.cell_to_node[cell])
    if not nodes:
        return Pairing(pairs=[], total_weight=0.0)
    dsub = graph.dist[np.ix_(nodes, nodes)]
    bvec = graph.dist[nodes, graph.boundary]
    if not np.isfinite(bvec).all() or not np.isfinite(dsub).all():
        raise MatchingInfeasibleError("isolated detection event")
    result: EventMatching = match_events(dsub, bvec)
    pairs = []
    for i, j in result.pairs:
        pairs.append(MatchedPair(
            nodes=(nodes[i], nodes[j]),
            weight=float(dsub[i, j]),
            path=_walk_path(graph, nodes[i], nodes[j])))
    for i in result.to_boundary:
        pairs.append(MatchedPair(
            nodes=(nodes[i], -1),
            weight=float(bvec[i]),
            path=_walk_path(graph, nodes[i], graph.boundary)))
    return Pairing(pairs=pairs, total_weight=result.weight)


# -- Full decode ----------------------------------------------------------------


@dataclass
class DecodeOutcome:
    correction: frozenset[int]
    residual: frozenset[int]
    syndrome_clean: bool
    logical_failure: bool
    matching_weight: float


class Decoder:
    """Reusable decoding context for one (layout, rounds, params) setting."""

    def __init__(self, layout: CodeLayout, rounds: int, params: ErrorParams,
                 weighting: str = "log", model: Optional[FaultModel] = None):
        self.layout = layout
        self.rounds = rounds
        self.model = model or FaultModel(layout, rounds, params)
        self.graph = build_matching_graph(unfold(layout), rounds, params,
                                          weighting=weighting, model=self.model)
        self.binfo = blue_step_info(layout)
        self.layers = rounds + 1
        self._plq_masks = [sum(1 << m for m in pl.vertices)
                           for pl in layout.plaquettes]

    # fast path ------------------------------------------------------------

    def decode_events(self, events, true_frame: int) -> DecodeOutcome:
        """Decode a shot given its raw detection-event buffer and frame."""
        layers = self.layers
        ev = bytearray(events)
        corr = 0
        for b, bi in self.binfo.items():
            base = b * layers
            for rnd in range(layers):
                if ev[base + rnd]:
                    corr ^= bi.mode_mask
                    for q in bi.rg_plaquettes:
                        ev[q * layers + rnd] ^= 1
        cells = [c for c in range(len(ev))
                 if ev[c] and c in self.graph.cell_to_node]
        pairing = mwpm(self.graph, cells)
        for mp in pairing.pairs:
            for key in mp.path:
                corr ^= self.graph.edge_corr.get(key, 0)
        residual = true_frame ^ corr
        clean = all((residual & mk).bit_count() % 2 == 0 for mk in self._plq_masks)
        if not clean:
            raise RuntimeError("internal consistency: syndrome not clean after decode")
        failure = bool(residual.bit_count() & 1)
        return DecodeOutcome(
            correction=_mask_to_set(corr),
            residual=_mask_to_set(residual),
            syndrome_clean=clean,
            logical_failure=failure,
            matching_weight=pairing.total_weight,
        )

    def decode_history(self, history: SyndromeHistory) -> DecodeOutcome:
        ev_mat = records_to_events(history.records)
        return self.decode_events(bytearray(ev_mat.astype(np.uint8).tobytes()),
                                  history.true_frame)


def _mask_to_set(mask: int) -> frozenset[int]:
    out = []
    m = mask
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return frozenset(out)


def decode(history: SyndromeHistory, layout: Optional[CodeLayout] = None,
           decoder: Optional[Decoder] = None,
           params: Optional[ErrorParams] = None) -> DecodeOutcome:
    """Blue step, detection events, MWPM, correction accumulation, verdict."""
    layout = layout or history.layout
    if decoder is None:
        params = params or ErrorParams(1e-3)
        decoder = Decoder(layout, history.rounds, params)
    return decoder.decode_history(history)
