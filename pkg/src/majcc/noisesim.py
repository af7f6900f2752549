"""Circuit-level Monte Carlo of repeated stabilizer measurement.

Errors are propagated as flip frames: the state is the reference code state
plus a set of modes carrying an odd number of single-mode phase flips, and
every recorded outcome is a deviation bit relative to the noiseless run.
Because all of the noise channels are mixtures of mode products, this is
exact; the per-fault deviation rules (which record flips and which data
injections each elementary fault causes inside the 8-mode measurement
circuit) are certified against the dense simulator in the test suite.

Time structure of one round (seven steps):

    0: direct parity projections of every blue square
    1: ancilla-pair + filler initializations for red faces
    2: parity projections of red faces (direct for 4-mode faces)
    3: ancilla-pair measurements for red faces
    4-6: the same for green faces

A mode idles, with memory-error probability eps per step, in every step in
which it is not operated.  Outcome visibility is round-aligned: round r's
readouts reflect the frame at the start of the round, and every state flip
occurring during round r is first seen by the round r+1 readout (the
space-time decoding lattice -- unfolded edges per layer, vertical edges for
false outcomes -- presumes exactly this alignment).  A final noiseless
round is appended for frame readout.  Recorded outcomes and detection
events are indexed by (plaquette, round) cells with
cell = plaquette_id * (rounds + 1) + round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .code import BLUE, GREEN, RED, CodeLayout, Plaquette

STEPS_PER_ROUND = 7
_COLOR_BASE = {RED: 1, GREEN: 4}   # init step; +1 projection; +2 measurement
_READ_STEP = {BLUE: 0, RED: 2, GREEN: 5}

# eta-pair injections of the 8-mode circuit, as slices into the plaquette's
# cyclic data-mode list: pair k covers data modes [0:2k+2) for k < 3, and the
# (a8, a1) pair injects nothing.  Certified in tests against exactsim.
_PAIR_INJECTION_END = (2, 4, 6, 0)
# ancilla index (0-based a1..a8) -> eta pair index (eta23, eta45, eta67, eta81)
_ANC_TO_PAIR = (3, 0, 0, 1, 1, 2, 2, 3)


@dataclass(frozen=True)
class ErrorParams:
    """Uniform elementary fault probability; parity projections fail at 5*eps."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 0.2:
            raise ValueError(f"epsilon must be in [0, 0.2), got {self.epsilon}")

    @property
    def pp_rate(self) -> float:
        return 5.0 * self.epsilon


@dataclass(frozen=True)
class Primitive:
    kind: str              # proj4 | pair_init | proj_oct | pair_meas | filler_init | idle
    step: int              # 0..6 within the round
    plaquette: int         # owning plaquette id (-1 for idle)
    payload: tuple = ()    # modes involved (idle: (mode,); proj_oct: quadruple slot)


@dataclass
class Schedule:
    """Deterministic per-round schedule of noisy primitives for one layout."""

    layout: CodeLayout
    primitives: list[Primitive] = field(default_factory=list)
    read_step: dict[int, int] = field(default_factory=dict)

    @property
    def n_primitives(self) -> int:
        return len(self.primitives)


def build_schedule(layout: CodeLayout) -> Schedule:
    """Schedule one round: blue, then red, then green, id order inside each.

    Eight-mode faces use the four-projection measurement circuit; six-mode
    faces use the same circuit with one pre-initialized filler pair; 4-mode
    plaquettes of any color are measured with a single direct projection.
    """
    sched = Schedule(layout=layout)
    prims = sched.primitives

    operated_at: dict[int, set[int]] = {}  # step -> set of code modes operated

    def mark(step: int, modes: Iterable[int]):
        operated_at.setdefault(step, set()).update(modes)

    for color in (BLUE, RED, GREEN):
        for pl in layout.by_color(color):
            sched.read_step[pl.id] = _READ_STEP[color]
            if pl.size == 4:
                step = _READ_STEP[color]
                prims.append(Primitive("proj4", step, pl.id, tuple(pl.vertices)))
                mark(step, pl.vertices)
                continue
            base = _COLOR_BASE[color]
            n_fill = 8 - pl.size
            if n_fill:
                prims.append(Primitive("filler_init", base, pl.id, ()))
            for k in range(4):
                prims.append(Primitive("pair_init", base, pl.id, (k,)))
            for i in range(4):
                data = pl.vertices[2 * i: 2 * i + 2]  # fillers beyond pl.size
                prims.append(Primitive("proj_oct", base + 1, pl.id, (i,) + tuple(data)))
            mark(base + 1, pl.vertices)
            for k in range(4):
                prims.append(Primitive("pair_meas", base + 2, pl.id, (k,)))

    n_modes = layout.n_modes
    for step in range(STEPS_PER_ROUND):
        busy = operated_at.get(step, set())
        for m in range(n_modes):
            if m not in busy:
                prims.append(Primitive("idle", step, -1, (m,)))
    return sched


# -- Compiled fault tables ------------------------------------------------------


@dataclass
class FaultSite:
    """One independent noise source with its conditional branch menu."""

    label: tuple
    fire_prob: float
    branch_cum: np.ndarray          # conditional cumulative probabilities
    branch_effects: list            # parallel list of (frame_mask, cells)


class FaultModel:
    """Fault tables for (layout, rounds, epsilon): everything a shot needs.

    ``cells`` indexes detection events directly: a persistent flip first
    seen by plaquette P in round r toggles one cell; a single-round record
    flip toggles (P, r) and (P, r+1).
    """

    def __init__(self, layout: CodeLayout, rounds: int, params: ErrorParams,
                 schedule: Optional[Schedule] = None):
        if rounds < 1:
            raise ValueError("rounds must be >= 1")
        self.layout = layout
        self.rounds = rounds
        self.params = params
        self.schedule = schedule or build_schedule(layout)
        self.n_layers = rounds + 1  # + final noiseless readout round
        self.n_plq = len(layout.plaquettes)
        self._mode_masks = [1 << m for m in range(layout.n_modes)]
        self._plq_masks = [sum(1 << m for m in pl.vertices) for pl in layout.plaquettes]
        self._compile()

    # cell helpers ---------------------------------------------------------

    def cell(self, plq: int, rnd: int) -> int:
        return plq * self.n_layers + rnd

    def _mode_flip_cells(self, mode: int, step: int, rnd: int) -> list[int]:
        """Event cells toggled by a persistent mode flip during (round, step).

        Round r's outcomes reflect the frame at the start of the round; all
        state noise of round r is first seen by the round r+1 readout (the
        paper's space-time decoding lattice presumes this round alignment).
        Injected flips with step < 0 model errors placed before round r's
        snapshot and are seen in round r itself.
        """
        r = rnd + 1 if step >= 0 else rnd
        if r > self.rounds:
            return []
        return [self.cell(q, r) for q in self.layout.plaquettes_containing(mode)]

    def _record_flip_cells(self, plq: int, rnd: int) -> list[int]:
        cells = [self.cell(plq, rnd)]
        if rnd + 1 <= self.rounds:
            cells.append(self.cell(plq, rnd + 1))
        return cells

    def _mode_flip_effect(self, modes: Sequence[int], step: int, rnd: int):
        mask = 0
        cells: set[int] = set()
        for m in modes:
            mask ^= self._mode_masks[m]
            cells ^= set(self._mode_flip_cells(m, step, rnd))
        return mask, tuple(sorted(cells))

    # compilation ----------------------------------------------------------

    def _compile(self):
        eps = self.params.epsilon
        self.sites: list[FaultSite] = []
        if eps == 0.0:
            self.p_fire = np.zeros(0)
            return
        layout = self.layout
        for rnd in range(self.rounds):
            for prim in self.schedule.primitives:
                pl = layout.plaquettes[prim.plaquette] if prim.plaquette >= 0 else None
                if prim.kind == "idle":
                    mode = prim.payload[0]
                    mask, cells = self._mode_flip_effect([mode], prim.step, rnd)
                    self._add(("idle", rnd, prim.step, mode), eps,
                              [(1.0, (mask, cells))])
                elif prim.kind == "proj4":
                    self._add_projection(("proj4", rnd, pl.id), rnd, prim.step,
                                         pl, list(prim.payload), anc=())
                elif prim.kind == "proj_oct":
                    slot = prim.payload[0]
                    data = [m for m in prim.payload[1:]]
                    anc = (2 * slot, 2 * slot + 1)
                    self._add_projection(("proj", rnd, pl.id, slot), rnd,
                                         prim.step, pl, data, anc)
                elif prim.kind == "pair_init":
                    k = prim.payload[0]
                    eff = self._combine(
                        self._record_effect(pl.id, rnd),
                        self._injection_effect(pl, k, prim.step + 2, rnd))
                    self._add(("init", rnd, pl.id, k), eps, [(1.0, eff)])
                elif prim.kind == "filler_init":
                    self._add(("filler", rnd, pl.id), eps,
                              [(1.0, self._record_effect(pl.id, rnd))])
                elif prim.kind == "pair_meas":
                    k = prim.payload[0]
                    eff = self._injection_effect(pl, k, prim.step, rnd)
                    self._add(("meas", rnd, pl.id, k), eps, [(1.0, eff)])
        self.p_fire = np.array([s.fire_prob for s in self.sites])

    def _record_effect(self, plq: int, rnd: int):
        return 0, tuple(self._record_flip_cells(plq, rnd))

    def _injection_effect(self, pl: Plaquette, pair_k: int, step: int, rnd: int):
        end = _PAIR_INJECTION_END[pair_k]
        modes = [m for m in pl.vertices[:end]]  # fillers never appear here
        return self._mode_flip_effect(modes, step, rnd)

    @staticmethod
    def _combine(*effects):
        mask = 0
        cells: set[int] = set()
        for m, cs in effects:
            mask ^= m
            cells ^= set(cs)
        return mask, tuple(sorted(cells))

    def _add(self, label, fire_prob: float, branches):
        """branches: list of (conditional probability, effect)."""
        cum = np.cumsum([b[0] for b in branches])
        assert abs(cum[-1] - 1.0) < 1e-12
        self.sites.append(FaultSite(label, fire_prob, cum,
                                    [b[1] for b in branches]))

    def _add_projection(self, label, rnd: int, step: int, pl: Plaquette,
                        data_modes: list[int], anc: tuple):
        """Eq.(1) branch menu for one 4-mode parity projection.

        ``data_modes`` are the code modes among the projected quadruple
        (fillers of 6-mode faces are dropped: flips on them are never read
        again).  ``anc`` gives local ancilla indices whose post-projection
        flips feed eta-pair injections.
        """
        eps = self.params.epsilon
        record = self._record_effect(pl.id, rnd)
        n_real = len(data_modes)
        # the four projected modes in local order: data then ancilla
        local: list[tuple] = [("d", m) for m in data_modes]
        local += [("f",)] * (4 - n_real - len(anc))  # filler slots
        local += [("a", a) for a in anc]

        def flip_effect(sel):
            eff = (0, ())
            for loc in sel:
                if loc[0] == "d":
                    eff = self._combine(eff, self._mode_flip_effect([loc[1]], step, rnd))
                elif loc[0] == "a":
                    pair_k = _ANC_TO_PAIR[loc[1]]
                    eff = self._combine(eff, self._injection_effect(pl, pair_k, step + 1, rnd))
            return eff

        branches = []
        for i in range(4):
            branches.append((0.05, flip_effect([local[i]])))
        for i in range(4):
            for j in range(i + 1, 4):
                branches.append((0.2 / 6, flip_effect([local[i], local[j]])))
        branches.append((0.2, record))
        for i in range(4):
            branches.append((0.05, self._combine(record, flip_effect([local[i]]))))
        for i in range(4):
            for j in range(i + 1, 4):
                branches.append((0.2 / 6, self._combine(record, flip_effect([local[i], local[j]]))))
        self._add(label, 5 * eps, branches)

    # sampling -------------------------------------------------------------

    def sample_shot(self, rng: np.random.Generator):
        """Returns (event bytearray over cells, true frame bitmask)."""
        events = bytearray(self.n_plq * self.n_layers)
        frame = 0
        if len(self.p_fire):
            u = rng.random(len(self.p_fire))
            fired = np.nonzero(u < self.p_fire)[0]
            for idx in fired:
                site = self.sites[idx]
                rel = u[idx] / site.fire_prob
                b = int(np.searchsorted(site.branch_cum, rel, side="right"))
                if b >= len(site.branch_effects):
                    b = len(site.branch_effects) - 1
                mask, cells = site.branch_effects[b]
                frame ^= mask
                for c in cells:
                    events[c] ^= 1
        return events, frame

    def enumerate_faults(self):
        """Yield (label, probability, frame_mask, cells) over all branches."""
        for site in self.sites:
            prev = 0.0
            for cond_cum, eff in zip(site.branch_cum, site.branch_effects):
                p = site.fire_prob * (cond_cum - prev)
                prev = cond_cum
                yield site.label, p, eff[0], eff[1]


# -- Histories and single noisy primitives --------------------------------------


@dataclass
class SyndromeHistory:
    """Recorded outcome deviations per plaquette per round, plus the frame."""

    layout: CodeLayout
    rounds: int                      # noisy rounds; records have rounds+1 layers
    records: np.ndarray              # (n_plq, rounds+1) uint8 deviation bits
    true_frame: int                  # bitmask of modes with odd accumulated flips
    seed: object = None

    @property
    def n_layers(self) -> int:
        return self.rounds + 1

    def frame_modes(self) -> frozenset[int]:
        return frozenset(m for m in range(self.layout.n_modes)
                         if (self.true_frame >> m) & 1)


def events_to_records(events, n_plq: int, n_layers: int) -> np.ndarray:
    ev = np.frombuffer(bytes(events), dtype=np.uint8).reshape(n_plq, n_layers)
    return np.bitwise_xor.accumulate(ev, axis=1)


def records_to_events(records: np.ndarray) -> np.ndarray:
    ev = records.copy()
    ev[:, 1:] ^= records[:, :-1]
    return ev


def apply_noisy_projection(frame: set[int], modes: Sequence[int],
                           rng: np.random.Generator, epsilon: float) -> int:
    """One noisy 4-mode parity projection on an explicit flip frame.

    Samples the Eq.-style branch menu: identity with probability 1 - 5 eps,
    then equal eps slices for {state flip}, {pair flip}, {false outcome},
    {false + flip}, {false + pair}.  Returns the recorded outcome deviation
    bit; state flips land after the parity read.
    """
    modes = list(modes)
    if len(set(modes)) != 4:
        raise ValueError("parity projection needs 4 distinct modes")
    true_parity = sum(1 for m in modes if m in frame) % 2
    recorded = true_parity
    u = rng.random()
    if u < 5 * epsilon:
        r = u / epsilon  # in [0, 5)
        branch = int(r)
        sub = r - branch
        def flip_one():
            frame.symmetric_difference_update({modes[int(sub * 4)]})
        def flip_two():
            pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
            i, j = pairs[min(5, int(sub * 6))]
            frame.symmetric_difference_update({modes[i], modes[j]})
        if branch == 0:
            flip_one()
        elif branch == 1:
            flip_two()
        elif branch == 2:
            recorded ^= 1
        elif branch == 3:
            recorded ^= 1
            flip_one()
        else:
            recorded ^= 1
            flip_two()
    return recorded


def run_memory_experiment(layout: CodeLayout, params: ErrorParams, rounds: int,
                          seed, model: Optional[FaultModel] = None,
                          inject: Sequence[tuple] = ()) -> SyndromeHistory:
    """R noisy stabilizer-measurement rounds plus one noiseless readout round.

    Deterministic for a fixed seed.  ``inject`` adds deterministic mode
    flips (round, step, modes) on top of the sampled noise, which the
    detection-event examples and the matching-graph construction rely on.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    model = model or FaultModel(layout, rounds, params)
    if model.rounds != rounds or model.params != params:
        raise ValueError("fault model disagrees with requested parameters")
    rng = np.random.default_rng(seed)
    events, frame = model.sample_shot(rng)
    for rnd, step, modes in inject:
        mask, cells = model._mode_flip_effect(list(modes), step, rnd)
        frame ^= mask
        for c in cells:
            events[c] ^= 1
    records = events_to_records(events, model.n_plq, model.n_layers)
    return SyndromeHistory(layout=layout, rounds=rounds, records=records,
                           true_frame=frame, seed=seed)


def detection_events(history: SyndromeHistory) -> set[tuple[int, int]]:
    """(plaquette, round) cells where consecutive recorded outcomes differ.

    Round 0 is compared against the noiseless reference, and the appended
    noiseless round participates as the final layer.
    """
    ev = records_to_events(history.records)
    plqs, rnds = np.nonzero(ev)
    return set(zip(plqs.tolist(), rnds.tolist()))
