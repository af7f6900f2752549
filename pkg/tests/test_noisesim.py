import numpy as np
import pytest

from majcc.code import BLUE, GREEN, RED, build_code
from majcc.noisesim import (
    ErrorParams,
    FaultModel,
    apply_noisy_projection,
    build_schedule,
    detection_events,
    events_to_records,
    records_to_events,
    run_memory_experiment,
)


@pytest.fixture(scope="module")
def layout5():
    return build_code(5)


@pytest.fixture(scope="module")
def model5(layout5):
    return FaultModel(layout5, rounds=5, params=ErrorParams(1e-3))


def test_error_params_validation():
    with pytest.raises(ValueError):
        ErrorParams(0.25)
    with pytest.raises(ValueError):
        ErrorParams(-0.01)
    assert ErrorParams(0.002).pp_rate == pytest.approx(0.01)


def test_schedule_primitive_counts(layout5):
    sched = build_schedule(layout5)
    by_kind = {}
    for p in sched.primitives:
        by_kind[p.kind] = by_kind.get(p.kind, 0) + 1
    # d=5: 4 blue squares and two 4-mode faces measure directly; four 6-mode
    # faces run the 8-mode circuit with a filler pair.
    assert by_kind["proj4"] == 6
    assert by_kind["filler_init"] == 4
    assert by_kind["pair_init"] == 16
    assert by_kind["proj_oct"] == 16
    assert by_kind["pair_meas"] == 16
    # Regression fixture: total primitive count including idles (21 modes x
    # 7 steps - 48 operated mode-steps = 99 idle sites).
    assert by_kind["idle"] == 99
    assert sched.n_primitives == 157


def test_schedule_each_plaquette_read_once(layout5):
    sched = build_schedule(layout5)
    reads = {}
    for p in sched.primitives:
        if p.kind == "proj4":
            reads[p.plaquette] = reads.get(p.plaquette, 0) + 1
        if p.kind == "proj_oct" and p.payload[0] == 0:
            reads[p.plaquette] = reads.get(p.plaquette, 0) + 1
    assert sorted(reads) == [pl.id for pl in layout5.plaquettes]
    assert all(v == 1 for v in reads.values())


def test_octagon_projection_counts_d9():
    layout = build_code(9)
    sched = build_schedule(layout)
    eight = [pl.id for pl in layout.plaquettes if pl.size == 8]
    projs = {}
    for p in sched.primitives:
        if p.kind == "proj_oct":
            projs[p.plaquette] = projs.get(p.plaquette, 0) + 1
    for pid in eight:
        assert projs[pid] == 4


def test_apply_noisy_projection_noiseless():
    rng = np.random.default_rng(0)
    frame = set()
    assert apply_noisy_projection(frame, [0, 1, 2, 3], rng, 0.0) == 0
    assert frame == set()
    frame = {2}
    assert apply_noisy_projection(frame, [0, 1, 2, 3], rng, 0.0) == 1


def test_apply_noisy_projection_branch_statistics():
    rng = np.random.default_rng(42)
    eps = 0.04
    n = 200_000
    no_err = true_state = false_only = false_state = 0
    for _ in range(n):
        frame = set()
        rec = apply_noisy_projection(frame, [0, 1, 2, 3], rng, eps)
        if rec == 0 and not frame:
            no_err += 1
        elif rec == 0 and frame:
            true_state += 1
        elif rec == 1 and not frame:
            false_only += 1
        else:
            false_state += 1
    assert no_err / n == pytest.approx(1 - 5 * eps, abs=4e-3)
    assert true_state / n == pytest.approx(2 * eps, abs=3e-3)
    assert false_only / n == pytest.approx(eps, abs=2e-3)
    assert false_state / n == pytest.approx(2 * eps, abs=3e-3)


def test_zero_noise_run_is_silent(layout5):
    params = ErrorParams(0.0)
    for seed in (0, 1, (2, 3)):
        h = run_memory_experiment(layout5, params, rounds=5, seed=seed)
        assert not h.records.any()
        assert h.true_frame == 0


def test_same_seed_bit_identical(layout5, model5):
    p = ErrorParams(1e-3)
    h1 = run_memory_experiment(layout5, p, 5, seed=(7, 1), model=model5)
    h2 = run_memory_experiment(layout5, p, 5, seed=(7, 1), model=model5)
    assert np.array_equal(h1.records, h2.records)
    assert h1.true_frame == h2.true_frame
    h3 = run_memory_experiment(layout5, p, 5, seed=(7, 2), model=model5)
    assert not np.array_equal(h1.records, h3.records) or h1.true_frame != h3.true_frame


def test_injected_bulk_fault_flips_incident_plaquettes(layout5):
    # A single [c] between rounds flips exactly the plaquettes containing
    # that mode, from the next readout onward.
    params = ErrorParams(0.0)
    mode = next(m for m in range(layout5.n_modes)
                if len(layout5.plaquettes_containing(m)) == 3)
    h = run_memory_experiment(layout5, params, 5, seed=0,
                              inject=[(2, 6, (mode,))])  # after round 2's reads
    expect = set(layout5.plaquettes_containing(mode))
    for rnd in range(h.rounds + 1):
        flipped = set(np.nonzero(h.records[:, rnd])[0].tolist())
        assert flipped == (expect if rnd >= 3 else set())
    events = detection_events(h)
    assert events == {(q, 3) for q in expect}


def test_injected_fault_visibility_is_round_aligned(layout5):
    # All of round r's state noise is first seen by the round r+1 readout;
    # a flip placed before the round's snapshot (step -1) is seen in round r.
    params = ErrorParams(0.0)
    mode = next(m for m in range(layout5.n_modes)
                if len(layout5.plaquettes_containing(m)) == 3)
    colors = {layout5.plaquettes[q].color for q in layout5.plaquettes_containing(mode)}
    assert colors == {BLUE, RED, GREEN}
    h = run_memory_experiment(layout5, params, 5, seed=0,
                              inject=[(2, 0, (mode,))])
    assert detection_events(h) == {(q, 3) for q in layout5.plaquettes_containing(mode)}
    h = run_memory_experiment(layout5, params, 5, seed=0,
                              inject=[(2, -1, (mode,))])
    assert detection_events(h) == {(q, 2) for q in layout5.plaquettes_containing(mode)}


def test_records_events_roundtrip(layout5, model5):
    rng = np.random.default_rng(5)
    ev, _ = model5.sample_shot(rng)
    rec = events_to_records(ev, model5.n_plq, model5.n_layers)
    back = records_to_events(rec)
    assert np.array_equal(
        back, np.frombuffer(bytes(ev), dtype=np.uint8).reshape(rec.shape))


def test_outcome_flip_makes_adjacent_event_pair(layout5, model5):
    # Find a pure record-flip fault branch (a filler init error) and check
    # its event signature is (P, r), (P, r+1).
    for label, p, mask, cells in model5.enumerate_faults():
        if label[0] == "filler":
            assert mask == 0
            assert len(cells) == 2
            (c1, c2) = cells
            assert c2 - c1 == 1
            break
    else:
        pytest.fail("no filler fault present at d=5")


def test_event_rate_first_order(layout5):
    # Empirical detection-event count matches the first-order expectation
    # from the fault tables within 3 standard errors.
    eps = 1e-3
    model = FaultModel(layout5, rounds=5, params=ErrorParams(eps))
    expected = 0.0
    for _, p, _, cells in model.enumerate_faults():
        expected += p * len(cells)
    shots = 4000
    total = 0
    for s in range(shots):
        ev, _ = model.sample_shot(np.random.default_rng((11, s)))
        total += sum(ev)
    mean = total / shots
    # each fault contributes its cells independently to first order
    sigma = (expected / shots) ** 0.5 * 3 + 3 * expected * 50 * eps / shots ** 0.5
    assert abs(mean - expected) < max(3 * (mean / shots) ** 0.5, 0.05 * expected + sigma)


def test_frame_consistency_with_final_round(layout5):
    # With measurement-flip channels disabled (only idle errors firing),
    # re-evaluating syndromes from the final frame must reproduce the last
    # recorded round.
    eps = 5e-3

    class IdleOnly(FaultModel):
        def _compile(self):
            super()._compile()
            keep = [s for s in self.sites if s.label[0] == "idle"]
            self.sites = keep
            self.p_fire = np.array([s.fire_prob for s in keep])

    model = IdleOnly(layout5, rounds=5, params=ErrorParams(eps))
    masks = [sum(1 << m for m in pl.vertices) for pl in layout5.plaquettes]
    for s in range(200):
        h = run_memory_experiment(layout5, ErrorParams(eps), 5, seed=(13, s), model=model)
        last = h.records[:, -1]
        for q, mk in enumerate(masks):
            assert last[q] == (h.true_frame & mk).bit_count() % 2
