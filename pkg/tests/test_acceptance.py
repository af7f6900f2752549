"""Acceptance gate: one test per criterion, each printing a PASS line.

Tolerances are pinned here.  The threshold and suppression criteria run a
2x10^4-shot Monte Carlo sweep per point and are marked ``acceptance`` (and
``slow``); everything else runs in seconds to minutes.  Run the full gate
with:

    pytest tests/test_acceptance.py -m acceptance -v
"""

import math

import numpy as np
import pytest

from majcc import threshold as th
from majcc.algebra import SupportMatrix, gf2_rank
from majcc.code import build_code, min_logical_weight, validate_code
from majcc.decoder import Decoder
from majcc.matching import brute_force_match, match_events
from majcc.noisesim import ErrorParams, run_memory_experiment

pytestmark = pytest.mark.acceptance


def _report(name: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


# -- Code validity --------------------------------------------------------------


def test_code_validity_d5_to_d17():
    for d in (5, 9, 13, 17):
        layout = build_code(d)
        report = validate_code(layout)
        assert report.ok, f"d={d}:\n{report}"
        rank = gf2_rank(SupportMatrix([pl.support for pl in layout.plaquettes]))
        assert rank == (layout.n_modes - 1) // 2
    _report("code validity: full invariant suite for d in {5, 9, 13, 17}", True)


# -- Code distance --------------------------------------------------------------


def test_code_distance_exhaustive():
    w5 = min_logical_weight(build_code(5))
    w9 = min_logical_weight(build_code(9))
    _report("code distance: image-aware path search", w5 == 5 and w9 == 9,
            f"d=5 -> {w5}, d=9 -> {w9}")


# -- Circuit identities ----------------------------------------------------------


def test_circuit_identities():
    from majcc.exactsim import (
        simulate_stab_meas_circuit,
        verify_exchange_and_phase,
        verify_tgate_circuit,
        verify_transfer_circuit,
    )

    for name, fn in (("exchange/phase", verify_exchange_and_phase),
                     ("transfer", verify_transfer_circuit),
                     ("T gate", verify_tgate_circuit)):
        report = fn()
        assert report.ok, f"{name}:\n{report}"
    report = simulate_stab_meas_circuit()
    assert report.ok, f"stabilizer measurement:\n{report}"
    _report("circuit identities: channel distance < 1e-9; Table I complete "
            "with outcome formula -u12 u34 u56 u78", True)


# -- Distillation ----------------------------------------------------------------


def test_distillation_value():
    from majcc.exactsim import distillation_monte_carlo, verify_distillation

    report = verify_distillation(0.1)
    assert report.ok, str(report)
    err, accepted = distillation_monte_carlo(0.1, accepted_target=100_000, seed=5)
    target = 0.1 ** 2 / (1 - 2 * 0.1 + 2 * 0.1 ** 2)
    ok = accepted >= 100_000 and abs(err - target) < 1e-3
    _report("distillation: empirical conditional error at p=0.1",
            ok, f"{err:.6f} vs {target:.6f} (+-1e-3, {accepted} accepted)")


# -- Surgery identity ------------------------------------------------------------


def test_surgery_type_i_identity():
    from majcc.surgery import TYPE_I, build_merge, construct_pattern, verify_pattern

    layout = build_code(5)
    merged = build_merge(layout, layout, TYPE_I)
    pattern = construct_pattern(merged)
    report = verify_pattern(merged, pattern)
    assert report.ok, str(report)
    _report("surgery: Q_R = i a b Q_A exact monomial identity (type-I, d=5)", True)


# -- Decoder soundness -----------------------------------------------------------


def test_mwpm_equals_brute_force_500_instances():
    import random

    rng = random.Random(2024)
    worst = 0.0
    for _ in range(500):
        k = rng.randint(1, 10)
        dist = np.zeros((k, k))
        for i in range(k):
            for j in range(i + 1, k):
                dist[i, j] = dist[j, i] = rng.uniform(0.2, 8.0)
        bnd = np.array([rng.uniform(0.2, 8.0) for _ in range(k)])
        got = match_events(dist, bnd)
        want = brute_force_match(dist, bnd)
        worst = max(worst, abs(got.weight - want.weight))
        assert np.isclose(got.weight, want.weight, atol=1e-9)
    _report("decoder: MWPM equals brute-force oracle on 500 instances",
            True, f"max weight deviation {worst:.2e}")


def test_all_single_mode_errors_corrected_d5():
    layout = build_code(5)
    dec = Decoder(layout, rounds=5, params=ErrorParams(1e-3))
    checked = 0
    for mode in range(layout.n_modes):
        for rnd in range(5):
            for step in (-1, 6):
                h = run_memory_experiment(layout, ErrorParams(0.0), 5, seed=0,
                                          inject=[(rnd, step, (mode,))])
                out = dec.decode_history(h)
                assert out.syndrome_clean
                assert not out.logical_failure, (mode, rnd, step)
                checked += 1
    _report("decoder: all single-mode errors corrected at d=5 (exhaustive)",
            True, f"{checked} cases")


@pytest.mark.slow
def test_syndrome_clean_on_1e6_shots():
    layout = build_code(5)
    dec = Decoder(layout, rounds=5, params=ErrorParams(2e-3))
    shots = 1_000_000
    for s in range(shots):
        ev, frame = dec.model.sample_shot(np.random.default_rng((77, s)))
        out = dec.decode_events(ev, frame)  # raises on an unclean syndrome
        assert out.syndrome_clean
    _report("decoder: post-correction syndrome clean on 10^6 random shots",
            True, f"{shots} shots, zero violations")


# -- Threshold reproduction -------------------------------------------------------

SWEEP_PP = (0.004, 0.006, 0.008, 0.010, 0.012)
SWEEP_SHOTS = 20_000


@pytest.fixture(scope="module")
def sweep_records():
    cfg = th.SweepConfig(
        d_list=[5, 9, 13],
        eps_list=[pp / 5 for pp in SWEEP_PP],
        shots=SWEEP_SHOTS,
        seed=2024,
        workers=0,
    )
    return th.run_threshold(cfg)


@pytest.mark.slow
def test_subthreshold_suppression(sweep_records):
    # At 5 eps = 0.4%: rate(5) > rate(9) > rate(13) with >= 3 sigma.
    recs = {r.d: r for r in sweep_records if abs(r.pp_rate - 0.004) < 1e-12}
    rates, sigmas = {}, {}
    for d, r in recs.items():
        lo, hi = r.wilson_interval()
        rates[d] = r.rate_per_round
        sigmas[d] = (hi - lo) / (2 * 1.96)
    sep59 = (rates[5] - rates[9]) / math.hypot(sigmas[5], sigmas[9])
    sep913 = (rates[9] - rates[13]) / math.hypot(sigmas[9], sigmas[13])
    ok = sep59 >= 3.0 and sep913 >= 3.0
    _report("sub-threshold suppression at 5eps = 0.4% with >= 3 sigma",
            ok, f"rates {rates[5]:.2e} > {rates[9]:.2e} > {rates[13]:.2e}; "
                f"separations {sep59:.1f} sigma, {sep913:.1f} sigma")


@pytest.mark.slow
def test_threshold_crossing_in_band(sweep_records):
    est = th.estimate_threshold(sweep_records)
    assert est.found, "no curve crossing inside the scanned window"
    ok = 0.006 <= est.crossing <= 0.010
    pairs = {k: (f"{v[0]:.4f}+-{v[1]:.4f}" if v else None)
             for k, v in est.pairwise.items()}
    _report("threshold reproduction: crossing of logical-rate curves in "
            "[0.6%, 1.0%]", ok,
            f"estimate {est.crossing:.4f} +- {est.uncertainty:.4f}, pairwise {pairs}")
