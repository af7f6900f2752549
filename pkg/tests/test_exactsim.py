import numpy as np
import pytest

from majcc.exactsim import (
    build_space,
    distillation_monte_carlo,
    pair_rule_correction,
    simulate_stab_meas_circuit,
    stab_meas_deviation,
    transfer_channel,
    verify_distillation,
    verify_duplication,
    verify_exchange_and_phase,
    verify_tgate_circuit,
    verify_transfer_circuit,
    y_state,
)


def test_build_space_clifford_relations():
    space = build_space(8)
    for i in range(8):
        for j in range(8):
            anti = space.c[i] @ space.c[j] + space.c[j] @ space.c[i]
            want = 2 * np.eye(space.dim) if i == j else np.zeros((space.dim,) * 2)
            assert np.allclose(anti, want, atol=1e-12)
        assert np.allclose(space.c[i], space.c[i].conj().T, atol=1e-12)


def test_build_space_rejects_bad_counts():
    with pytest.raises(ValueError):
        build_space(7)
    with pytest.raises(ValueError):
        build_space(26)


def test_paired_product_squares_to_identity():
    space = build_space(4)
    op = 1j * space.c[0] @ space.c[1]
    assert np.allclose(op @ op, np.eye(space.dim), atol=1e-12)


def test_verify_exchange_and_phase():
    report = verify_exchange_and_phase()
    assert report.ok, str(report)


def test_verify_transfer_circuit():
    report = verify_transfer_circuit()
    assert report.ok, str(report)


def test_verify_tgate_circuit():
    report = verify_tgate_circuit()
    assert report.ok, str(report)


def test_transfer_trace_preserving_even_when_destructive_phase():
    space = build_space(6)
    ch = transfer_channel(space, 0, 1, 2)
    assert ch.trace_defect() < 1e-10


def test_stab_meas_clean_circuit():
    report = simulate_stab_meas_circuit()
    assert report.ok, str(report)


def test_stab_meas_recorded_flip_only():
    report = simulate_stab_meas_circuit({"upsilon": [2]})
    assert report.ok, str(report)


def test_stab_meas_eta_flip_injects_pair_error():
    # Flipping the eta23 record alone must be equivalent to a (c1, c2) data
    # error after the clean projection; the report's residual prediction is
    # exactly pair_rule_correction.
    report = simulate_stab_meas_circuit({"eta": [1]})
    assert report.ok, str(report)
    assert pair_rule_correction([0, 1, 0, 0]) == (0, 1)
    assert pair_rule_correction([1, 0, 0, 0]) == ()
    assert pair_rule_correction([0, 0, 1, 0]) == (0, 1, 2, 3)
    assert pair_rule_correction([0, 0, 0, 1]) == (0, 1, 2, 3, 4, 5)


@pytest.mark.parametrize("fault", [
    ("init", (8,)),          # a1 flip at initialization
    ("init", (9,)),          # a2 flip
    ("init", (0,)),          # data flip before the round
    ("init", (0, 9)),        # correlated data+ancilla
    ("mid", (9,)),           # a2 flip after the projections
    ("mid", (12,)),          # a5 flip
    ("mid", (3,)),           # data flip after the projections
    ("end", (5,)),           # data flip after everything
])
def test_stab_meas_single_faults_follow_deviation_rules(fault):
    report = simulate_stab_meas_circuit({"state": fault})
    assert report.ok, str(report)


def test_stab_meas_rejects_bad_flips():
    with pytest.raises(ValueError):
        simulate_stab_meas_circuit({"upsilon": [7]})
    with pytest.raises(ValueError):
        simulate_stab_meas_circuit({"state": ("nowhere", (0,))})
    with pytest.raises(ValueError):
        simulate_stab_meas_circuit({"bogus": []})


def test_stab_meas_deviation_table():
    # a2 (mode 9) sits in projection quad 1 and pair eta23.
    dups, dets = stab_meas_deviation(("init", (9,)))
    assert dups == [1, 0, 0, 0]
    assert dets == [0, 1, 0, 0]
    # a1 (mode 8) sits in quad 1 and pair eta81.
    dups, dets = stab_meas_deviation(("init", (8,)))
    assert dups == [1, 0, 0, 0]
    assert dets == [1, 0, 0, 0]
    # mid-slot ancilla faults no longer touch the projections.
    dups, dets = stab_meas_deviation(("mid", (13,)))
    assert dups == [0, 0, 0, 0]
    assert dets == [0, 0, 0, 1]


def test_verify_distillation():
    report = verify_distillation(0.1)
    assert report.ok, str(report)


def test_distillation_monte_carlo_value():
    err, accepted = distillation_monte_carlo(0.1, accepted_target=100_000, seed=11)
    assert accepted >= 100_000
    assert abs(err - 0.1 ** 2 / (1 - 0.2 + 0.02)) < 1e-3


def test_distillation_zero_error_input():
    err, _ = distillation_monte_carlo(0.0, accepted_target=1000)
    assert err == 0.0


def test_verify_duplication():
    report = verify_duplication()
    assert report.ok, str(report)


def test_four_mode_qubit_encoding_pauli_algebra():
    # stabilizer c1c2c3c4 with X = i c1 c4, Z = i c3 c4: X^2 = Z^2 = 1,
    # {X, Z} = 0, and X Z = -i Y closes the algebra on the code space.
    from majcc.exactsim import qubit_encoding

    space = build_space(4)
    stab, sx, sz = qubit_encoding(space, 0, 1, 2, 3)
    eye = np.eye(space.dim)
    assert np.allclose(sx @ sx, eye, atol=1e-12)
    assert np.allclose(sz @ sz, eye, atol=1e-12)
    assert np.allclose(sx @ sz + sz @ sx, 0 * eye, atol=1e-12)
    assert np.allclose(stab @ stab, eye, atol=1e-12)
    assert np.allclose(stab @ sx - sx @ stab, 0 * eye, atol=1e-12)
    assert np.allclose(stab @ sz - sz @ stab, 0 * eye, atol=1e-12)
    sy = 1j * (sx @ sz)
    assert np.allclose(sy @ sy, eye, atol=1e-12)
    assert np.allclose(sx @ sy - 1j * sz, 0 * eye, atol=1e-12)


def test_y_state_is_qubit_y():
    from majcc.exactsim import encoded_qubit_amplitudes

    space = build_space(4)
    rho = y_state(space, 0, 1, 2, 3)
    # Encoding per the magic-state discussion: stabilizer abcd, X = i a d,
    # Z = i c d; the Y state has sigma_y = i a c = +1.
    x, y, z, s = encoded_qubit_amplitudes(space, rho, 0, 1, 2, 3)
    assert abs(s - 1) < 1e-9
    assert abs(x) < 1e-9 and abs(z) < 1e-9 and abs(y - 1) < 1e-9
