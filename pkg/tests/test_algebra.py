import random

import numpy as np
import pytest

from majcc.algebra import (
    IDENTITY,
    SupportMatrix,
    adjoint,
    commutes,
    gf2_in_span,
    gf2_rank,
    hermitian_monomial,
    hermitian_phase,
    is_hermitian,
    mono_mul,
    monomial,
)


def dense_gf2_rank(rows, n_cols):
    """Independent oracle: plain Gaussian elimination on a dense 0/1 matrix."""
    m = np.zeros((len(rows), n_cols), dtype=np.int64)
    for i, row in enumerate(rows):
        for j in row:
            m[i, j] = 1
    rank = 0
    col = 0
    while rank < len(rows) and col < n_cols:
        pivot = None
        for r in range(rank, len(rows)):
            if m[r, col]:
                pivot = r
                break
        if pivot is None:
            col += 1
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(len(rows)):
            if r != rank and m[r, col]:
                m[r] = (m[r] + m[rank]) % 2
        rank += 1
        col += 1
    return rank


def random_monomial(rng, n_modes=64, max_weight=10):
    w = rng.randrange(0, max_weight + 1)
    return monomial(rng.sample(range(n_modes), w), rng.randrange(4))


def test_square_of_single_mode_is_identity():
    c1 = monomial([1])
    assert mono_mul(c1, c1) == IDENTITY


def test_adjacent_cancellation_no_sign():
    # (c1 c2)(c2 c3) = c1 c3 with phase +1: the c2 pair is adjacent.
    assert mono_mul(monomial([1, 2]), monomial([2, 3])) == monomial([1, 3])


def test_one_swap_gives_minus():
    # Product given in order (c2, c1): canonical form is -c1c2.
    assert mono_mul(monomial([2]), monomial([1])) == monomial([1, 2], 2)


def test_anticommutation_all_pairs():
    for i in range(5):
        for j in range(5):
            if i == j:
                continue
            ab = mono_mul(monomial([i]), monomial([j]))
            ba = mono_mul(monomial([j]), monomial([i]))
            assert ab.support == ba.support
            assert (ab.phase - ba.phase) % 4 == 2  # differ by -1


def test_associativity_random():
    rng = random.Random(7)
    for _ in range(1000):
        a, b, c = (random_monomial(rng) for _ in range(3))
        assert mono_mul(mono_mul(a, b), c) == mono_mul(a, mono_mul(b, c))


def test_mono_mul_matches_matrix_representation():
    # Cross-check the symbolic product against explicit Jordan-Wigner matrices.
    from majcc.exactsim import build_space

    space = build_space(6)
    rng = random.Random(3)
    for _ in range(40):
        a = random_monomial(rng, n_modes=6, max_weight=4)
        b = random_monomial(rng, n_modes=6, max_weight=4)
        prod = mono_mul(a, b)
        lhs = space.monomial_matrix(a) @ space.monomial_matrix(b)
        rhs = space.monomial_matrix(prod)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_hermitian_phase_values():
    assert hermitian_phase([0, 1]) == 1
    assert hermitian_phase([0, 1, 2, 3]) == 2
    assert hermitian_phase(range(6)) == 3
    assert hermitian_phase(range(8)) == 0


def test_hermitian_phase_rejects_odd():
    with pytest.raises(ValueError):
        hermitian_phase([0, 1, 2])


def test_hermitian_monomial_squares_to_plus_one():
    rng = random.Random(11)
    for _ in range(200):
        w = 2 * rng.randrange(1, 8)
        support = rng.sample(range(40), w)
        h = hermitian_monomial(support)
        assert is_hermitian(h)
        assert mono_mul(h, h) == IDENTITY


def test_adjoint_involution():
    rng = random.Random(13)
    for _ in range(200):
        a = random_monomial(rng)
        assert adjoint(adjoint(a)) == a


def test_commutes_agrees_with_products():
    rng = random.Random(17)
    for _ in range(1000):
        a, b = random_monomial(rng), random_monomial(rng)
        ab, ba = mono_mul(a, b), mono_mul(b, a)
        assert commutes(a, b) == (ab == ba)


def test_disjoint_even_monomials_commute():
    assert commutes(monomial([0, 1]), monomial([2, 3]))
    assert not commutes(monomial([1, 2]), monomial([2, 3]))


def test_gf2_rank_trivia():
    assert gf2_rank(SupportMatrix([])) == 0
    assert gf2_rank(SupportMatrix([[1, 5], [1, 5]])) == 1


def test_gf2_rank_against_dense_oracle():
    rng = random.Random(23)
    for _ in range(100):
        n_cols = rng.randrange(1, 24)
        rows = [
            set(rng.sample(range(n_cols), rng.randrange(0, n_cols + 1)))
            for _ in range(rng.randrange(0, 14))
        ]
        assert gf2_rank(SupportMatrix(rows)) == dense_gf2_rank(rows, n_cols)


def test_gf2_in_span():
    m = SupportMatrix([[0, 1], [1, 2]])
    assert gf2_in_span(m, [0, 2])
    assert not gf2_in_span(m, [0])
