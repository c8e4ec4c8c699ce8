from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bentchain.pauli import (PauliString, apply_to_state, commutes, conjugate,
                             multiply, parse, render)

MATS = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def dense(p: PauliString) -> np.ndarray:
    # independent of PauliString.to_matrix: rebuilt from the letters
    return (1j ** p.phase) * reduce(np.kron, [MATS[f] for f in p.factors])


def paulis(n):
    return st.builds(
        lambda f, k: PauliString.from_factors(f, k),
        st.text(alphabet="IXYZ", min_size=n, max_size=n),
        st.integers(0, 3),
    )


sized = st.integers(1, 4).flatmap(lambda n: st.tuples(paulis(n), paulis(n), paulis(n)))


def test_x_times_y_is_iz():
    a = PauliString.from_factors("XI")
    b = PauliString.from_factors("YI")
    assert multiply(a, b) == PauliString.from_factors("ZI", phase=1)


def test_identity_is_neutral():
    p = parse("-i Y1 X3", 3)
    assert multiply(p, PauliString.identity(3)) == p
    assert multiply(PauliString.identity(3), p) == p


def test_zz_squares_to_identity():
    zz = PauliString.from_factors("ZZ")
    assert multiply(zz, zz) == PauliString.identity(2)


def test_size_mismatch():
    with pytest.raises(ValueError):
        multiply(PauliString.identity(2), PauliString.identity(3))
    with pytest.raises(ValueError):
        conjugate(PauliString.identity(2), PauliString.identity(3))
    with pytest.raises(ValueError):
        apply_to_state(PauliString.identity(2), np.ones(8))


@pytest.mark.parametrize("g, h, want", [
    ("Z1", "X1 X2", "-X1 X2"),
    ("X1 X2", "X1 X2", "X1 X2"),
    ("X1", "Z1", "-Z1"),
    ("Y1", "Z1", "-Z1"),
])
def test_conjugation_examples(g, h, want):
    assert conjugate(parse(g, 2), parse(h, 2)) == parse(want, 2)


def test_flip_first_qubit():
    psi = np.zeros(8, dtype=complex)
    psi[0b100] = 1
    out = apply_to_state(parse("X1", 3), psi)
    assert out[0] == 1 and np.count_nonzero(out) == 1


def test_phase_flip_on_superposition():
    psi = np.zeros(4, dtype=complex)
    psi[0b00] = psi[0b10] = 1 / np.sqrt(2)
    out = apply_to_state(parse("Z1", 2), psi)
    assert out[0b00] == pytest.approx(1 / np.sqrt(2))
    assert out[0b10] == pytest.approx(-1 / np.sqrt(2))


def test_identity_on_state():
    rng = np.random.default_rng(3)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.array_equal(apply_to_state(PauliString.identity(3), psi), psi)


@pytest.mark.parametrize("text, n", [
    ("X1 X2", 3), ("Z3", 3), ("-i Y2 X5", 5), ("i Z1", 1), ("-X1", 2), ("I", 4),
])
def test_render_parse_roundtrip(text, n):
    p = parse(text, n)
    assert render(p) == text
    assert parse(render(p), n) == p


def test_parse_accepts_plus_prefixes():
    assert parse("+ X1", 2) == parse("X1", 2)
    assert parse("+i X1", 2) == parse("i X1", 2)


@pytest.mark.parametrize("bad", ["X0", "Q1", "X1 X1", "X9"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse(bad, 3)


@given(sized)
@settings(max_examples=300, deadline=None)
def test_group_closure_and_associativity(abc):
    a, b, c = abc
    ab = multiply(a, b)
    assert ab.phase in range(4)
    assert multiply(ab, c) == multiply(a, multiply(b, c))


@given(sized)
@settings(max_examples=300, deadline=None)
def test_products_match_dense_matrices(abc):
    a, b, _ = abc
    assert np.array_equal(dense(multiply(a, b)), dense(a) @ dense(b))


@given(sized)
@settings(max_examples=300, deadline=None)
def test_conjugation_matches_dense_and_is_involutive(abc):
    g, h, _ = abc
    c = conjugate(g, h)
    assert c.factors == h.factors
    assert np.array_equal(dense(c), dense(g).conj().T @ dense(h) @ dense(g))
    assert conjugate(g, c) == h
    assert commutes(g, h) == (c == h)


@given(sized, st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_apply_matches_dense_and_keeps_norm(abc, seed):
    p = abc[0]
    rng = np.random.default_rng(seed)
    dim = 2 ** p.n_qubits
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    out = apply_to_state(p, psi)
    assert np.array_equal(out, dense(p) @ psi)
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(psi), rel=1e-15)


@given(paulis(3))
def test_hermitian_strings_square_to_phase_squared(p):
    sq = multiply(p, p)
    assert sq.is_identity()
    assert sq.phase == (2 * p.phase) % 4
    if not p.is_identity():
        assert np.trace(dense(p)) == 0
