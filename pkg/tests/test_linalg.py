import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jemo.errors import NotHermitian, NotSymmetric, UnknownEnsemble
from jemo.linalg import (
    CMatrix,
    Ensemble,
    commutator_norm,
    hermitian_eigs,
    hs_norm,
    is_hermitian,
    is_symmetric,
    normality_residual,
    op_norm,
    random_matrix,
    random_pair,
    random_unitary,
    svd,
    takagi,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_can_instantiate_matrix() -> None:
    # when
    m = CMatrix([[1, 2j], [3, 4]])

    # then
    assert m.n == 2
    assert m.data.dtype == complex
    assert m.data[0, 1] == 2j


@pytest.mark.parametrize(
    "given_data",
    [
        [[1, 2, 3], [4, 5, 6]],
        [1, 2],
        np.zeros((0, 0)),
        [[1, np.nan], [0, 1]],
        [[np.inf, 0], [0, 1]],
    ],
)
def test_fail_instantiation_on_invalid_data(given_data) -> None:
    with pytest.raises(ValueError):
        CMatrix(given_data)


def test_matrix_is_immutable() -> None:
    # given
    m = CMatrix.identity(2)

    # then
    with pytest.raises(ValueError):
        m.data[0, 0] = 5


def test_matrix_arithmetic() -> None:
    # given
    a = CMatrix([[1, 1j], [0, 2]])
    b = CMatrix.identity(2)

    # then
    assert a @ b == a
    assert (a + b).data[1, 1] == 3
    assert (a - a) == CMatrix.zeros(2)
    assert (2 * a).data[0, 1] == 2j
    assert a.H.data[1, 0] == -1j
    assert a.T.data[1, 0] == 1j
    assert a.trace() == 3
    assert a.det() == pytest.approx(2)
    assert a.kron(b).n == 4


@pytest.mark.parametrize(
    "given, expected",
    [
        [np.eye(2), 1.0],
        [[[0, 2], [0, 0]], 2.0],
        [np.diag([1, 0.3]), 1.0],
    ],
)
def test_op_norm(given, expected: float) -> None:
    assert op_norm(CMatrix(given)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "given, expected",
    [
        [np.eye(2), np.sqrt(2)],
        [[[0, 2], [0, 0]], 2.0],
        [[[1, 1j], [1, -1]], 2.0],
    ],
)
def test_hs_norm(given, expected: float) -> None:
    assert hs_norm(CMatrix(given)) == pytest.approx(expected, abs=1e-15)


def test_hermitian_eigs_are_descending() -> None:
    # when
    eigenvalues = hermitian_eigs([[2, 1j], [-1j, 2]])

    # then
    assert eigenvalues == pytest.approx([3, 1])


def test_fail_hermitian_eigs_on_non_hermitian() -> None:
    with pytest.raises(NotHermitian):
        hermitian_eigs([[0, 1], [0, 0]])


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_svd_reconstructs(seed: int) -> None:
    # given
    m = random_matrix(Ensemble.GINIBRE, 3, seed)

    # when
    u, s, v = svd(m)

    # then
    assert s == sorted(s, reverse=True)
    assert (u @ CMatrix.diag(s) @ v.H).is_close(m, 1e-12)


@pytest.mark.parametrize(
    "given",
    [
        np.eye(2),
        [[0, 1], [1, 0]],
        [[1, 1j], [1j, -1]],
        np.zeros((2, 2)),
        [[2j, 0], [0, 2j]],
    ],
)
def test_takagi_on_structured_matrices(given) -> None:
    # when
    factors = takagi(given)

    # then
    assert factors.residual(given) <= 1e-10
    assert factors.unitarity_residual() <= 1e-12
    assert list(factors.delta) == sorted(factors.delta, reverse=True)
    assert all(d >= 0 for d in factors.delta)


@given(seeds, st.integers(min_value=1, max_value=4))
@settings(max_examples=50, deadline=None)
def test_takagi_on_random_symmetric(seed: int, n: int) -> None:
    # given
    m = random_matrix(Ensemble.COMPLEX_SYMMETRIC, n, seed)

    # when
    factors = takagi(m)

    # then
    assert factors.residual(m) <= 1e-10
    assert factors.unitarity_residual() <= 1e-12
    assert np.allclose(factors.delta, np.linalg.svd(m.data, compute_uv=False))


@given(seeds, st.sampled_from([1e-5, 1e-6, 1e-8, 1e-9, 1e-11, 0.0]))
@settings(max_examples=50, deadline=None)
def test_takagi_on_clustered_singular_values(seed: int, gap: float) -> None:
    # given
    q = random_unitary(2, np.random.default_rng(seed))
    m = q @ np.diag([1.0, 1.0 + gap]) @ q.T

    # when
    factors = takagi(m)

    # then
    assert factors.residual(m) <= 1e-10
    assert factors.unitarity_residual() <= 1e-12
    assert factors.delta == pytest.approx((1.0 + gap, 1.0), abs=1e-12)


def test_fail_takagi_on_non_symmetric() -> None:
    with pytest.raises(NotSymmetric):
        takagi([[0, 1], [0, 0]])


def test_structure_predicates(e11, e12) -> None:
    # then
    assert is_hermitian(e11)
    assert not is_hermitian(e12)
    assert is_symmetric([[1, 1j], [1j, 0]])
    assert not is_symmetric(e12)
    assert commutator_norm(e11, e12) == pytest.approx(1)
    assert normality_residual(e12) == pytest.approx(1)


@given(seeds, st.integers(min_value=1, max_value=4))
@settings(max_examples=25, deadline=None)
def test_random_unitary_is_unitary(seed: int, n: int) -> None:
    # when
    u = random_unitary(n, np.random.default_rng(seed))

    # then
    assert np.allclose(u @ u.conj().T, np.eye(n), atol=1e-12)


@pytest.mark.parametrize("kind", [str(ensemble) for ensemble in Ensemble])
def test_random_pair_is_deterministic(kind: str) -> None:
    # when
    first = random_pair(kind, 2, 7)
    second = random_pair(kind, 2, 7)
    other = random_pair(kind, 2, 8)

    # then
    assert first[0] == second[0] and first[1] == second[1]
    assert not (first[0] == other[0] and first[1] == other[1])


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_ensembles_have_their_structure(seed: int) -> None:
    # given
    symmetric = random_matrix(Ensemble.COMPLEX_SYMMETRIC, 3, seed)
    hermitian = random_matrix(Ensemble.HERMITIAN, 3, seed)
    diagonal = random_matrix(Ensemble.DIAGONAL, 3, seed)
    unitary = random_matrix(Ensemble.UNITARY, 3, seed)
    commuting = random_pair(Ensemble.COMMUTING_PAIR, 2, seed)
    normal = random_pair(Ensemble.COMMUTING_NORMAL_PAIR, 2, seed)

    # then
    assert is_symmetric(symmetric)
    assert is_hermitian(hermitian)
    assert np.count_nonzero(diagonal.data - np.diag(np.diag(diagonal.data))) == 0
    assert np.allclose(unitary.data @ unitary.H.data, np.eye(3), atol=1e-12)
    assert commutator_norm(*commuting) <= 1e-10 * (1 + op_norm(commuting[0])) ** 2
    assert commutator_norm(*normal) <= 1e-10 * (1 + op_norm(normal[0]) + op_norm(normal[1])) ** 2
    assert normality_residual(normal[0]) <= 1e-10 * (1 + op_norm(normal[0])) ** 2


def test_random_matrix_returns_pairs_for_pair_ensembles() -> None:
    # when
    draw = random_matrix(Ensemble.COMMUTING_PAIR, 2, 1)

    # then
    assert isinstance(draw, tuple)
    assert len(draw) == 2


def test_fail_on_unknown_ensemble() -> None:
    with pytest.raises(UnknownEnsemble):
        random_pair("wishart", 2, 0)
