from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, List, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from .constants import (
    HERMITIAN_TOL,
    RECONSTRUCTION_TOL,
    SYMMETRIC_TOL,
    UNITARY_TOL,
)
from .errors import FactorizationError, NotHermitian, NotSymmetric, UnknownEnsemble
from .utils import StringEnum, rng_for

logger = logging.getLogger(__name__)


class CMatrix:
    """Immutable dense n×n complex matrix."""

    __slots__ = ("_data",)

    def __init__(self, data: Any):
        if isinstance(data, CMatrix):
            data = data.data
        array = np.array(data, dtype=complex)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(
                f"Expected a square matrix, got array of shape {array.shape}."
            )
        if array.shape[0] < 1:
            raise ValueError("Matrix dimension must be at least 1.")
        if not np.all(np.isfinite(array)):
            raise ValueError("Matrix entries must be finite.")
        array.setflags(write=False)
        self._data = array

    @classmethod
    def identity(cls, n: int) -> CMatrix:
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> CMatrix:
        return cls(np.zeros((n, n)))

    @classmethod
    def diag(cls, values: Sequence[complex]) -> CMatrix:
        return cls(np.diag(np.asarray(values, dtype=complex)))

    @classmethod
    def unit(cls, i: int, j: int, n: int = 2) -> CMatrix:
        # matrix unit e_ij, zero-based indices
        array = np.zeros((n, n), dtype=complex)
        array[i, j] = 1.0
        return cls(array)

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def H(self) -> CMatrix:  # pylint: disable=invalid-name
        return CMatrix(self._data.conj().T)

    @property
    def T(self) -> CMatrix:
        return CMatrix(self._data.T)

    def trace(self) -> complex:
        return complex(np.trace(self._data))

    def det(self) -> complex:
        return complex(np.linalg.det(self._data))

    def kron(self, other: MatrixLike) -> CMatrix:
        return CMatrix(np.kron(self._data, as_array(other)))

    def is_close(self, other: MatrixLike, tol: float) -> bool:
        return bool(np.max(np.abs(self._data - as_array(other))) <= tol)

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __matmul__(self, other: MatrixLike) -> CMatrix:
        return CMatrix(self._data @ as_array(other))

    def __rmatmul__(self, other: MatrixLike) -> CMatrix:
        return CMatrix(as_array(other) @ self._data)

    def __add__(self, other: MatrixLike) -> CMatrix:
        return CMatrix(self._data + as_array(other))

    def __sub__(self, other: MatrixLike) -> CMatrix:
        return CMatrix(self._data - as_array(other))

    def __neg__(self) -> CMatrix:
        return CMatrix(-self._data)

    def __mul__(self, scalar: complex) -> CMatrix:
        return CMatrix(self._data * scalar)

    def __rmul__(self, scalar: complex) -> CMatrix:
        return CMatrix(scalar * self._data)

    def __truediv__(self, scalar: complex) -> CMatrix:
        return CMatrix(self._data / scalar)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CMatrix):
            return NotImplemented
        return bool(np.array_equal(self._data, other.data))

    __hash__ = None  # type: ignore

    def __repr__(self) -> str:
        return f"CMatrix(n={self.n}, {self._data.tolist()})"


MatrixLike = Union[CMatrix, np.ndarray, Sequence[Sequence[complex]]]


def as_array(m: MatrixLike) -> np.ndarray:
    if isinstance(m, CMatrix):
        return m.data
    return np.asarray(m, dtype=complex)


@dataclass(frozen=True)
class TakagiFactors:
    u: CMatrix
    delta: Tuple[float, ...]

    def reconstruct(self) -> CMatrix:
        u = self.u.data
        return CMatrix(u @ np.diag(self.delta) @ u.T)

    def residual(self, m: MatrixLike) -> float:
        return float(np.max(np.abs(self.reconstruct().data - as_array(m))))

    def unitarity_residual(self) -> float:
        u = self.u.data
        return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def op_norm(m: MatrixLike) -> float:
    return float(np.linalg.norm(as_array(m), 2))


def hs_norm(m: MatrixLike) -> float:
    return float(np.linalg.norm(as_array(m), "fro"))


def hermitian_eigs(m: MatrixLike) -> List[float]:
    array = as_array(m)
    if not is_hermitian(array):
        raise NotHermitian(
            f"Matrix is not Hermitian (‖m − m*‖ = "
            f"{np.max(np.abs(array - array.conj().T)):.3e})."
        )
    eigenvalues = np.linalg.eigvalsh((array + array.conj().T) / 2)
    return [float(value) for value in eigenvalues[::-1]]


def svd(m: MatrixLike) -> Tuple[CMatrix, List[float], CMatrix]:
    """Return (u, s, v) with m = u·diag(s)·v*, s descending."""
    u, s, vh = np.linalg.svd(as_array(m))
    return CMatrix(u), [float(value) for value in s], CMatrix(vh.conj().T)


def takagi(m: MatrixLike) -> TakagiFactors:
    array = as_array(m)
    if not is_symmetric(array):
        raise NotSymmetric(
            f"Takagi factorization needs a complex symmetric matrix "
            f"(‖m − mᵗ‖ = {np.max(np.abs(array - array.T)):.3e})."
        )
    array = (array + array.T) / 2
    delta, u = _takagi_factor(array)
    factors = TakagiFactors(CMatrix(u), tuple(float(d) for d in delta))

    residual = factors.residual(array)
    scale = op_norm(array) or 1.0
    logger.debug(f"Takagi residual {residual:.3e} at scale {scale:.3e}")
    if (
        residual > RECONSTRUCTION_TOL * scale
        or factors.unitarity_residual() > UNITARY_TOL * array.shape[0]
    ):
        raise FactorizationError(
            f"Takagi factorization residual {residual:.3e} exceeds "
            f"{RECONSTRUCTION_TOL:.0e}·‖m‖.",
            residual,
        )
    return factors


def _takagi_factor(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # m·ū = δ·u with u = x + iy is the real symmetric eigenproblem
    # [[Re m, Im m], [Im m, −Re m]]·[x; y] = δ·[x; y]. Its spectrum is ±δ,
    # and the top half gives the Takagi vectors whatever the gaps between δ.
    n = m.shape[0]
    embedding = np.block([[m.real, m.imag], [m.imag, -m.real]])
    eigenvalues, vectors = scipy.linalg.eigh(embedding)
    top = vectors[:, ::-1][:, :n]
    delta = np.clip(eigenvalues[::-1][:n], 0.0, None)

    # null and near-null columns may come out complex-dependent
    u, _ = scipy.linalg.polar(top[:n] + 1j * top[n:])
    return delta, u


def is_hermitian(m: MatrixLike, tol: float = HERMITIAN_TOL) -> bool:
    array = as_array(m)
    scale = max(1.0, float(np.max(np.abs(array))))
    return bool(np.max(np.abs(array - array.conj().T)) <= tol * scale)


def is_symmetric(m: MatrixLike, tol: float = SYMMETRIC_TOL) -> bool:
    array = as_array(m)
    scale = max(1.0, float(np.max(np.abs(array))))
    return bool(np.max(np.abs(array - array.T)) <= tol * scale)


def commutator_norm(a: MatrixLike, b: MatrixLike) -> float:
    a_array, b_array = as_array(a), as_array(b)
    return op_norm(a_array @ b_array - b_array @ a_array)


def normality_residual(m: MatrixLike) -> float:
    array = as_array(m)
    return op_norm(array @ array.conj().T - array.conj().T @ array)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


class Ensemble(StringEnum):
    GINIBRE = "ginibre"
    UNITARY = "unitary"
    DIAGONAL = "diagonal"
    COMPLEX_SYMMETRIC = "complex-symmetric"
    HERMITIAN = "hermitian"
    COMMUTING_PAIR = "commuting-pair"
    COMMUTING_NORMAL_PAIR = "commuting-normal-pair"
    SELFADJOINT_JORDAN_PAIR = "selfadjoint-jordan-pair"

    @classmethod
    def from_tag(cls, kind: Union[str, Ensemble]) -> Ensemble:
        if isinstance(kind, Ensemble):
            return kind
        try:
            return cls(kind)
        except ValueError as e:
            raise UnknownEnsemble(
                f"Unknown ensemble `{kind}`, expected one of "
                f"{', '.join(str(member) for member in cls)}."
            ) from e

    @property
    def is_pair(self) -> bool:
        return self in _PAIR_ENSEMBLES


_PAIR_ENSEMBLES = (
    Ensemble.COMMUTING_PAIR,
    Ensemble.COMMUTING_NORMAL_PAIR,
    Ensemble.SELFADJOINT_JORDAN_PAIR,
)

RandomDraw = Union[CMatrix, Tuple[CMatrix, CMatrix]]


def random_matrix(kind: Union[str, Ensemble], n: int, seed: int) -> RandomDraw:
    ensemble = Ensemble.from_tag(kind)
    rng = rng_for(seed)
    if ensemble.is_pair:
        return _draw_pair(ensemble, n, rng)
    return CMatrix(_draw(ensemble, n, rng))


def random_pair(
    kind: Union[str, Ensemble], n: int, seed: int
) -> Tuple[CMatrix, CMatrix]:
    ensemble = Ensemble.from_tag(kind)
    rng = rng_for(seed)
    if ensemble.is_pair:
        return _draw_pair(ensemble, n, rng)
    return CMatrix(_draw(ensemble, n, rng)), CMatrix(_draw(ensemble, n, rng))


def _ginibre(n: int, rng: np.random.Generator) -> np.ndarray:
    return (
        rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    ) / np.sqrt(2)


def _draw(ensemble: Ensemble, n: int, rng: np.random.Generator) -> np.ndarray:
    if ensemble is Ensemble.GINIBRE:
        return _ginibre(n, rng)
    if ensemble is Ensemble.UNITARY:
        return random_unitary(n, rng)
    if ensemble is Ensemble.DIAGONAL:
        return np.diag(np.diag(_ginibre(n, rng)))
    if ensemble is Ensemble.COMPLEX_SYMMETRIC:
        g = _ginibre(n, rng)
        return (g + g.T) / 2
    if ensemble is Ensemble.HERMITIAN:
        g = _ginibre(n, rng)
        return (g + g.conj().T) / 2

    raise UnknownEnsemble(f"Ensemble `{ensemble}` draws pairs, not matrices.")


def _draw_pair(
    ensemble: Ensemble, n: int, rng: np.random.Generator
) -> Tuple[CMatrix, CMatrix]:
    if ensemble is Ensemble.COMMUTING_PAIR:
        # b is a polynomial in a, so ab = ba up to rounding
        a = _ginibre(n, rng)
        c0, c1 = _ginibre(2, rng)[0]
        return CMatrix(a), CMatrix(c0 * np.eye(n) + c1 * a)
    if ensemble is Ensemble.COMMUTING_NORMAL_PAIR:
        u = random_unitary(n, rng)
        lambdas, mus = _ginibre(max(n, 2), rng)[:2, :n]
        a = u @ np.diag(lambdas) @ u.conj().T
        b = u @ np.diag(mus) @ u.conj().T
        return CMatrix(a), CMatrix(b)
    if ensemble is Ensemble.SELFADJOINT_JORDAN_PAIR:
        return CMatrix(_ginibre(n, rng)), CMatrix(_ginibre(n, rng))

    raise UnknownEnsemble(f"Ensemble `{ensemble}` draws single matrices.")
