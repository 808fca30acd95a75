from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .constants import (
    COMMUTATOR_TOL,
    LOG_GRID_BOUNDS,
    LOG_GRID_POINTS,
    NORMALITY_TOL,
    NORMALIZATION_TOL,
    P_GRID_POINTS,
    P_MAX,
    P_MAX_DOUBLINGS,
    RANK_TOL,
    REP_RECONSTRUCTION_TOL,
    THETA_GRID_POINTS,
)
from .errors import (
    DependentPair,
    DimMismatch,
    FactorizationError,
    NotCommuting,
    NotHermitian,
    NotNormal,
    NotNormalized,
    NotSymmetric,
)
from .haagerup import ElemOp, Term
from .jordan import dependent_ratio
from .linalg import (
    CMatrix,
    MatrixLike,
    as_array,
    commutator_norm,
    hs_norm,
    is_hermitian,
    is_symmetric,
    normality_residual,
    op_norm,
)

logger = logging.getLogger(__name__)

# generic direction for simultaneous diagonalization of commuting normal pairs
_SCHUR_MIX = np.sqrt(2.0) + 1j * np.sqrt(3.0)


@dataclass
class SelfAdjointWitness:
    value: float
    p: float
    theta: float
    r: float
    s: float
    t: float
    boundary_hit: bool = False


def _require_2x2(*matrices: CMatrix) -> None:
    for m in matrices:
        if m.n != 2:
            raise DimMismatch(f"Formula holds for 2×2 matrices, got {m.n}×{m.n}.", 2, m.n)


def _top_eigenvalues(stack: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(stack)[..., -1]


def golden_section(
    f: Callable[[float], float], low: float, high: float, xatol: float = 1e-12
) -> Tuple[float, float]:
    """(x, f(x)) minimizing a unimodal f on [low, high]; kinks are fine."""
    ratio = (np.sqrt(5.0) - 1) / 2
    c, d = high - ratio * (high - low), low + ratio * (high - low)
    fc, fd = f(c), f(d)
    while high - low > xatol:
        if fc < fd:
            high, d, fd = d, c, fc
            c = high - ratio * (high - low)
            fc = f(c)
        else:
            low, c, fc = c, d, fd
            d = low + ratio * (high - low)
            fd = f(d)
    x = (low + high) / 2
    return x, f(x)


def cb_symmetric_formula(a: MatrixLike, b: MatrixLike) -> float:
    """inf over x > 0 of ‖x·aa* + (1/x)·bb*‖ for symmetric a, b."""
    a, b = CMatrix(a), CMatrix(b)
    _require_2x2(a, b)
    if not (is_symmetric(a) and is_symmetric(b)):
        raise NotSymmetric("Both coefficients must be complex symmetric.")

    aa, bb = (a @ a.H).data, (b @ b.H).data

    def objective(t: float) -> float:
        return float(np.linalg.eigvalsh(np.exp(t) * aa + np.exp(-t) * bb)[-1])

    grid = np.linspace(*np.log(LOG_GRID_BOUNDS), LOG_GRID_POINTS)
    values = _top_eigenvalues(
        np.exp(grid)[:, None, None] * aa + np.exp(-grid)[:, None, None] * bb
    )
    best = int(np.argmin(values))
    low, high = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
    _, refined = golden_section(objective, low, high)
    return float(min(values[best], refined))


def diagonal_haagerup_minmax(l2: float, m1: float) -> float:
    """min over x > 0 of max(x + m₁²/x, l₂²·x + 1/x)."""
    l2, m1 = abs(l2), abs(m1)

    def envelope(x: float) -> float:
        return max(x + m1**2 / x, l2**2 * x + 1 / x)

    candidates: List[float] = []
    if m1 > 0:
        candidates.append(m1)
    if l2 > 0:
        candidates.append(1 / l2)
    if l2 < 1 and m1 < 1:
        candidates.append(np.sqrt((1 - m1**2) / (1 - l2**2)))
    if not candidates:
        candidates.append(1.0)
    return float(min(envelope(x) for x in candidates))


def diag_commuting_formula(
    l1: complex, l2: complex, m1: complex, m2: complex
) -> float:
    moduli_a = np.abs([l1, l2])
    moduli_b = np.abs([m1, m2])
    for name, moduli in (("a", moduli_a), ("b", moduli_b)):
        if abs(moduli.max() - 1.0) > NORMALIZATION_TOL:
            raise NotNormalized(
                f"Diagonal of `{name}` must have maximum modulus 1, "
                f"got {moduli.max():.15g}."
            )

    peaks_a = set(np.flatnonzero(moduli_a >= 1.0 - NORMALIZATION_TOL))
    peaks_b = set(np.flatnonzero(moduli_b >= 1.0 - NORMALIZATION_TOL))
    if peaks_a & peaks_b:
        return 2.0

    # relabel so |λ₁| = 1 = |μ₂|, then swap a and b so |μ₁| ≤ |λ₂|
    if 0 not in peaks_a:
        moduli_a, moduli_b = moduli_a[::-1], moduli_b[::-1]
    lam2, mu1 = max(moduli_a[1], moduli_b[0]), min(moduli_a[1], moduli_b[0])

    if lam2 >= 1 / np.sqrt(2) and mu1**2 < 2 - lam2**-2:
        return float(2 * lam2)
    return float(
        (1 - mu1**2 * lam2**2) / np.sqrt((1 - mu1**2) * (1 - lam2**2))
    )


def simultaneous_diagonal(
    a: MatrixLike, b: MatrixLike
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unitary z and the diagonals of z*·a·z, z*·b·z for commuting normal a, b."""
    a, b = as_array(a), as_array(b)
    _, z = scipy.linalg.schur(a + _SCHUR_MIX * b, output="complex")
    return z, np.diag(z.conj().T @ a @ z), np.diag(z.conj().T @ b @ z)


def normal_commuting_formula(a: MatrixLike, b: MatrixLike) -> float:
    a, b = CMatrix(a), CMatrix(b)
    _require_2x2(a, b)
    scale = max(1.0, op_norm(a), op_norm(b))
    for name, m in (("a", a), ("b", b)):
        if normality_residual(m) > NORMALITY_TOL * scale**2:
            raise NotNormal(f"`{name}` is not normal.")
    if commutator_norm(a, b) > COMMUTATOR_TOL * scale**2:
        raise NotCommuting("`a` and `b` do not commute.")

    norm_a, norm_b = op_norm(a), op_norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    if hs_norm(a) / norm_a < hs_norm(b) / norm_b:
        a, b, norm_a, norm_b = b, a, norm_b, norm_a

    _, lambdas, mus = simultaneous_diagonal(a, b)
    peaks_a = set(np.flatnonzero(np.abs(lambdas) >= norm_a * (1 - COMMUTATOR_TOL)))
    peaks_b = set(np.flatnonzero(np.abs(mus) >= norm_b * (1 - COMMUTATOR_TOL)))
    if peaks_a & peaks_b:
        return 2 * norm_a * norm_b

    a_sq, b_sq = norm_a**2, norm_b**2
    a2_sq, b2_sq = hs_norm(a) ** 2, hs_norm(b) ** 2
    if (
        a2_sq >= 1.5 * a_sq
        and b2_sq < 3 * b_sq - a_sq * b_sq / (a2_sq - a_sq)
    ):
        return float(2 * norm_b * np.sqrt(a2_sq - a_sq))
    return float(
        (a2_sq * b_sq + a_sq * b2_sq - a2_sq * b2_sq)
        / np.sqrt((2 * a_sq - a2_sq) * (2 * b_sq - b2_sq))
    )


def selfadjoint_jordan_op(a: MatrixLike, b: MatrixLike) -> ElemOp:
    # T(x) = a·x·b* + b·x·a*
    a, b = CMatrix(a), CMatrix(b)
    return ElemOp(a.n, [Term(a, b.H), Term(b, a.H)])


def _weights(q: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, ...]:
    # p = cosh q: 2p² − 1 = cosh 2q and 2p·√(p² − 1) = sinh 2q, so rs − t² = 1
    c, s = np.cosh(2 * q), np.sinh(2 * q)
    return c + s * np.cos(theta), c - s * np.cos(theta), s * np.sin(theta)


def selfadjoint_cb_search(
    a: MatrixLike, b: MatrixLike, p_max: float = P_MAX
) -> SelfAdjointWitness:
    a, b = CMatrix(a), CMatrix(b)
    if dependent_ratio(a, b) is not None:
        raise DependentPair("Self-adjoint formula needs independent a, b.")

    aa, bb = (a @ a.H).data, (b @ b.H).data
    ab = (a @ b.H).data
    imaginary = (ab - ab.conj().T) / 2j

    def integrand(r, s, t) -> np.ndarray:
        r, s, t = (np.asarray(v)[..., None, None] for v in (r, s, t))
        return _top_eigenvalues(r * aa + s * bb + 2 * t * imaginary)

    def objective(params: np.ndarray) -> float:
        return float(integrand(*_weights(abs(params[0]), params[1])))

    boundary_hit = False
    for doubling in range(P_MAX_DOUBLINGS + 1):
        q_grid = np.arccosh(np.geomspace(1.0, p_max, P_GRID_POINTS))
        theta_grid = np.linspace(0, 2 * np.pi, THETA_GRID_POINTS, endpoint=False)
        q_mesh, theta_mesh = np.meshgrid(q_grid, theta_grid, indexing="ij")
        values = integrand(*_weights(q_mesh, theta_mesh))
        i, j = np.unravel_index(int(np.argmin(values)), values.shape)

        result = minimize(
            objective,
            np.array([q_grid[i], theta_grid[j]]),
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000},
        )
        q, theta = abs(result.x[0]), float(np.mod(result.x[1], 2 * np.pi))
        if result.fun > values[i, j]:
            q, theta = q_grid[i], theta_grid[j]

        boundary_hit = q >= q_grid[-1] * (1 - 1e-9)
        if not boundary_hit:
            break
        if doubling < P_MAX_DOUBLINGS:
            logger.debug(f"(p, θ) minimizer at p_max = {p_max}, doubling")
            p_max *= 2

    if boundary_hit:
        logger.warning(f"(p, θ) minimizer still on the boundary p_max = {p_max}")

    r, s, t = _weights(np.float64(q), np.float64(theta))
    return SelfAdjointWitness(
        value=objective(np.array([q, theta])),
        p=float(np.cosh(q)),
        theta=theta,
        r=float(r),
        s=float(s),
        t=float(t),
        boundary_hit=bool(boundary_hit),
    )


def selfadjoint_cb_formula(a: MatrixLike, b: MatrixLike, budget: int = 0) -> float:
    # the grid resolution is fixed; budget is kept for a uniform call signature
    del budget
    return selfadjoint_cb_search(a, b).value


def signed_representation(
    a: MatrixLike, b: MatrixLike, p: float, theta: float
) -> Tuple[CMatrix, CMatrix]:
    """(c₁′, c₂′) with a·x·b* + b·x·a* = c₁′·x·c₁′* − c₂′·x·c₂′*."""
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}.")
    a, b = as_array(a), as_array(b)
    c1, c2 = (a + b) / np.sqrt(2), (a - b) / np.sqrt(2)
    off = np.sqrt(p**2 - 1)
    first = p * c1 + off * np.exp(-1j * theta) * c2
    second = off * np.exp(1j * theta) * c1 + p * c2

    def flat(left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return np.outer(left.ravel(), right.conj().ravel())

    residual = float(
        np.max(
            np.abs(
                flat(first, first) - flat(second, second) - flat(a, b) - flat(b, a)
            )
        )
    )
    scale = p**2 * max(1.0, hs_norm(a) * hs_norm(b))
    if residual > REP_RECONSTRUCTION_TOL * scale:
        raise FactorizationError(
            f"Signed representation misses the operator by {residual:.3e}.", residual
        )
    return CMatrix(first), CMatrix(second)


def coefficient_matrix(T: ElemOp) -> np.ndarray:
    # T(x) = Σ hₚ_q Eₚ·x·E_q* over matrix units Eₚ
    return sum(
        np.outer(term.a.data.ravel(), term.b.data.conj().T.ravel().conj())
        for term in T.terms
    )


def signature(T: ElemOp) -> Tuple[int, int]:
    h = coefficient_matrix(T)
    if not is_hermitian(h):
        raise NotHermitian("Operator is not self-adjoint (T(x*)* ≠ T(x)).")
    eigenvalues = np.linalg.eigvalsh((h + h.conj().T) / 2)
    cutoff = RANK_TOL * max(1.0, float(np.max(np.abs(eigenvalues))))
    return int(np.sum(eigenvalues > cutoff)), int(np.sum(eigenvalues < -cutoff))
