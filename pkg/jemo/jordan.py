from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .constants import (
    ALPHA_ASYMMETRY_TOL,
    COMPRESSION_EPS,
    DEFAULT_BUDGET,
    DEFAULT_SEED,
    NEAR_DEPENDENCE_ANGLE,
    SCALAR_IDENTITY_TOL,
    TOL_INEQUALITY,
    TOL_SANDWICH,
    TOLERANCES,
    Z_MATCH_ANGLE,
)
from .errors import (
    AmbiguousMatch,
    DependentPair,
    DimMismatch,
    PreconditionFailed,
    ZeroMatrix,
)
from .haagerup import (
    ElemOp,
    NormCertificate,
    Term,
    cb_norm_oracle,
    haagerup_norm,
    op_norm_estimate,
)
from .linalg import (
    CMatrix,
    MatrixLike,
    as_array,
    hs_norm,
    is_symmetric,
    op_norm,
    svd,
    takagi,
)
from .utils import StringEnum

logger = logging.getLogger(__name__)

_SQRT2 = np.sqrt(2.0)


class PairForm(StringEnum):
    BOTH_DIAGONAL = "both-diagonal"
    SCALAR_PLUS_SPECIAL = "scalar-plus-special"


@dataclass
class SymmetricRep:
    """a⊗b + b⊗a rewritten as c₁⊗c₁ + c₂⊗c₂ with balancing weights δᵢ."""

    c1: CMatrix
    c2: CMatrix
    delta1: float
    delta2: float
    z: complex

    def balanced_norms(self) -> Tuple[float, float]:
        c1, c2 = self.c1.data, self.c2.data
        row = self.delta1 * c1 @ c1.conj().T + self.delta2 * c2 @ c2.conj().T
        column = (
            c1.conj().T @ c1 / self.delta1 + c2.conj().T @ c2 / self.delta2
        )
        return op_norm(row), op_norm(column)

    def residuals(self, a: MatrixLike, b: MatrixLike) -> Dict[str, float]:
        a, b = as_array(a), as_array(b)
        c1, c2 = self.c1.data, self.c2.data
        target = np.outer(a.ravel(), b.ravel()) + np.outer(b.ravel(), a.ravel())
        tensor = np.outer(c1.ravel(), c1.ravel()) + np.outer(c2.ravel(), c2.ravel())
        z = complex(self.z)
        row, column = self.balanced_norms()
        return {
            "tensor": float(np.max(np.abs(tensor - target))),
            "c1": float(np.max(np.abs(c1 - (z * a + b / z) / _SQRT2))),
            "c2": float(np.max(np.abs(c2 - 1j * (z * a - b / z) / _SQRT2))),
            "balance": abs(row - column),
        }


@dataclass
class CanonicalPairForm:
    u: CMatrix
    form: str
    c1: CMatrix
    c2: CMatrix
    lambda_: Optional[float] = None
    zeta: Optional[complex] = None
    alpha: Optional[complex] = None
    beta: Optional[float] = None


@dataclass
class CanonicalJordan:
    """The pair carried to a = diag(1, λ) with b₁₂, b₂₁ ≥ 0.

    The original operator is recovered from
    T_{a,b}(x) = phase⁻¹·u*·T_{diag(1,λ), b_norm}(v*·x·u*)·v*.
    """

    lambda_: complex
    b_norm: CMatrix
    u_left: CMatrix
    v_right: CMatrix
    b_phase: complex = 1.0
    scale: float = 1.0

    @property
    def a_norm(self) -> CMatrix:
        return CMatrix.diag([1.0, self.lambda_])


@dataclass
class BsData:
    b_s: CMatrix
    s12: float
    mu1_sq: float
    mu2_sq: float
    theta: float
    eps12: float
    hs_scale: float = 1.0

    @property
    def b11(self) -> complex:
        return complex(self.b_s.data[0, 0])

    @property
    def b22(self) -> complex:
        return complex(self.b_s.data[1, 1])

    @property
    def cross(self) -> float:
        # |b₁₁ + b̄₂₂|
        return abs(self.b11 + self.b22.conjugate())


@dataclass
class LowerBoundChain:
    left: float
    right: float
    average: float
    hs_product: float


def _same_dim(a: CMatrix, b: CMatrix) -> None:
    if a.n != b.n:
        raise DimMismatch(
            f"Coefficients must share a dimension, got {a.n} and {b.n}.",
            a.n,
            b.n,
        )


def _require_dim(m: CMatrix, dim: int, name: str) -> None:
    if m.n != dim:
        raise DimMismatch(f"`{name}` must be {dim}×{dim}, got {m.n}×{m.n}.", dim, m.n)


def jordan_op(a: MatrixLike, b: MatrixLike) -> ElemOp:
    a, b = CMatrix(a), CMatrix(b)
    _same_dim(a, b)
    return ElemOp(a.n, [Term(a, b), Term(b, a)])


def symmetrize_op(T: ElemOp) -> ElemOp:
    # T_s = ½(T + T_t)
    terms = [Term(term.a / 2, term.b) for term in T.terms]
    terms += [Term(term.b.T / 2, term.a.T) for term in T.terms]
    return ElemOp(T.dim, terms)


def vector_angle(a: MatrixLike, b: MatrixLike) -> float:
    """Angle between the lines spanned by vec(a) and vec(b)."""
    a_vec, b_vec = as_array(a).ravel(), as_array(b).ravel()
    a_norm, b_norm = np.linalg.norm(a_vec), np.linalg.norm(b_vec)
    if a_norm == 0.0 or b_norm == 0.0:
        return 0.0
    projection = np.vdot(a_vec, b_vec) / a_norm**2 * a_vec
    sine = np.linalg.norm(b_vec - projection) / b_norm
    return float(np.arcsin(min(1.0, sine)))


def dependent_ratio(a: MatrixLike, b: MatrixLike) -> Optional[complex]:
    """λ with b = λa when the pair is (nearly) dependent, else None."""
    a_vec, b_vec = as_array(a).ravel(), as_array(b).ravel()
    a_norm = np.linalg.norm(a_vec)
    if a_norm == 0.0 or np.linalg.norm(b_vec) == 0.0:
        return 0j

    angle = vector_angle(a, b)
    if angle > NEAR_DEPENDENCE_ANGLE:
        return None
    if angle > 0.0:
        logger.warning(
            f"Near-dependent pair (angle {angle:.3e}) treated as dependent"
        )
    return complex(np.vdot(a_vec, b_vec) / a_norm**2)


def dependent_norm(a: MatrixLike, b: MatrixLike) -> float:
    # ‖T‖ = ‖T‖_cb = 2|λ|·‖a‖² for b = λa
    ratio = dependent_ratio(a, b)
    if ratio is None:
        raise PreconditionFailed("Pair is linearly independent.")
    return 2.0 * abs(ratio) * op_norm(a) ** 2


def symmetrize(
    a: MatrixLike,
    b: MatrixLike,
    budget: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
) -> SymmetricRep:
    a, b = CMatrix(a), CMatrix(b)
    _same_dim(a, b)
    ratio = dependent_ratio(a, b)
    if ratio is not None:
        raise DependentPair(
            f"Pair is linearly dependent (b = {ratio:.6g}·a); "
            f"use the closed form 2|λ|‖a‖².",
            ratio,
        )

    _, rep = haagerup_norm(ElemOp(a.n, [Term(a, b), Term(b, a)]), budget, seed)
    left = np.stack([term.a.data.ravel() for term in rep], axis=1)
    right = np.stack([term.b.data.ravel() for term in rep], axis=1)

    # [b₁, b₂] = [a₁, a₂]·α, and α = αᵗ because w is flip-symmetric
    alpha, *_ = np.linalg.lstsq(left, right, rcond=None)
    asymmetry = np.max(np.abs(alpha - alpha.T))
    if asymmetry > ALPHA_ASYMMETRY_TOL * max(1.0, np.max(np.abs(alpha))):
        raise PreconditionFailed(
            f"Change of representation is not symmetric "
            f"(‖α − αᵗ‖ = {asymmetry:.3e})."
        )
    factors = takagi((alpha + alpha.T) / 2)
    u = factors.u.data
    deltas = [1.0 / value for value in factors.delta]

    rotated = right @ u.conj()
    c1, c2 = (
        np.sqrt(delta) * column.reshape(a.n, a.n)
        for delta, column in zip(deltas, rotated.T)
    )

    a_prime = (c1 - 1j * c2) / _SQRT2
    if vector_angle(a, a_prime) > Z_MATCH_ANGLE:
        if vector_angle(b, a_prime) > Z_MATCH_ANGLE:
            raise AmbiguousMatch(
                "Symmetric representation matches neither `a` nor `b`."
            )
        logger.debug("Symmetric representation matched b, swapping c1 and c2")
        c1, c2 = c2, c1
        deltas.reverse()
        a_prime = (c1 - 1j * c2) / _SQRT2

    a_vec = a.data.ravel()
    z = complex(np.vdot(a_vec, a_prime.ravel()) / np.vdot(a_vec, a_vec))
    return SymmetricRep(CMatrix(c1), CMatrix(c2), deltas[0], deltas[1], z)


def canonical_symmetric_pair(
    c1: MatrixLike, c2: MatrixLike
) -> CanonicalPairForm:
    c1, c2 = CMatrix(c1), CMatrix(c2)
    _require_dim(c1, 2, "c1")
    _require_dim(c2, 2, "c2")
    if not (is_symmetric(c1) and is_symmetric(c2)):
        raise PreconditionFailed("Both matrices must be complex symmetric.")

    total = (c1 @ c1.H + c2 @ c2.H).data
    rho = float(np.trace(total).real) / 2
    scale = max(1.0, rho)
    if np.max(np.abs(total - rho * np.eye(2))) > SCALAR_IDENTITY_TOL * scale:
        raise PreconditionFailed("c1·c1* + c2·c2* is not a multiple of I.")

    u = takagi(c1).u.H
    c1_t, c2_t = u @ c1 @ u.T, u @ c2 @ u.T
    if abs(c2_t.data[0, 1]) <= SCALAR_IDENTITY_TOL * scale:
        return CanonicalPairForm(u, str(PairForm.BOTH_DIAGONAL), c1_t, c2_t)

    p, q, r = c2_t.data[0, 0], c2_t.data[0, 1], c2_t.data[1, 1]
    lambda_ = float(c1_t.data[0, 0].real)
    if abs(c1_t.data[1, 1] - lambda_) > SCALAR_IDENTITY_TOL * scale:
        raise PreconditionFailed(
            "c2 is not diagonalizable alongside c1, yet c1 is not scalar."
        )
    if lambda_ <= SCALAR_IDENTITY_TOL * scale:
        # c1 vanishes, so any u works for it and c2 alone decides
        u = takagi(c2).u.H
        return CanonicalPairForm(
            u, str(PairForm.BOTH_DIAGONAL), u @ c1 @ u.T, u @ c2 @ u.T
        )

    zeta = q / abs(q)
    alpha = p / zeta
    if abs(r + zeta * np.conj(alpha)) > SCALAR_IDENTITY_TOL * scale:
        raise PreconditionFailed(
            "Transformed c2 is not of the form ζ[[α, β], [β, −ᾱ]]."
        )
    return CanonicalPairForm(
        u,
        str(PairForm.SCALAR_PLUS_SPECIAL),
        c1_t,
        c2_t,
        lambda_=lambda_,
        zeta=complex(zeta),
        alpha=complex(alpha),
        beta=float(abs(q)),
    )


def reduce_to_canonical(a: MatrixLike, b: MatrixLike) -> CanonicalJordan:
    a, b = CMatrix(a), CMatrix(b)
    _require_dim(a, 2, "a")
    _require_dim(b, 2, "b")
    u, s, v = svd(a)
    if s[0] == 0.0:
        raise ZeroMatrix("Cannot normalize a zero matrix `a`.")

    left, right = u.H.data, v.data
    lambda_ = complex(s[1] / s[0])
    b_t = s[0] * (left @ b.data @ right)

    phase = 1.0 + 0j
    if b_t[0, 1] != 0:
        phase = np.conj(b_t[0, 1]) / abs(b_t[0, 1])
    b_t = phase * b_t

    if b_t[1, 0] != 0:
        d = np.diag([1.0, np.conj(b_t[1, 0]) / abs(b_t[1, 0])])
        left, b_t = d @ left, d @ b_t
        lambda_ *= d[1, 1]

    b_t[0, 1], b_t[1, 0] = abs(b_t[0, 1]), abs(b_t[1, 0])
    return CanonicalJordan(
        lambda_=complex(lambda_),
        b_norm=CMatrix(b_t),
        u_left=CMatrix(left),
        v_right=CMatrix(right),
        b_phase=complex(phase),
        scale=float(s[0]),
    )


def symmetrize_b(canon: CanonicalJordan) -> BsData:
    b = canon.b_norm.data
    hs = hs_norm(b)
    if hs == 0.0:
        raise ZeroMatrix("Cannot normalize a zero matrix `b`.")
    b = b / hs

    b_s = (b + b.T) / 2
    s12 = float(b_s[0, 1].real)
    b11, b22 = abs(b_s[0, 0]), abs(b_s[1, 1])
    cos_sq = min(1.0, max(0.0, b11**2 + b22**2))
    return BsData(
        b_s=CMatrix(b_s),
        s12=s12,
        mu1_sq=float(b11**2 + s12**2),
        mu2_sq=float(b22**2 + s12**2),
        theta=float(np.arccos(np.sqrt(cos_sq))),
        eps12=float(b22 - b11),
        hs_scale=float(hs),
    )


def _span_basis(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    # orthonormal basis of span{first, second}, completed if rank-deficient
    basis, _, _ = np.linalg.svd(np.stack([first, second], axis=1))
    return basis[:, :2]


def compression_bases(a: MatrixLike, b: MatrixLike) -> Tuple[np.ndarray, np.ndarray]:
    """(P, Q): orthonormal bases of span{ξ, η} and span{aξ, bη}."""
    a, b = as_array(a), as_array(b)
    _, _, a_vh = np.linalg.svd(a)
    _, _, b_vh = np.linalg.svd(b)
    xi, eta = a_vh[0].conj(), b_vh[0].conj()
    return _span_basis(xi, eta), _span_basis(a @ xi, b @ eta)


def compress_to_2d(
    a: MatrixLike, b: MatrixLike, eps: float = COMPRESSION_EPS
) -> Tuple[CMatrix, CMatrix]:
    a, b = CMatrix(a), CMatrix(b)
    _same_dim(a, b)
    if a.n < 2:
        raise DimMismatch("Compression needs dimension at least 2.", 2, a.n)
    if eps <= 0:
        raise PreconditionFailed(f"Compression slack must be positive, got {eps}.")

    p, q = compression_bases(a, b)
    a2 = CMatrix(q.conj().T @ a.data @ p)
    b2 = CMatrix(q.conj().T @ b.data @ p)
    for name, full, compressed in (("a", a, a2), ("b", b, b2)):
        if op_norm(compressed) < op_norm(full) - eps:
            logger.warning(f"Compression of `{name}` lost more than {eps:.1e}")
    return a2, b2


def lower_bound_chain(
    a: MatrixLike,
    b: MatrixLike,
    budget: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
) -> LowerBoundChain:
    rep = symmetrize(a, b, budget, seed)
    c1_sq, c2_sq = hs_norm(rep.c1) ** 2, hs_norm(rep.c2) ** 2
    left = 0.5 * (rep.delta1 * c1_sq + rep.delta2 * c2_sq)
    right = 0.5 * (c1_sq / rep.delta1 + c2_sq / rep.delta2)
    return LowerBoundChain(
        left=left,
        right=right,
        average=0.5 * (left + right),
        hs_product=hs_norm(a) * hs_norm(b),
    )


def verify_lower_bounds(
    a: MatrixLike,
    b: MatrixLike,
    budget: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
    slack: Optional[Mapping[str, float]] = None,
) -> NormCertificate:
    a, b = CMatrix(a), CMatrix(b)
    _same_dim(a, b)
    tolerances = {**TOLERANCES, **(slack or {})}
    inequality = tolerances[TOL_INEQUALITY]
    T = jordan_op(a, b)

    margins: Dict[str, float] = {}
    margin_slack: Dict[str, float] = {}
    starts = []
    if a.n > 2:
        p, q = compression_bases(a, b)
        a2, b2 = compress_to_2d(a, b, COMPRESSION_EPS)
        compressed, compressed_witness = op_norm_estimate(
            jordan_op(a2, b2), budget, seed
        )
        # P·w·Q* realizes the compressed value on the full operator
        starts.append(p @ compressed_witness.data @ q.conj().T)
        margins["compressed"] = compressed - (op_norm(a) - COMPRESSION_EPS) * (
            op_norm(b) - COMPRESSION_EPS
        )
        margin_slack["compressed"] = inequality

    lower = op_norm_estimate(T, budget, seed, starts=starts)
    cb, _ = cb_norm_oracle(T, budget, seed, witness=lower[1])
    upper = haagerup_norm(T, budget, seed)

    margins["m1"] = lower[0] - op_norm(a) * op_norm(b)
    margin_slack["m1"] = inequality
    if a.n == 2:
        hs_product = hs_norm(a) * hs_norm(b)
        margins["m2"] = cb - hs_product
        margins["m3"] = lower[0] - hs_product
        margin_slack["m2"] = margin_slack["m3"] = inequality
    elif a.n > 2:
        margins["compression"] = lower[0] - compressed
        margin_slack["compression"] = inequality
    margins["sandwich"] = upper[0] - cb
    margin_slack["sandwich"] = tolerances[TOL_SANDWICH]

    formula = None
    if dependent_ratio(a, b) is not None:
        formula = dependent_norm(a, b)

    certificate = NormCertificate.build(
        lower, upper, margins, margin_slack, formula=formula, cb=cb
    )
    if not certificate.passed:
        logger.warning(f"Lower bounds failed with margins {certificate.margins}")
    return certificate

