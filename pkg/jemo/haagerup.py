import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import minimize
from scipy.special import logsumexp

from .constants import (
    ASCENT_STALL_TOL,
    ASCENT_STEPS,
    COND_BARRIER,
    DEFAULT_BUDGET,
    DEFAULT_SEED,
    HAAGERUP_NM_RESTARTS,
    HAAGERUP_SMOOTHING,
    HAAGERUP_STARTS_PER_BUDGET,
    RANK_TOL,
    TOL_AMPLIFICATION,
    TOL_FORMULA,
    TOL_SANDWICH,
    TOLERANCES,
)
from .errors import AmplificationMismatch, DimMismatch, EmptyTensor
from .linalg import CMatrix, MatrixLike, as_array, op_norm, random_unitary
from .utils import rng_for, spawn_seeds

logger = logging.getLogger(__name__)


@dataclass
class Term:
    a: CMatrix
    b: CMatrix


@dataclass
class ElemOp:
    """Elementary operator x ↦ Σ aᵢ x bᵢ, also read as the tensor Σ aᵢ⊗bᵢ."""

    dim: int
    terms: List[Term]

    def __post_init__(self):
        if not self.terms:
            raise EmptyTensor("Elementary operator needs at least one term.")

        for index, term in enumerate(self.terms):
            for coefficient in (term.a, term.b):
                if coefficient.n != self.dim:
                    raise DimMismatch(
                        f"Term {index} has dimension {coefficient.n}, "
                        f"operator acts on dimension {self.dim}.",
                        self.dim,
                        coefficient.n,
                    )

    @classmethod
    def from_pairs(
        cls, pairs: Sequence[Tuple[MatrixLike, MatrixLike]]
    ) -> "ElemOp":
        terms = [Term(CMatrix(a), CMatrix(b)) for a, b in pairs]
        if not terms:
            raise EmptyTensor("Elementary operator needs at least one term.")
        return cls(terms[0].a.n, terms)

    @property
    def left(self) -> np.ndarray:
        return np.stack([term.a.data for term in self.terms])

    @property
    def right(self) -> np.ndarray:
        return np.stack([term.b.data for term in self.terms])

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class NormCertificate:
    lower: float
    lower_witness: CMatrix
    upper: float
    upper_witness: List[Term]
    formula: Optional[float] = None
    cb: Optional[float] = None
    margins: Dict[str, float] = field(default_factory=dict)
    passed: bool = True
    scale: float = 1.0

    @classmethod
    def build(
        cls,
        lower: Tuple[float, CMatrix],
        upper: Tuple[float, List[Term]],
        margins: Dict[str, float],
        slack: Mapping[str, float],
        **kwargs,
    ) -> "NormCertificate":
        passed = all(
            value >= -slack[name] for name, value in margins.items()
        )
        return cls(
            lower=float(lower[0]),
            lower_witness=lower[1],
            upper=float(upper[0]),
            upper_witness=upper[1],
            margins={name: float(value) for name, value in margins.items()},
            passed=passed,
            **kwargs,
        )

    @property
    def min_margin(self) -> float:
        if not self.margins:
            return float("inf")
        return min(self.margins.values())


def apply(T: ElemOp, x: MatrixLike) -> CMatrix:
    x = as_array(x)
    if x.shape != (T.dim, T.dim):
        raise DimMismatch(
            f"Operator acts on {T.dim}×{T.dim} matrices, got shape {x.shape}.",
            T.dim,
            x.shape[0] if x.ndim else 0,
        )
    return CMatrix(np.einsum("kij,jl,klm->im", T.left, x, T.right))


def amplify(T: ElemOp, k: int) -> ElemOp:
    if k < 1:
        raise ValueError(f"Amplification level must be at least 1, got {k}.")
    if k == 1:
        return ElemOp(T.dim, list(T.terms))

    identity = np.eye(k)
    return ElemOp(
        T.dim * k,
        [
            Term(CMatrix(np.kron(identity, term.a.data)),
                 CMatrix(np.kron(identity, term.b.data)))
            for term in T.terms
        ],
    )


def transpose_op(T: ElemOp) -> ElemOp:
    # T_t(x) = T(xᵗ)ᵗ
    return ElemOp(T.dim, [Term(term.b.T, term.a.T) for term in T.terms])


def adjoint_op(T: ElemOp) -> ElemOp:
    # T*(x) = T(x*)*
    return ElemOp(T.dim, [Term(term.b.H, term.a.H) for term in T.terms])


def conjugate_op(T: ElemOp, u: MatrixLike, v: MatrixLike) -> ElemOp:
    # S(x) = u·T(v·x·u)·v
    u, v = CMatrix(u), CMatrix(v)
    return ElemOp(
        T.dim, [Term(u @ term.a @ v, u @ term.b @ v) for term in T.terms]
    )


def trace_norm(m: MatrixLike) -> float:
    return float(np.linalg.norm(as_array(m), "nuc"))


def _apply_batch(left: np.ndarray, right: np.ndarray, xs: np.ndarray) -> np.ndarray:
    return np.einsum("kij,sjl,klm->sim", left, xs, right)


def _top_singular_pairs(ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    u, _, vh = np.linalg.svd(ys)
    return u[:, :, 0], vh[:, 0, :].conj()


def _dual_unitaries(
    left: np.ndarray, right: np.ndarray, xi: np.ndarray, eta: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    # |⟨T(x)η, ξ⟩| = |tr(x·M)| with M = Σ (bᵢη)(aᵢ*ξ)*; x = V·U* attains ‖M‖₁
    b_eta = np.einsum("kij,sj->ski", right, eta)
    a_xi = np.einsum("kji,sj->ski", left.conj(), xi)
    m = np.einsum("ski,skj->sij", b_eta, a_xi.conj())
    u, s, vh = np.linalg.svd(m)
    xs = vh.conj().transpose(0, 2, 1) @ u.conj().transpose(0, 2, 1)
    return xs, s.sum(axis=1)


def _ascend(
    left: np.ndarray, right: np.ndarray, starts: np.ndarray
) -> np.ndarray:
    xs = starts.astype(complex)
    values = np.full(len(xs), -np.inf)
    active = np.ones(len(xs), dtype=bool)
    for step in range(ASCENT_STEPS):
        index = np.flatnonzero(active)
        if index.size == 0:
            logger.debug(f"Ascent converged after {step} steps")
            break
        xi, eta = _top_singular_pairs(_apply_batch(left, right, xs[index]))
        updated, updated_values = _dual_unitaries(left, right, xi, eta)
        gain = updated_values - values[index]
        xs[index] = updated
        values[index] = updated_values
        active[index] = gain > ASCENT_STALL_TOL * np.maximum(1.0, updated_values)
    return xs


def _polish(left: np.ndarray, right: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    xi, eta = _top_singular_pairs(_apply_batch(left, right, x[None]))

    def unpack(params: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        xi = params[:n] + 1j * params[n : 2 * n]
        eta = params[2 * n : 3 * n] + 1j * params[3 * n :]
        return (xi / np.linalg.norm(xi))[None], (eta / np.linalg.norm(eta))[None]

    def objective(params: np.ndarray) -> float:
        _, value = _dual_unitaries(left, right, *unpack(params))
        return -float(value[0])

    start = np.concatenate([xi[0].real, xi[0].imag, eta[0].real, eta[0].imag])
    result = minimize(objective, start, method="BFGS")
    polished, _ = _dual_unitaries(left, right, *unpack(result.x))
    return polished[0]


def op_norm_estimate(
    T: ElemOp,
    budget: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
    starts: Optional[Sequence[MatrixLike]] = None,
) -> Tuple[float, CMatrix]:
    """Certified lower bound on ‖T‖ with a unitary witness.

    `budget` is the number of random multi-starts; extra `starts` are
    searched first. Starts are polished in order whenever they improve
    the running maximum, so the value never decreases with the budget.
    """
    if budget < 1:
        raise ValueError(f"Budget must be at least 1, got {budget}.")

    left, right = T.left, T.right
    initial = [as_array(start) for start in starts or []]
    initial += [
        random_unitary(T.dim, rng_for(child)) for child in spawn_seeds(seed, budget)
    ]
    xs = _ascend(left, right, np.stack(initial))

    best_value, best_x = -np.inf, xs[0]
    for x in xs:
        value = op_norm(np.einsum("kij,jl,klm->im", left, x, right))
        if value <= best_value:
            continue
        polished = _polish(left, right, x)
        polished_value = op_norm(np.einsum("kij,jl,klm->im", left, polished, right))
        if polished_value > value:
            x, value = polished, polished_value
        best_value, best_x = value, x

    logger.debug(
        f"Norm estimate {best_value:.12g} from {len(initial)} starts (dim {T.dim})"
    )
    return float(best_value), CMatrix(best_x)


def cb_norm_oracle(
    T: ElemOp,
    budget: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
    sanity: bool = False,
    witness: Optional[MatrixLike] = None,
) -> Tuple[float, CMatrix]:
    """Lower bound on ‖T‖_cb from the n-th amplification.

    The amplified search starts from `witness` lifted to I ⊗ witness, so
    the result dominates ‖T‖ at that witness. Without one, a fresh
    estimate of ‖T‖ supplies it.
    """
    if witness is None:
        _, witness = op_norm_estimate(T, budget, seed)
    lifted = np.kron(np.eye(T.dim), as_array(witness))
    value, cb_witness = op_norm_estimate(
        amplify(T, T.dim), budget, seed, starts=[lifted]
    )

    if sanity:
        gap = amplification_gap(T, (value, cb_witness), budget, seed)
        if gap > TOLERANCES[TOL_AMPLIFICATION]:
            raise AmplificationMismatch(
                f"Amplifications {T.dim} and {T.dim + 1} disagree by {gap:.3e}.",
                gap,
            )
    return value, cb_witness


def amplification_gap(
    T: ElemOp,
    cb: Tuple[float, CMatrix],
    budget: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
) -> float:
    value, witness = cb
    embedded = scipy.linalg.block_diag(witness.data, np.eye(T.dim))
    higher, _ = op_norm_estimate(
        amplify(T, T.dim + 1), budget, seed, starts=[embedded]
    )
    return higher - value


def tensor_flattening(w: ElemOp) -> np.ndarray:
    return sum(
        np.outer(term.a.data.ravel(), term.b.data.ravel()) for term in w.terms
    )


def independent_terms(w: ElemOp) -> Tuple[np.ndarray, np.ndarray]:
    """Shortest representation of Σ aᵢ⊗bᵢ, read off the SVD of its flattening."""
    n = w.dim
    u, s, vh = np.linalg.svd(tensor_flattening(w))
    if s[0] == 0.0:
        empty = np.zeros((0, n, n), dtype=complex)
        return empty, empty

    rank = int(np.sum(s > RANK_TOL * s[0]))
    root = np.sqrt(s[:rank])
    left = (u[:, :rank] * root).T.reshape(rank, n, n)
    right = (vh[:rank, :] * root[:, None]).reshape(rank, n, n)
    return left, right


def _row_gram(left: np.ndarray, p: np.ndarray) -> np.ndarray:
    # Σᵢₗ aᵢ pᵢₗ aₗ*
    return np.einsum("iab,il,lcb->ac", left, p, left.conj())


def _column_gram(right: np.ndarray, q: np.ndarray) -> np.ndarray:
    # Σᵢₗ qᵢₗ bᵢ* bₗ
    return np.einsum("il,iba,lbc->ac", q, right.conj(), right)


def _alpha_from(params: np.ndarray, k: int) -> np.ndarray:
    alpha = np.zeros((k, k), dtype=complex)
    alpha[np.diag_indices(k)] = np.exp(params[:k])
    rows, cols = np.tril_indices(k, -1)
    m = len(rows)
    alpha[rows, cols] = params[k : k + m] + 1j * params[k + m :]
    return alpha


def _gram_spectra(
    left: np.ndarray, right: np.ndarray, alpha: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    inverse = np.linalg.inv(alpha)
    row = _row_gram(left, alpha @ alpha.conj().T)
    column = _column_gram(right, inverse.conj().T @ inverse)
    return (
        np.linalg.eigvalsh((row + row.conj().T) / 2),
        np.linalg.eigvalsh((column + column.conj().T) / 2),
    )


class _BalancedObjective:
    # ½(λmax Σa'a'* + λmax Σb'*b'); its infimum over α is ‖w‖_h
    def __init__(self, left: np.ndarray, right: np.ndarray):
        self.left = left
        self.right = right
        self.k = left.shape[0]
        self.scale = 1.0
        self.scale = max(self.exact(np.zeros(self.k * self.k)), 1e-300)

    def _penalty(self, alpha: np.ndarray) -> float:
        cond = np.linalg.cond(alpha)
        if not np.isfinite(cond):
            return np.inf
        if cond <= COND_BARRIER:
            return 0.0
        return float(np.log(cond / COND_BARRIER) ** 2)

    def exact(self, params: np.ndarray) -> float:
        alpha = _alpha_from(params, self.k)
        if not np.all(np.isfinite(alpha)):
            return np.inf
        row, column = _gram_spectra(self.left, self.right, alpha)
        value = 0.5 * (row[-1] + column[-1])
        return float(value + self._penalty(alpha) * self.scale)

    def smoothed(self, params: np.ndarray, width: float) -> float:
        alpha = _alpha_from(params, self.k)
        if not np.all(np.isfinite(alpha)):
            return np.inf
        row, column = _gram_spectra(self.left, self.right, alpha)
        tau = width * self.scale
        value = 0.5 * tau * (logsumexp(row / tau) + logsumexp(column / tau))
        return float(value + self._penalty(alpha) * self.scale)


def _optimize_alpha(
    left: np.ndarray, right: np.ndarray, budget: int, seed: int
) -> np.ndarray:
    k = left.shape[0]
    objective = _BalancedObjective(left, right)
    starts = 1 + budget // HAAGERUP_STARTS_PER_BUDGET

    best_value, best_params = np.inf, np.zeros(k * k)
    for index in range(starts):
        if index == 0:
            params = np.zeros(k * k)
        else:
            params = 0.5 * rng_for(seed, index).standard_normal(k * k)

        for width in HAAGERUP_SMOOTHING:
            params = minimize(
                objective.smoothed, params, args=(width,), method="BFGS"
            ).x

        value = objective.exact(params)
        logger.debug(f"Haagerup start {index}: smoothed value {value:.12g}")
        if value < best_value:
            best_value, best_params = value, params

    # the exact objective is kinked; only the best smoothed start is finished
    for restart in range(HAAGERUP_NM_RESTARTS):
        params = minimize(
            objective.exact,
            best_params,
            method="Nelder-Mead",
            options={
                "xatol": 1e-12,
                "fatol": 1e-15 * objective.scale,
                "maxiter": 2000 * k * k,
                "maxfev": 4000 * k * k,
            },
        ).x
        value = objective.exact(params)
        improved = best_value - value > 1e-15 * objective.scale
        if value < best_value:
            best_value, best_params = value, params
        if not improved:
            logger.debug(f"Haagerup polish settled after {restart + 1} restarts")
            break

    return _alpha_from(best_params, k)


def haagerup_norm(
    w: ElemOp, budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED
) -> Tuple[float, List[Term]]:
    """Upper bound on ‖w‖_h with a balanced witness representation."""
    if not w.terms:
        raise EmptyTensor("Haagerup norm of an empty tensor is undefined.")

    left, right = independent_terms(w)
    k = left.shape[0]
    if k == 0:
        zero = CMatrix.zeros(w.dim)
        return 0.0, [Term(zero, zero)]

    alpha = np.eye(k) if k == 1 else _optimize_alpha(left, right, budget, seed)
    left = np.einsum("iab,ij->jab", left, alpha)
    right = np.einsum("ji,iab->jab", np.linalg.inv(alpha), right)

    row, column = _gram_spectra(left, right, np.eye(k))
    row_norm, column_norm = row[-1], column[-1]
    balance = (column_norm / row_norm) ** 0.25
    left, right = left * balance, right / balance

    value = float(np.sqrt(row_norm * column_norm))
    logger.debug(f"Haagerup norm {value:.12g} with {k} terms")
    return value, [Term(CMatrix(a), CMatrix(b)) for a, b in zip(left, right)]


def representation_norms(rep: Sequence[Term]) -> Tuple[float, float]:
    """(‖Σ aᵢaᵢ*‖, ‖Σ bᵢ*bᵢ‖) of a representation."""
    row = sum(term.a.data @ term.a.data.conj().T for term in rep)
    column = sum(term.b.data.conj().T @ term.b.data for term in rep)
    return op_norm(row), op_norm(column)


def certify(
    T: ElemOp,
    budget: int = DEFAULT_BUDGET,
    seed: int = DEFAULT_SEED,
    formula: Optional[float] = None,
    slack: Optional[Mapping[str, float]] = None,
) -> NormCertificate:
    tolerances = {**TOLERANCES, **(slack or {})}
    lower = op_norm_estimate(T, budget, seed)
    cb, _ = cb_norm_oracle(T, budget, seed, witness=lower[1])
    upper = haagerup_norm(T, budget, seed)

    margins = {"cb_over_op": cb - lower[0], "sandwich": upper[0] - cb}
    margin_slack = {
        "cb_over_op": tolerances[TOL_SANDWICH],
        "sandwich": tolerances[TOL_SANDWICH],
    }
    if formula is not None:
        margins["formula_lower"] = formula - cb
        margins["formula_upper"] = upper[0] - formula
        margin_slack["formula_lower"] = tolerances[TOL_FORMULA]
        margin_slack["formula_upper"] = tolerances[TOL_FORMULA]

    return NormCertificate.build(
        lower, upper, margins, margin_slack, formula=formula, cb=cb
    )
