from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import (
    DEFAULT_BUDGET,
    DEGENERACY_TOL,
    ELLIPSE_REPORT_GRID,
    FLAT_ELLIPSE_BETA,
    FLAT_ELLIPSE_RESIDUAL_CAP,
    HYPERBOLA_GRID,
    TOL_INEQUALITY,
    TOL_RESIDUAL,
    TOLERANCES,
)
from .errors import DegenerateModel, DimMismatch, LambdaOutOfRange, NotHermitian
from .jordan import BsData, CanonicalJordan, reduce_to_canonical, symmetrize_b
from .linalg import CMatrix, MatrixLike, as_array, hs_norm, is_hermitian, op_norm
from .utils import StringEnum

logger = logging.getLogger(__name__)

# 1 − λ² below this is treated as λ = 1, where the range is a vertical segment
_VERTICAL_STRIP_GAP = 1e-9


class Degeneracy(StringEnum):
    NONE = "none"
    S12_ZERO = "s12-zero"
    HORIZONTAL_LINE = "horizontal-line"
    VERTICAL_STRIP = "vertical-strip"
    ZERO = "zero"


class WitnessBranch(StringEnum):
    TOUCH_POINT = "touch-point"
    THETA_RULE = "theta-rule"
    DET_FALLBACK = "det-fallback"


@dataclass
class EllipseModel:
    """Boundary of the joint numerical range of (aa*, b_s·b_s*).

    α₁₁(x − x₀)² + 2α₁₂(x − x₀)(y − y₀) + (y − y₀)² + β = 0
    """

    x0: float
    y0: float
    alpha11: float
    alpha12: float
    beta: float
    lambda_abs: float
    degenerate: Degeneracy = Degeneracy.NONE

    @property
    def x_radius(self) -> float:
        return 0.5 * (1 - self.lambda_abs**2)

    @property
    def y_tilt(self) -> float:
        # ½(|b₂₂|² − |b₁₁|²)
        return self.alpha12 * self.x_radius

    @property
    def half_height(self) -> float:
        # s₁₂·|b₁₁ + b̄₂₂|, the half-length of the x = x₀ section
        return float(np.sqrt(max(-self.beta, 0.0)))

    def residual_tolerance(self, base: float) -> float:
        # conditioning degrades like 1/√(−β) as the ellipse flattens
        flatness = -self.beta
        if flatness < FLAT_ELLIPSE_BETA:
            return FLAT_ELLIPSE_RESIDUAL_CAP
        return float(min(FLAT_ELLIPSE_RESIDUAL_CAP, base / np.sqrt(flatness)))


@dataclass
class JNRPoint:
    x: float
    y: float
    xi: Optional[np.ndarray] = None

    @property
    def product(self) -> float:
        return 4 * self.x * self.y


@dataclass
class JNRSample:
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    def __iter__(self) -> Iterator[JNRPoint]:
        for x, y, xi in zip(self.x, self.y, self.xi):
            yield JNRPoint(float(x), float(y), xi)

    @property
    def products(self) -> np.ndarray:
        return 4 * self.x * self.y


@dataclass
class OmegaWitness:
    omega: float
    point: JNRPoint
    product: float
    branch: str


@dataclass
class HyperbolaCheck:
    passed: bool
    margin: float
    det_margin: float
    lambda_abs: float
    omega: float
    max_product: float
    target: float
    degenerate: Degeneracy = Degeneracy.NONE
    model_residual: float = 0.0


def _require_hermitian_pair(A: CMatrix, B: CMatrix) -> None:
    for name, m in (("A", A), ("B", B)):
        if m.n != 2:
            raise DimMismatch(f"`{name}` must be 2×2, got {m.n}×{m.n}.", 2, m.n)
        if not is_hermitian(m):
            raise NotHermitian(f"`{name}` must be Hermitian.")


def _expectations(A: CMatrix, B: CMatrix, xi: np.ndarray) -> JNRSample:
    x = np.einsum("ki,ij,kj->k", xi.conj(), A.data, xi).real
    y = np.einsum("ki,ij,kj->k", xi.conj(), B.data, xi).real
    return JNRSample(x=x, y=y, xi=xi)


def jnr_sample(A: MatrixLike, B: MatrixLike, grid: int) -> JNRSample:
    """Points (⟨Aξ, ξ⟩, ⟨Bξ, ξ⟩) over ξ = (cos t, e^{iφ}·sin t)."""
    A, B = CMatrix(A), CMatrix(B)
    _require_hermitian_pair(A, B)
    if grid < 1:
        raise ValueError(f"Grid must be positive, got {grid}.")

    t = np.linspace(0, np.pi / 2, max(2, grid // 4) + 1)
    phi = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    t_mesh, phi_mesh = (m.ravel() for m in np.meshgrid(t, phi, indexing="ij"))
    xi = np.stack([np.cos(t_mesh) + 0j, np.exp(1j * phi_mesh) * np.sin(t_mesh)], axis=1)
    return _expectations(A, B, xi)


def jnr_boundary(A: MatrixLike, B: MatrixLike, grid: int) -> JNRSample:
    """Exact boundary points: top eigenvectors of cos ω·A + sin ω·B."""
    A, B = CMatrix(A), CMatrix(B)
    _require_hermitian_pair(A, B)
    omegas = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    pencils = (
        np.cos(omegas)[:, None, None] * A.data + np.sin(omegas)[:, None, None] * B.data
    )
    _, vectors = np.linalg.eigh(pencils)
    return _expectations(A, B, vectors[:, :, -1])


def ellipse_model(lambda_abs: float, bs: BsData) -> EllipseModel:
    if not 0 <= lambda_abs < 1:
        raise LambdaOutOfRange(
            f"Ellipse model needs 0 ≤ |λ| < 1, got {lambda_abs}; "
            "at |λ| = 1 the range is a vertical segment."
        )
    gap = 1 - lambda_abs**2
    b11_sq, b22_sq = abs(bs.b11) ** 2, abs(bs.b22) ** 2
    alpha12 = (b22_sq - b11_sq) / gap
    beta = -(bs.s12**2) * bs.cross**2

    degenerate = Degeneracy.NONE
    if bs.s12 <= DEGENERACY_TOL:
        degenerate = Degeneracy.S12_ZERO
    elif bs.cross <= DEGENERACY_TOL:
        degenerate = Degeneracy.HORIZONTAL_LINE

    return EllipseModel(
        x0=0.5 * (1 + lambda_abs**2),
        y0=0.5 * hs_norm(bs.b_s) ** 2,
        alpha11=alpha12**2 - 4 * beta / gap**2,
        alpha12=alpha12,
        beta=beta,
        lambda_abs=lambda_abs,
        degenerate=degenerate,
    )


def boundary_xy(model: EllipseModel, omega) -> Tuple[np.ndarray, np.ndarray]:
    # valid on degenerate models too, where it traces the segment twice
    sin, cos = np.sin(omega), np.cos(omega)
    x = model.x0 + model.x_radius * sin
    y = model.y0 - model.y_tilt * sin + model.half_height * cos
    return x, y


def ellipse_point(model: EllipseModel, omega: float) -> JNRPoint:
    if model.degenerate != Degeneracy.NONE:
        raise DegenerateModel(
            f"Joint numerical range is a line segment ({model.degenerate})."
        )
    x, y = boundary_xy(model, omega)
    return JNRPoint(float(x), float(y))


def ellipse_residual(model: EllipseModel, x, y):
    dx, dy = np.asarray(x) - model.x0, np.asarray(y) - model.y0
    return model.alpha11 * dx**2 + 2 * model.alpha12 * dx * dy + dy**2 + model.beta


def theta_rule_omega(theta: float) -> float:
    return float(np.arctan(np.tan(theta) / np.sqrt(2)))


def witness_omega(
    bs: BsData, lambda_abs: float, budget: int = DEFAULT_BUDGET
) -> OmegaWitness:
    """A boundary point on or above the hyperbola 4xy = 1 + λ².

    |b₁₁| ≥ |b₂₂| takes the touch point ω = π/2. Otherwise the θ-rule
    works while cos²θ ≥ 2λ²/(1 + λ⁴), and past that the |det b| bound
    guarantees the boundary maximum reaches the hyperbola.
    """
    model = ellipse_model(lambda_abs, bs)
    threshold = 2 * lambda_abs**2 / (1 + lambda_abs**4)

    if bs.eps12 <= 0:
        branch, omega = WitnessBranch.TOUCH_POINT, np.pi / 2
    elif np.cos(bs.theta) ** 2 >= threshold:
        branch, omega = WitnessBranch.THETA_RULE, theta_rule_omega(bs.theta)
    else:
        branch = WitnessBranch.DET_FALLBACK
        omega, _ = _ellipse_maximum(model, budget)

    x, y = boundary_xy(model, omega)
    point = JNRPoint(float(x), float(y))
    logger.debug(f"Witness ω = {omega:.6g} from {branch}, 4xy = {point.product:.12g}")
    return OmegaWitness(float(omega), point, point.product, str(branch))


def det_bound_margin(b: MatrixLike, lambda_abs: float) -> float:
    # |det(b/‖b‖₂)| − |λ|/(1 + |λ|²)
    b = CMatrix(b)
    hs = hs_norm(b)
    if hs == 0.0:
        return -lambda_abs / (1 + lambda_abs**2)
    return float(abs(b.det()) / hs**2 - lambda_abs / (1 + lambda_abs**2))


def normalize_pair(
    a: MatrixLike, b: MatrixLike
) -> Tuple[CanonicalJordan, BsData, bool]:
    """Canonical form with ‖a‖₂/‖a‖ ≤ ‖b‖₂/‖b‖, swapping a and b if needed."""
    a, b = CMatrix(a), CMatrix(b)
    swapped = hs_norm(a) / op_norm(a) > hs_norm(b) / op_norm(b)
    if swapped:
        a, b = b, a
    canon = reduce_to_canonical(a, b)
    return canon, symmetrize_b(canon), swapped


def is_vertical_strip(lambda_abs: float) -> bool:
    return 1 - min(lambda_abs, 1.0) ** 2 <= _VERTICAL_STRIP_GAP


def strip_midpoint(bs: BsData) -> JNRPoint:
    # aa* = I collapses the range onto x = 1; y spans the spectrum of b_s·b_s*
    return JNRPoint(1.0, 0.5 * hs_norm(bs.b_s) ** 2)


def _strip_maximum(canon: CanonicalJordan, bs: BsData) -> Tuple[float, float]:
    A = hermitian_square(canon.a_norm)
    B = hermitian_square(bs.b_s)
    boundary = jnr_boundary(A, B, HYPERBOLA_GRID)
    products = boundary.products
    best = int(np.argmax(products))
    return 2 * np.pi * best / HYPERBOLA_GRID, float(products[best])


def _ellipse_maximum(model: EllipseModel, budget: int) -> Tuple[float, float]:
    def product(omega: float) -> float:
        x, y = boundary_xy(model, omega)
        return float(4 * x * y)

    omegas = np.linspace(0, 2 * np.pi, HYPERBOLA_GRID, endpoint=False)
    x, y = boundary_xy(model, omegas)
    products = 4 * x * y
    step = omegas[1] - omegas[0]

    best_omega, best_value = float(omegas[np.argmax(products)]), float(products.max())
    for i in np.argsort(products)[::-1][: max(1, budget // 16)]:
        refined = minimize_scalar(
            lambda w: -product(w),
            bounds=(omegas[i] - step, omegas[i] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if -refined.fun > best_value:
            best_omega, best_value = float(refined.x), float(-refined.fun)
    return best_omega, best_value


def hyperbola_check(
    a: MatrixLike, b: MatrixLike, budget: int = DEFAULT_BUDGET
) -> HyperbolaCheck:
    a, b = CMatrix(a), CMatrix(b)
    for name, m in (("a", a), ("b", b)):
        if m.n != 2:
            raise DimMismatch(f"`{name}` must be 2×2, got {m.n}×{m.n}.", 2, m.n)
    if op_norm(a) == 0.0 or op_norm(b) == 0.0:
        return HyperbolaCheck(True, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, Degeneracy.ZERO)

    canon, bs, _ = normalize_pair(a, b)
    lambda_abs = min(abs(canon.lambda_), 1.0)
    target = 1 + lambda_abs**2

    model_residual, fits = 0.0, True
    if is_vertical_strip(lambda_abs):
        degenerate = Degeneracy.VERTICAL_STRIP
        omega, max_product = _strip_maximum(canon, bs)
    else:
        model = ellipse_model(lambda_abs, bs)
        degenerate = model.degenerate
        omega, max_product = _ellipse_maximum(model, budget)
        model_residual = _model_residual(model, canon, bs)
        fits = model_residual <= model.residual_tolerance(TOLERANCES[TOL_RESIDUAL])
        if not fits:
            logger.warning(
                f"Ellipse model misses the numerical range by {model_residual:.3e}"
            )

    reaches = max_product >= target * (1 - TOLERANCES[TOL_INEQUALITY])
    if not reaches:
        logger.warning(
            f"No point of the numerical range reaches 4xy = {target:.12g} "
            f"(best {max_product:.12g} at ω = {omega:.6g})"
        )
    return HyperbolaCheck(
        passed=bool(reaches and fits),
        margin=float(max_product - target),
        det_margin=det_bound_margin(canon.b_norm, lambda_abs),
        lambda_abs=float(lambda_abs),
        omega=float(omega),
        max_product=float(max_product),
        target=float(target),
        degenerate=degenerate,
        model_residual=model_residual,
    )


def ellipse_rows(
    model: EllipseModel, grid: int
) -> List[Tuple[float, float, float, float, float]]:
    """(ω, x, y, 4xy, residual) along the boundary parametrization."""
    omegas = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    x, y = boundary_xy(model, omegas)
    residual = ellipse_residual(model, x, y)
    return [
        (float(w), float(px), float(py), float(4 * px * py), float(r))
        for w, px, py, r in zip(omegas, x, y, residual)
    ]


def hermitian_square(m: MatrixLike) -> CMatrix:
    arr = as_array(m)
    return CMatrix(arr @ arr.conj().T)


def _model_residual(model: EllipseModel, canon: CanonicalJordan, bs: BsData) -> float:
    # closed-form coefficients against exact boundary points of the range
    boundary = jnr_boundary(
        hermitian_square(canon.a_norm), hermitian_square(bs.b_s), ELLIPSE_REPORT_GRID
    )
    return float(np.max(np.abs(ellipse_residual(model, boundary.x, boundary.y))))
