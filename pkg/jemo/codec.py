from __future__ import annotations

import json
from typing import Any, Dict, List, Optional, Type, TypeVar

import numpy as np
from chili import HydrationStrategy
from chili.error import HydrationError
from chili.hydration import StrategyRegistry

from .constants import MATRIX_DIM, MATRIX_IMAG, MATRIX_REAL
from .errors import InvalidInput
from .linalg import CMatrix

_T = TypeVar("_T")


class CMatrixStrategy(HydrationStrategy):
    def hydrate(self, value: Any) -> CMatrix:
        if not isinstance(value, dict):
            raise ValueError(
                f"Matrix must be an object with keys `{MATRIX_DIM}`, "
                f"`{MATRIX_REAL}`, `{MATRIX_IMAG}`, got {type(value).__name__}."
            )
        try:
            n = int(value[MATRIX_DIM])
            real = np.array(value[MATRIX_REAL], dtype=float)
            imag = np.array(value.get(MATRIX_IMAG, np.zeros((n, n))), dtype=float)
        except KeyError as e:
            raise ValueError(f"Matrix is missing key {e}.") from e

        if real.shape != (n, n) or imag.shape != (n, n):
            raise ValueError(
                f"Matrix declares n={n} but has parts of shape "
                f"{real.shape} and {imag.shape}."
            )
        return CMatrix(real + 1j * imag)

    def extract(self, value: CMatrix) -> Dict[str, Any]:
        return {
            MATRIX_DIM: value.n,
            MATRIX_REAL: value.data.real.tolist(),
            MATRIX_IMAG: value.data.imag.tolist(),
        }


class ComplexStrategy(HydrationStrategy):
    def hydrate(self, value: Any) -> complex:
        if isinstance(value, (list, tuple)):
            real, imag = value
            return complex(float(real), float(imag))
        return complex(value)

    def extract(self, value: complex) -> List[float]:
        value = complex(value)
        return [value.real, value.imag]


class FloatStrategy(HydrationStrategy):
    def hydrate(self, value: Any) -> float:
        return float(value)

    def extract(self, value: Any) -> float:
        # numpy scalars are not JSON serializable
        return float(value)


codec_registry = StrategyRegistry()
codec_registry.add(CMatrix, CMatrixStrategy())
codec_registry.add(complex, ComplexStrategy())
codec_registry.add(float, FloatStrategy())


def extract(value: Any, value_type: Optional[Type] = None) -> Any:
    strategy = codec_registry.get_for(value_type or type(value), strict=True)
    return strategy.extract(value)


def hydrate(value_type: Type[_T], data: Any) -> _T:
    strategy = codec_registry.get_for(value_type, strict=True)
    try:
        return strategy.hydrate(data)
    except (HydrationError, AttributeError, KeyError, TypeError, ValueError) as e:
        raise InvalidInput(
            f"Could not read `{getattr(value_type, '__name__', value_type)}`: {e}",
            value_type,
        ) from e


def dumps(
    value: Any, value_type: Optional[Type] = None, indent: Optional[int] = 2
) -> str:
    return json.dumps(extract(value, value_type), indent=indent)


def loads(value_type: Type[_T], text: str) -> _T:
    return hydrate(value_type, json.loads(text))


def matrix_from_json(data: Any) -> CMatrix:
    return CMatrixStrategy().hydrate(data)


def matrix_to_json(value: CMatrix) -> Dict[str, Any]:
    return CMatrixStrategy().extract(value)
