import json
from typing import Callable

import pytest

from jemo.codec import matrix_to_json
from jemo.linalg import CMatrix, MatrixLike


@pytest.fixture
def e11() -> CMatrix:
    return CMatrix.unit(0, 0)


@pytest.fixture
def e22() -> CMatrix:
    return CMatrix.unit(1, 1)


@pytest.fixture
def e12() -> CMatrix:
    return CMatrix.unit(0, 1)


@pytest.fixture
def identity2() -> CMatrix:
    return CMatrix.identity(2)


@pytest.fixture
def pair_file(tmp_path) -> Callable[..., str]:
    def write(a: MatrixLike, b: MatrixLike, name: str = "pair.json") -> str:
        file = tmp_path / name
        file.write_text(
            json.dumps({"a": matrix_to_json(CMatrix(a)), "b": matrix_to_json(CMatrix(b))})
        )
        return str(file)

    return write
