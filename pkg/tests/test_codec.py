import json

import numpy as np
import pytest

from jemo.codec import dumps, extract, hydrate, loads, matrix_from_json, matrix_to_json
from jemo.errors import InvalidInput
from jemo.haagerup import ElemOp, NormCertificate, Term
from jemo.linalg import CMatrix


def test_can_extract_matrix() -> None:
    # given
    m = CMatrix([[1, 2j], [0, -1 + 1j]])

    # when
    data = matrix_to_json(m)

    # then
    assert data == {"n": 2, "re": [[1.0, 0.0], [0.0, -1.0]], "im": [[0.0, 2.0], [0.0, 1.0]]}


def test_can_hydrate_matrix_without_imaginary_part() -> None:
    # when
    m = matrix_from_json({"n": 2, "re": [[1, 0], [0, 1]]})

    # then
    assert m == CMatrix.identity(2)


def test_matrix_survives_json_text() -> None:
    # given
    m = CMatrix([[0.1 + 0.2j, 1 / 3], [np.pi, -np.e * 1j]])

    # when
    restored = loads(CMatrix, dumps(m))

    # then
    assert restored == m


@pytest.mark.parametrize(
    "given",
    [
        [[1, 0], [0, 1]],
        {"re": [[1, 0], [0, 1]]},
        {"n": 3, "re": [[1, 0], [0, 1]]},
        {"n": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0, 0], [0, 0, 0]]},
    ],
)
def test_fail_hydration_on_malformed_matrix(given) -> None:
    with pytest.raises(ValueError):
        matrix_from_json(given)


def test_can_extract_complex() -> None:
    assert extract(1 - 2j) == [1.0, -2.0]
    assert hydrate(complex, [1, -2]) == 1 - 2j


def test_can_hydrate_elementary_operator() -> None:
    # given
    data = {
        "dim": 2,
        "terms": [
            {"a": matrix_to_json(CMatrix.identity(2)), "b": matrix_to_json(CMatrix.unit(0, 1))},
        ],
    }

    # when
    operator = hydrate(ElemOp, data)

    # then
    assert operator.dim == 2
    assert len(operator.terms) == 1
    assert operator.terms[0].b == CMatrix.unit(0, 1)


def test_can_extract_certificate() -> None:
    # given
    witness = CMatrix.identity(2)
    certificate = NormCertificate(
        lower=1.0,
        lower_witness=witness,
        upper=1.5,
        upper_witness=[Term(witness, witness)],
        margins={"sandwich": 0.5},
    )

    # when
    data = json.loads(dumps(certificate, NormCertificate))

    # then
    assert data["lower"] == 1.0
    assert data["upper"] == 1.5
    assert data["lower_witness"]["n"] == 2
    assert data["margins"] == {"sandwich": 0.5}
    assert data["passed"] is True
    assert data["formula"] is None


@pytest.mark.parametrize(
    "given",
    [
        {"terms": [{"a": {"n": 1, "re": [[1]]}}]},
        {"dim": 2, "terms": "x"},
        {"dim": 2, "terms": [{"a": [1], "b": [2]}]},
    ],
)
def test_fail_hydration_on_malformed_operator(given) -> None:
    with pytest.raises(InvalidInput) as e:
        hydrate(ElemOp, given)

    assert e.value.value_type is ElemOp
