import pytest

from seqbo import DesignSpace

# the canonical 8-kind listing used across tests
EIGHT_PARAM_DOC = [
    {"name": "x0", "type": "num", "lb": 0, "ub": 7},
    {"name": "x1", "type": "int", "lb": 0, "ub": 7},
    {"name": "x2", "type": "pow", "lb": 1e-4, "ub": 1e-2, "base": 10},
    {"name": "x3", "type": "cat", "categories": ["a", "b", "c"]},
    {"name": "x4", "type": "bool"},
    {"name": "x5", "type": "pow_int", "lb": 1, "ub": 10000, "base": 10},
    {"name": "x6", "type": "step_int", "lb": 1, "ub": 9, "step": 2},
    {"name": "x7", "type": "int_exponent", "lb": 1, "ub": 1024, "base": 2},
]


@pytest.fixture
def eight_param_space() -> DesignSpace:
    return DesignSpace.parse(EIGHT_PARAM_DOC)
