"""Shared fixtures: group backends and element helpers."""

import pytest

from groups import decode_element, parse_group


@pytest.fixture
def Z():
    return parse_group("Z")


@pytest.fixture
def F2():
    return parse_group("F2")


@pytest.fixture
def H3():
    return parse_group("heisenberg")


@pytest.fixture
def L2():
    return parse_group("lamplighter")


@pytest.fixture
def el():
    """el(backend, "ab") -> GroupElement; several encodings give a list."""

    def make(backend, *texts):
        elements = [decode_element(backend, t) for t in texts]
        return elements[0] if len(elements) == 1 else elements

    return make


@pytest.fixture
def db_path(tmp_path):
    return str(tmp_path / "runs.db")
