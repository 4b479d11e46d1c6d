import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

import pytest

FIXTURES = pathlib.Path(__file__).parent.parent / "fixtures"


@pytest.fixture(scope="session")
def corpus_source() -> str:
    return (FIXTURES / "travel-booking.abc").read_text()


@pytest.fixture(scope="session")
def corpus_spec(corpus_source):
    from abclang.validate import load_spec

    spec, diags = load_spec(corpus_source, "travel-booking.abc")
    assert spec is not None, [d.render(color=False) for d in diags]
    assert not diags
    return spec


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)
