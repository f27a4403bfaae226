import pathlib

import pytest

from overpriv.annotate import load_default_lexicon
from overpriv.kb import load_default_kb

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def kb():
    return load_default_kb()


@pytest.fixture(scope="session")
def lex(kb):
    return load_default_lexicon(kb)


@pytest.fixture(scope="session")
def fixture_text():
    def load(name: str) -> str:
        return (FIXTURES / name).read_text(encoding="utf-8")

    return load
