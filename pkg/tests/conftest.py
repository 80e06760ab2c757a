import pytest

from pepheno.terms import load_terms


@pytest.fixture(scope="session")
def terms():
    return load_terms()


@pytest.fixture(scope="session")
def synonyms(terms):
    return terms.merged_synonyms()
