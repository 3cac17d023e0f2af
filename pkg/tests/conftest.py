import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from secminer.lexicon import Indicator, Lexicon, PairRule, load_default_lexicon


@pytest.fixture(scope="session")
def default_lexicon():
    return load_default_lexicon()


@pytest.fixture
def small_lexicon():
    indicators = (
        Indicator("xss", "relevant"),
        Indicator("hack", "relevant", ambiguous=True),
        Indicator("ldap", "relevant", ambiguous=True),
        Indicator("login", "relevant"),
        Indicator("two factor", "relevant"),
        Indicator("signature", "irrelevant", ambiguous=True),
        Indicator("password", "relevant"),
    )
    pairs = (PairRule("ldap", "login", "promotes_relevance"),)
    return Lexicon(indicators, pairs, version="test")
