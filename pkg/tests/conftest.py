import hypothesis
import pytest

from stash.movement import train_default_model
from stash.pathmodel import synthesize_corpus

hypothesis.settings.register_profile("suite", deadline=None, max_examples=50)
hypothesis.settings.load_profile("suite")


@pytest.fixture(scope="session")
def default_corpus():
    return synthesize_corpus(seed=42)


@pytest.fixture(scope="session")
def default_model():
    return train_default_model(seed=0)
