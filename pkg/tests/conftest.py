import numpy as np
import pytest

from stylematrix.embeddings import EmbeddingTable
from stylematrix.neural import Seq2SeqModel

# Filled by tests/test_acceptance.py; printed in the terminal summary so the
# pass/fail lines show up even when pytest captures stdout.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def make_tiny_model(seed=0, vocab_size=12, d_w=5, d=6, semi_supervised=True, scale=1.0):
    """Random small model with non-trivial classifier weights (for gradient checks)."""
    rng = np.random.default_rng(seed)
    emb = EmbeddingTable(rng.normal(0, 0.5, size=(vocab_size, d_w)))
    emb.vectors[0] = 0.0
    model = Seq2SeqModel.init(emb, d, seed=seed + 1, semi_supervised=semi_supervised)
    for arr in model.parameters().values():
        arr *= scale
    if semi_supervised:
        model.classifier_w[:] = rng.normal(0, 0.5, size=d * d)
    return model


@pytest.fixture
def tiny_model():
    return make_tiny_model()


@pytest.fixture(scope="session")
def toy_setup():
    """The desk-scale attitude experiment (restaurant domain), trained once per session."""
    from stylematrix.experiments import build_toy_setup

    return build_toy_setup()


@pytest.fixture(scope="session")
def toy_ood_setup():
    """Autoencoder trained on labeled restaurant + unlabeled product sentences."""
    from stylematrix.experiments import build_toy_setup

    return build_toy_setup(unlabeled_domains=("product",))
