import pytest

from streammt.corpus import build_streaming_samples
from streammt.model import ModelConfig
from streammt.tasks import make_documents, task_vocabulary
from streammt.train import train_multi_k


@pytest.fixture(scope="session")
def copy_model():
    """A toy model trained on the copy task; returns (params, config, loss log)."""
    cfg = ModelConfig(task_vocabulary("copy", 12), layers=1, model_dim=32, heads=2, ffn_dim=64,
                      encoder_kind="pbe", history=0)
    samples = build_streaming_samples(make_documents("copy", 30, 6, seed=1), 0)
    log: list = []
    params = train_multi_k(samples, cfg, (1, 8), steps=1000, seed=0, log=log)
    return params, cfg, log


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_RESULTS

    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
