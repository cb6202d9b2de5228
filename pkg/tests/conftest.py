import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spoofbench.synthcorpus import CorpusSpec, build_corpus  # noqa: E402

TINY_SPEC = CorpusSpec(name="tiny", seed=7, dur_min=0.4, dur_max=0.6,
                       genuine={"train": 8, "dev": 0, "eval": 6},
                       per_attack={"train": 3, "dev": 0, "eval": 2}, eval_only=2)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """A 60-utterance corpus with every attack tag, built once per session."""
    out = tmp_path_factory.mktemp("tiny_corpus")
    build_corpus(TINY_SPEC, out)
    return out


@pytest.fixture
def cache_env(tmp_path, monkeypatch):
    root = tmp_path / "cache"
    monkeypatch.setenv("SPOOFBENCH_CACHE", str(root))
    return root


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
