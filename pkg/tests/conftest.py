import json

import pytest

from ctxlens.config import RunConfig
from ctxlens.synthetic import write_corpus

_criterion_results: list[tuple[str, bool]] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        marker = item.get_closest_marker("criterion")
        if marker:
            _criterion_results.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter):
    if _criterion_results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, passed in _criterion_results:
            terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}")


@pytest.fixture(scope="session")
def small_workspace(tmp_path_factory):
    """A small on-disk corpus plus a ready-to-use config dict."""
    root = tmp_path_factory.mktemp("ws")
    corpus_dir = root / "corpus"
    paths, vocab_path = write_corpus(corpus_dir, n_docs=4, words_per_doc=900, seed=7)
    config = {
        "corpus_paths": [str(p) for p in paths],
        "vocab_path": str(vocab_path),
        "context_lens": [16, 32, 64],
        "stride_ratio": 8,
        "ngram_n": 3,
        "ngram_n_range": [2, 5],
        "freq_corpus_paths": [str(p) for p in paths],
        "output_dir": str(root / "out"),
        "seed": 7,
    }
    return config


def write_config(tmp_path, config: dict, name="config.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return str(path)


def config_with(base: dict, **updates) -> RunConfig:
    return RunConfig.model_validate({**base, **updates})
