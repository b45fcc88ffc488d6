import pathlib

import pytest

REPO = pathlib.Path(__file__).resolve().parents[1]

_acceptance_results: list[tuple[str, str]] = []


def record_acceptance(name: str, passed: bool) -> None:
    _acceptance_results.append((name, "PASS" if passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, verdict in _acceptance_results:
        terminalreporter.write_line(f"[{verdict}] {name}")


@pytest.fixture(scope="session")
def testdata() -> pathlib.Path:
    return REPO / "testdata"


@pytest.fixture(scope="session")
def golden_dir(testdata) -> pathlib.Path:
    return testdata / "golden"


@pytest.fixture(scope="session")
def ahp_dir(testdata) -> pathlib.Path:
    return testdata / "ahp"
