import pytest
from hypothesis import HealthCheck, settings

from astevo.code import HeuristicCode
from astevo.problems import OBP_BIN, TSP_NEXT
from astevo.seeds import seed_sources

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

SCHEMAS = {"tsp": TSP_NEXT, "obp": OBP_BIN}

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def seed_codes(problem):
    return [HeuristicCode.from_text(s, arity=SCHEMAS[problem].arity) for s in seed_sources(problem)]


@pytest.fixture(scope="session")
def tsp_seeds():
    return seed_codes("tsp")


@pytest.fixture(scope="session")
def obp_seeds():
    return seed_codes("obp")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
