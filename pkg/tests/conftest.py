import pytest

from seqcover import bundled_abp_model, generate_pool

POOL_WALKS = 50_000
POOL_MAX_LEN = 30
POOL_SEED = 7

_acceptance_lines = []


@pytest.fixture(scope="session")
def abp_model():
    return bundled_abp_model()


@pytest.fixture(scope="session")
def abp_pool(abp_model):
    return generate_pool(abp_model, POOL_WALKS, POOL_MAX_LEN, POOL_SEED)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""
    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("]")[1].split(".")[0])):
            terminalreporter.write_line(line)
