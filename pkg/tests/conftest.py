import pytest

from tame_levy.tower import build_tower, bundled_config


@pytest.fixture(scope="session")
def t1():
    return bundled_config("T1")


@pytest.fixture(scope="session")
def t2():
    return bundled_config("T2")


@pytest.fixture(scope="session")
def t3():
    return bundled_config("T3")


@pytest.fixture(scope="session")
def quad2():
    # unramified quadratic over Q_2
    return build_tower({"p": 2, "alpha": 1, "levels": [[1, 1], [1, 2]]})


@pytest.fixture(scope="session")
def ram5():
    # pi^2 = 5
    return build_tower({"p": 5, "alpha": 1, "levels": [[1, 1], [2, 1]]})


# acceptance lines, printed again in the terminal summary so they survive output capture
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance():
    def record(number, passed, detail, seconds):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  ({seconds:.1f}s)  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
