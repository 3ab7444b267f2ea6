import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kernel_reach import systems as S
from kernel_reach.core import SafetyProblem, zero_policy
from kernel_reach.sampling import SamplingPlan, UniformOverBox, generate_sample

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def integrator_problem():
    K, T = S.integrator_sets()
    return SafetyProblem(5, K, T, zero_policy(2, 1))


@pytest.fixture(scope="session")
def integrator_system():
    return S.integrator(S.gaussian(0.01, 2))


@pytest.fixture(scope="session")
def small_sample(integrator_system, integrator_problem):
    plan = SamplingPlan(UniformOverBox(integrator_problem.safe_set), 300, integrator_problem.policy, seed=7)
    return generate_sample(integrator_system, plan)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def log(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
