import numpy as np
import pytest

from etlpv.graph import CommGraph
from etlpv.lpv import ParameterPolytope, PolytopicLpvModel, SchedulingMap, VertexMatrices, build_unicycle_lpv
from etlpv.synthesis import Mode, SynthesisProblem, synthesize

ALPHA_Z, BETA_Z, SIGMA = -0.5, 0.1, 1e-3
FORMATION_REFERENCE = np.array([[1.0, 0.0], [0.0, 0.5], [0.5, -0.5]])

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[k])


@pytest.fixture(scope="session")
def unicycle():
    return build_unicycle_lpv()


@pytest.fixture(scope="session")
def complete3():
    return CommGraph.complete(3)


@pytest.fixture(scope="session")
def path3():
    return CommGraph.path(3)


def _certify(model, lam_pair, margin=1.1):
    cert_min, _ = synthesize(SynthesisProblem(model, lam_pair, None, SIGMA, ALPHA_Z, BETA_Z,
                                              Mode.MINIMIZE_GAMMA_SQUARED))
    return synthesize(SynthesisProblem(model, lam_pair, margin * cert_min.gamma, SIGMA, ALPHA_Z, BETA_Z))


@pytest.fixture(scope="session")
def certified(unicycle):
    """(certificate, controllers) for the unicycle on a complete 3-agent graph."""
    return _certify(unicycle, (3.0, 3.0))


@pytest.fixture(scope="session")
def scalar_plant():
    """A = 0.5, B_u = B_w = C_y = 1, single vertex."""
    vm = VertexMatrices([[0.5]], [[1.0]], [[1.0]], [[1.0]])
    return PolytopicLpvModel(ParameterPolytope(np.array([[0.0]])), (vm,), SchedulingMap("constant"), name="scalar")


@pytest.fixture(scope="session")
def integrator_plant():
    """x+ = x + u + w, y = x."""
    vm = VertexMatrices([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    return PolytopicLpvModel(ParameterPolytope(np.array([[0.0]])), (vm,), SchedulingMap("constant"), name="integrator")
