import numpy as np
import pytest

from momentup.states import StateSpec, density_from_spec, random_mixed_state, random_pure_state


def zoo_states(hbar: float = 1.0):
    """Labelled density matrices spanning every supported family (34 states)."""
    out = []
    for n in range(6):
        out.append((f"fock{n}", density_from_spec(StateSpec.fock(n, cutoff=24, hbar=hbar))))
    for alpha in (0.3, 1.0j, 0.7 - 0.5j, -1.2 + 0.4j, 1.5, 0.2 + 0.9j):
        out.append((f"coherent{alpha}", density_from_spec(StateSpec.coherent(alpha, cutoff=48, hbar=hbar))))
    for nbar in (0.0, 0.1, 0.5, 1.0, 2.0):
        out.append((f"thermal{nbar}", density_from_spec(StateSpec.thermal(nbar, cutoff=96, hbar=hbar))))
    for r, phi in ((0.1, 0.0), (0.3, 1.0), (0.5, -0.7), (0.6, 2.5), (0.8, 0.0), (0.4, np.pi)):
        out.append((f"squeezed{r},{phi}", density_from_spec(StateSpec.squeezed_vacuum(r, phi, cutoff=96, hbar=hbar))))
    rng = np.random.default_rng(20260)
    for k in range(8):
        out.append((f"mixed{k}", random_mixed_state(int(rng.integers(2, 7)), 16, rng=rng, hbar=hbar)))
    for k in range(3):
        out.append((f"pure{k}", random_pure_state(6, 16, rng=rng, hbar=hbar)))
    return out


ZOO = zoo_states()

# filled by test_acceptance, printed once the session ends
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def zoo():
    return ZOO


def fock(n: int, cutoff: int = 24, hbar: float = 1.0):
    return density_from_spec(StateSpec.fock(n, cutoff=cutoff, hbar=hbar))
