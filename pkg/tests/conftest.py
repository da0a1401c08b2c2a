import pytest
from hypothesis import settings

from p2piot.model import DEFAULT_TASKS, Limits, build_instance, custom_instance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def full_instance():
    return build_instance(42)


@pytest.fixture
def two_relay_instance():
    """Object 0 sits 2 m from relay 1; relay 2 is 6 m further along."""
    return custom_instance(
        object_positions=[(1.0, 3.0)],
        relay_positions=[(3.0, 3.0), (9.0, 3.0)],
        requests=[(0, 1)],
        object_capability={0: {1, 2, 3}},
        tasks=DEFAULT_TASKS,
        area=(12.0, 6.0),
        limits=Limits(vm_budget=1),
    )


# criterion number -> list of (label, verdict), filled by the acceptance suite
VERDICTS: dict[str, list[tuple[str, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(VERDICTS, key=lambda s: [int(p) if p.isdigit() else p for p in s.split(".")]):
        for label, verdict in VERDICTS[key]:
            terminalreporter.write_line(f"criterion {key} {label}: {verdict}")
