import pytest

from periodic_witness.model import build_detection_model


@pytest.fixture(scope="session")
def model():
    return build_detection_model()


@pytest.fixture(scope="session")
def sinc_model():
    return build_detection_model(sinc_approx="numeric")


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i, (ok, detail) in sorted(test_acceptance.RESULTS.items()):
        terminalreporter.write_line(f"CRITERION {i}: {'PASS' if ok else 'FAIL'}: {detail}")
