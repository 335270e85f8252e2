import numpy as np
import pytest

import acceptance_log
import datagen


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one verdict line per acceptance criterion at the end of the run."""
    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def waveform_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "waveform.csv"
    features, labels = datagen.make_waveform(5000, seed=101)
    datagen.write_csv(path, features, labels)
    return path


@pytest.fixture(scope="session")
def signal_noise_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "signal_noise.csv"
    features, labels = datagen.make_signal_noise(600, seed=42)
    datagen.write_csv(path, features, labels)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(0)
