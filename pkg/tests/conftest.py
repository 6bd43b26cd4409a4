import pytest

from dlczsim.calibration import calibrated_link_params


@pytest.fixture(scope="session")
def calibrated():
    """The frozen benchmark-link calibration (1% excitation, 12 modes)."""
    return calibrated_link_params()


@pytest.fixture(scope="session")
def clean_link():
    """Calibrated link with crosstalk and dark counts switched off."""
    return calibrated_link_params(crosstalk_eps=0.0, dark_count_prob=0.0)
