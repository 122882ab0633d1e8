import pytest
from hypothesis import settings

from relaysel.params import NetworkParams

# Same examples on every run, so a green suite stays green.
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture
def rayleigh_params():
    return NetworkParams(
        n_branches=3,
        n_interferers=2,
        m_first=1,
        m_second=1,
        m_interf=1,
        avg_snr_first=10.0,
        avg_snr_second=10.0,
        avg_inr=1.0,
        outage_threshold=1.0,
    )
