"""
Shared fixtures: circuit parameters from the device defaults and a known
four-level model with resolved splittings.
"""

import numpy as np
import pytest

from squidsim.storage.models import CircuitParams, DecoherenceRates, FourLevelModel

L_DEVICE = 1080e-12
C_DEVICE = 80e-12
C_RESOLVED = 80e-15
BETA_DEVICE = 1.39


@pytest.fixture
def device_params():
    """Device circuit at the symmetry point."""
    return CircuitParams.from_beta_l(BETA_DEVICE, L=L_DEVICE, C=C_DEVICE)


@pytest.fixture
def reference_model():
    """Crossings at 0.5 (00 and 11), 0.50707 (1R/0L) and 0.49293 (1L/0R)."""
    return FourLevelModel(
        e0=(14.0, 14.0, 0.0, 0.0),
        k=(-980.0, 980.0, -1000.0, 1000.0),
        delta00=0.05,
        delta01=0.3,
        delta11=0.6,
        bias_ref=0.5,
    )


@pytest.fixture
def reference_biases():
    return np.linspace(0.47, 0.53, 241)


@pytest.fixture
def default_rates():
    return DecoherenceRates(gamma1=1.0, gamma_inter=1e-3, gamma2=2.0)
