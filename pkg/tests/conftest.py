import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import make_hop, unit_hop  # noqa: E402

import fso_relay as fr  # noqa: E402


@pytest.fixture(scope="session")
def exp_hop():
    """Unit channel whose per-hop SNR is Exp(1)."""
    return unit_hop()


@pytest.fixture(scope="session")
def gg421_hop_10db():
    """Weak-turbulence reference hop, (alpha, beta, xi^2) = (4, 2, 1)."""
    return make_hop(4, 2, 1, 10.0)


@pytest.fixture(params=["df", "csi0", "csi1", "fixed"])
def protocol(request):
    return {"df": fr.Df(), "csi0": fr.CsiAf(q=0), "csi1": fr.CsiAf(q=1),
            "fixed": fr.FixedAf()}[request.param]
