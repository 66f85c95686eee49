import os

# more workers than cores so the thread-count determinism checks mean something
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import numpy as np  # noqa: E402
import pytest  # noqa: E402
from hypothesis import HealthCheck, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402
from hypothesis.extra.numpy import arrays  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_entries = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


@st.composite
def hpd_matrices(draw, min_eig: float = 0.05):
    """Random 3x3 HPD matrices with eigenvalues bounded away from zero."""
    re = draw(arrays(np.float64, (3, 3), elements=_entries))
    im = draw(arrays(np.float64, (3, 3), elements=_entries))
    a = re + 1j * im
    m = a @ a.conj().T + min_eig * np.eye(3)
    return 0.5 * (m + m.conj().T)


@st.composite
def invertible_matrices(draw):
    re = draw(arrays(np.float64, (3, 3), elements=_entries))
    im = draw(arrays(np.float64, (3, 3), elements=_entries))
    g = re + 1j * im + 4.0 * np.eye(3)
    if abs(np.linalg.det(g)) < 1e-2:
        g = g + 4.0 * np.eye(3)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hpd(rng, n=3, shift=0.1):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = a @ a.conj().T + shift * np.eye(n)
    return 0.5 * (m + m.conj().T)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number].line())
