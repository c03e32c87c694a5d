import numpy as np
import pytest

from monitored_transport.model import FlatBand, Junction, LorentzianFilter, Reservoir

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        outcome = "xfailed" if hasattr(rep, "wasxfail") and rep.skipped else rep.outcome
        _CRITERIA[mark.args[0]] = (mark.args[1], outcome, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, outcome, dur = _CRITERIA[num]
        tag = "PASS" if outcome == "passed" else "FAIL"
        note = " [known unattainable, strict xfail]" if outcome == "xfailed" else ""
        terminalreporter.write_line(f"[{tag}] criterion {num:2d}: {title} ({dur:.1f}s){note}")


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_filter(rng, center=0.0, spread=2.0):
    return LorentzianFilter(
        t_c=rng.uniform(0.4, 1.5), delta=rng.uniform(0.3, 1.0), eps_f=center + rng.uniform(-spread, spread)
    )


def random_coupling(rng, n):
    sites = rng.choice(n, size=rng.integers(1, n + 1), replace=False)
    return tuple((int(s), complex(rng.uniform(0.5, 1.2), rng.uniform(-0.3, 0.3))) for s in sites)


def random_junction(rng, n=None, gamma=None, bias=1.0, flat=False, T_max=0.8):
    """Generic junction: random Hermitian h and O, filtered (or flat-band) leads."""
    n = int(rng.integers(1, 4)) if n is None else n
    h = random_hermitian(rng, n)
    O = random_hermitian(rng, n, 0.7)
    res = []
    for _ in range(2):
        if flat:
            hyb = FlatBand(rng.uniform(0.2, 1.0), half_width=rng.uniform(2.0, 4.0))
        else:
            hyb = random_filter(rng)
        res.append(
            Reservoir(hyb, mu=rng.uniform(-bias, bias), T=rng.uniform(0.0, T_max), coupling=random_coupling(rng, n))
        )
    g = rng.uniform(0.0, 3.0) if gamma is None else gamma
    return Junction(h=h, O=O, left=res[0], right=res[1], gamma=g)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
