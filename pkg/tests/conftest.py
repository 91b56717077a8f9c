import mpmath
import numpy as np
import pytest

from dbreg.null import NullSpectrum
from dbreg.statistics import linear_spectrum


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_psd(rng, n, rank=None):
    A = rng.standard_normal((n, rank or n))
    return A @ A.T


def null_data(rng, n=200, k=10, m=5):
    """Independent predictors (mean one) and responses."""
    X = 1.0 + rng.standard_normal((n, m))
    Y = rng.standard_normal((n, k))
    return X, Y


def quad_cumulants(g):
    """Cumulants of the shifted generalized gamma by quadrature of its density.

    Works in t = log(x / sigma) so that the near-lognormal members (tiny v,
    huge w) are resolved; independent of the closed-form moment formula.
    """
    with mpmath.workdps(40):
        v, w = mpmath.mpf(g.v), mpmath.mpf(g.w)
        lgw = mpmath.loggamma(w)
        centre = mpmath.log(w) / v
        width = 1 / (v * mpmath.sqrt(w)) + 1 / v

        def raw(l):
            f = lambda t: mpmath.exp(v * w * t - mpmath.exp(v * t) - lgw + l * t) * v
            pts = [centre + k * width for k in range(-40, 41, 4)]
            return mpmath.quad(f, pts)

        m = [raw(l) for l in range(5)]
        m = [x / m[0] for x in m]
        k2 = m[2] - m[1] ** 2
        k3 = m[3] - 3 * m[2] * m[1] + 2 * m[1] ** 3
        k4 = m[4] - 4 * m[3] * m[1] - 3 * m[2] ** 2 + 12 * m[2] * m[1] ** 2 - 6 * m[1] ** 4
        s = mpmath.mpf(g.sigma)
        return [float(s * m[1] + g.theta), float(s**2 * k2), float(s**3 * k3), float(s**4 * k4)]


def random_spectra(seed, count=100):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(30, 300))
        k = int(rng.integers(2, 40))
        rho = rng.uniform(0, 0.9)
        C = rho ** np.abs(np.subtract.outer(range(k), range(k)))
        Y = rng.standard_normal((n, k)) @ np.linalg.cholesky(C).T
        lam, _ = linear_spectrum(Y)
        out.append(NullSpectrum.from_eigenvalues(lam, int(rng.integers(1, 7)), rng.uniform(0.1, 1)))
    return out


_RESULTS_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(_RESULTS_KEY, [])
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def record(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        lines.append(line)
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_RESULTS_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
