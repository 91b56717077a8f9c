"""Monte Carlo size and power studies for the two F-type tests.

Data follow the linear model ``Y = X beta + eps`` with predictor rows
``X_i ~ N(1_m, Theta_x)`` (AR(1), rho_x = 0.5 by default), error rows
``eps_i ~ N(0, Theta_eps)`` under an AR(1) or equal-correlation model and
the linear kernel ``S = Y Y'``. With ``tau = 0`` the coefficient matrix is
zero and the replicates measure size.
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as sps

from . import _parallel
from .errors import GammaFitFailed, InvalidCorrelation, InvalidInput
from .null import (
    NullSpectrum,
    bootstrap_pvalues,
    box_pvalue,
    cumulants,
    fit_generalized_gamma,
    tail_pvalue_gamma,
)
from .statistics import linear_spectrum, noncentrality_factor, orthonormal_basis, spectral_statistics

MODELS = ("ar1", "equal")
DEFAULT_ALPHAS = (0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class CorrelationModel:
    kind: str
    rho: float
    dim: int

    def matrix(self):
        return build_correlation(self.kind, self.rho, self.dim)


def build_correlation(kind, rho, dim):
    """AR(1) (``rho^|i-j|``) or equal-correlation matrix of size ``dim``."""
    dim = int(dim)
    if dim < 1:
        raise InvalidCorrelation(f"dimension must be >= 1, got {dim}")
    if not -1 < rho < 1:
        raise InvalidCorrelation(f"rho must lie in (-1, 1), got {rho}")
    if kind == "ar1":
        idx = np.arange(dim)
        C = float(rho) ** np.abs(idx[:, None] - idx[None, :])
    elif kind == "equal":
        if dim > 1 and rho <= -1.0 / (dim - 1):
            raise InvalidCorrelation(f"equal correlation needs rho > {-1.0 / (dim - 1):.4g}")
        C = np.full((dim, dim), float(rho))
        np.fill_diagonal(C, 1.0)
    else:
        raise InvalidCorrelation(f"unknown correlation model {kind!r}; expected one of {MODELS}")
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise InvalidCorrelation(f"{kind} correlation with rho={rho} is not positive definite")
    return C


def sample_mvnormal(mean, cov, n, rng):
    """``n`` rows drawn i.i.d. from ``N(mean, cov)`` through a Cholesky factor."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidCorrelation("covariance matrix is not positive definite")
    z = rng.standard_normal((int(n), cov.shape[0]))
    return np.asarray(mean, dtype=float) + z @ L.T


def signal_count(tau, k, m):
    # round half up
    return int(math.floor(tau * k * m + 0.5))


def gen_beta(tau, k, m, rng):
    """Sparse ``m x k`` coefficient matrix with ``round(tau k m)`` signals.

    Each signal is ``sqrt(log(k) / (25 tau k m)) + (1/k) * N(0, 0.01)``
    (the normal term has variance 0.01); positions are uniform without
    replacement.
    """
    if not 0 <= tau <= 1:
        raise InvalidInput(f"tau must lie in [0, 1], got {tau}")
    beta = np.zeros(m * k)
    count = signal_count(tau, k, m)
    if count:
        pos = rng.choice(m * k, size=count, replace=False)
        base = math.sqrt(math.log(k) / (25.0 * tau * k * m))
        beta[pos] = base + rng.normal(0.0, 0.1, size=count) / k
    return beta.reshape(m, k)


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell."""

    n: int = 500
    k: int = 10
    m: int = 5
    model: str = "ar1"
    rho: float = 0.3
    x_rho: float = 0.5
    tau: float = 0.0
    replicates: int = 1000
    B: int = 2000
    alpha: float = 0.05
    seed: int = 0
    route: str = "bootstrap"
    beta: tuple = None

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidInput(f"replicates must be >= 1, got {self.replicates}")
        if not 0 < self.alpha < 1:
            raise InvalidInput(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.tau <= 1:
            raise InvalidInput(f"tau must lie in [0, 1], got {self.tau}")
        if self.model not in MODELS:
            raise InvalidInput(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.route not in ("bootstrap", "gamma", "box"):
            raise InvalidInput(f"unknown route {self.route!r}")
        if not self.n > self.m >= 1 or self.k < 1:
            raise InvalidInput(f"need n > m >= 1 and k >= 1, got n={self.n}, m={self.m}, k={self.k}")
        if self.B < 100:
            raise InvalidInput(f"B must be >= 100, got {self.B}")


def _pvalue(route, t, spectrum, method):
    c = cumulants(spectrum, method)
    if route == "gamma":
        try:
            return tail_pvalue_gamma(t, fit_generalized_gamma(c))
        except GammaFitFailed:
            pass
    return box_pvalue(t, c)


def run_replicate(spec, i):
    """P-values ``(p_pseudo, p_sqrt)`` for replicate ``i`` of ``spec``."""
    ss = _parallel.substream(spec.seed, i)
    rng = _parallel.generator(ss, 0)
    theta_x = build_correlation("ar1", spec.x_rho, spec.m)
    theta_e = build_correlation(spec.model, spec.rho, spec.k)
    X = sample_mvnormal(np.ones(spec.m), theta_x, spec.n, rng)
    if spec.beta is not None:
        beta = np.asarray(spec.beta, dtype=float).reshape(spec.m, spec.k)
    else:
        beta = gen_beta(spec.tau, spec.k, spec.m, rng)
    Y = X @ beta + sample_mvnormal(np.zeros(spec.k), theta_e, spec.n, rng)

    values, vectors = linear_spectrum(Y)
    t = spectral_statistics(values, vectors, orthonormal_basis(X))
    spectrum = NullSpectrum.from_eigenvalues(values, spec.m, noncentrality_factor(X))
    t_obs = {mt: st.value for mt, st in t.items()}
    if spec.route == "bootstrap":
        p = bootstrap_pvalues(t_obs, spectrum, spec.B, _parallel.substream(ss, 1), threads=1)
    else:
        p = {mt: _pvalue(spec.route, t_obs[mt], spectrum, mt) for mt in t_obs}
    return p["pseudo"], p["sqrt"]


def simulate_pvalues(spec, threads=None):
    """``(replicates, 2)`` array of p-values, columns pseudo and sqrt."""
    chunk = max(1, spec.replicates // (4 * _parallel.resolve_threads(threads)))
    chunks = [range(s, min(s + chunk, spec.replicates)) for s in range(0, spec.replicates, chunk)]
    parts = _parallel.pmap(lambda r: [run_replicate(spec, i) for i in r], chunks, threads)
    return np.array([p for part in parts for p in part], dtype=float)


@dataclass
class PowerRow:
    model: str
    rho: float
    tau: float
    n: int
    replicates: int
    rate_pseudo: float
    rate_sqrt: float
    se_pseudo: float
    se_sqrt: float
    pvalues: np.ndarray = field(default=None, repr=False)

    def se_difference(self):
        return math.hypot(self.se_pseudo, self.se_sqrt)


def _rate(p, alpha):
    r = float(np.mean(p <= alpha))
    return r, math.sqrt(r * (1 - r) / p.size)


def run_power_experiment(spec, threads=None):
    """Rejection rates of both tests at ``spec.alpha``."""
    p = simulate_pvalues(spec, threads)
    r1, s1 = _rate(p[:, 0], spec.alpha)
    r2, s2 = _rate(p[:, 1], spec.alpha)
    return PowerRow(spec.model, spec.rho, spec.tau, spec.n, spec.replicates, r1, r2, s1, s2, p)


@dataclass
class SizeCurve:
    alphas: np.ndarray
    size_pseudo: np.ndarray
    size_sqrt: np.ndarray
    ks_pseudo: float
    ks_sqrt: float
    pvalues: np.ndarray = field(repr=False)


def run_size_experiment(spec, alphas=DEFAULT_ALPHAS, threads=None):
    """Empirical size over an alpha grid plus KS distance from uniformity."""
    if spec.tau != 0 or spec.beta is not None:
        raise InvalidInput("size experiments need tau = 0 and no fixed beta")
    p = simulate_pvalues(spec, threads)
    alphas = np.asarray(alphas, dtype=float)
    size = [(p[:, j][:, None] <= alphas[None, :]).mean(axis=0) for j in range(2)]
    ks = [float(sps.kstest(p[:, j], "uniform").statistic) for j in range(2)]
    return SizeCurve(alphas, size[0], size[1], ks[0], ks[1], p)


@dataclass
class PowerReport:
    rows: list

    COLUMNS = ("model", "rho", "tau", "n", "replicates", "rate_pseudo", "rate_sqrt", "se_pseudo", "se_sqrt")

    def records(self):
        return [{c: getattr(r, c) for c in self.COLUMNS} for r in self.rows]

    def to_tsv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for rec in self.records():
            writer.writerow([_fmt(rec[c]) for c in self.COLUMNS])
        return buf.getvalue()


def _fmt(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def run_table(specs, threads=None):
    """Power rows for a list of scenarios, in order."""
    return PowerReport([run_power_experiment(s, threads) for s in specs])


def run_consistency_check(n_grid, beta, base=None, threads=None):
    """Power of both tests at each ``n`` for a fixed coefficient matrix."""
    base = base or ScenarioSpec()
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (base.m, base.k):
        raise InvalidInput(f"beta must have shape ({base.m}, {base.k}), got {beta.shape}")
    rows = []
    for n in n_grid:
        spec = replace(base, n=int(n), beta=tuple(beta.ravel()), tau=float(np.mean(beta != 0)))
        rows.append(run_power_experiment(spec, threads))
    return rows
