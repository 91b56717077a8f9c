"""Asymptotic null law of the F-type statistics and its p-value routes.

Under no association both statistics behave like a weighted chi-squared
mixture::

    T  ~  (1/m) * sum_i a_i * (W_i + f * R_i),   W_i ~ chi2(m-1),  R_i ~ chi2(1)

with ``a_i = w_i = lambda_i / sum(lambda)`` for the pseudo-F statistic and
``a_i = eta_i = sqrt(lambda_i) / sum(sqrt(lambda))`` for the square-root
statistic, ``lambda_i`` the eigenvalues of ``H S H`` and
``f = 1 / (1 + mu' Delta^{-1} mu)`` a scalar driven by the predictor mean.

Three ways of turning an observed statistic into a p-value are provided:
Monte Carlo draws from the mixture (parametric bootstrap), a two-cumulant
scaled chi-squared fit, and a four-cumulant shifted generalized-gamma fit.
"""

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import special, stats

from . import _parallel
from .errors import DegenerateSpectrum, GammaFitFailed, InvalidCumulants, InvalidInput
from .kernels import center, psd_eigh
from .statistics import METHODS, as_design, noncentrality_factor

# Eigenvalues below this fraction of the largest carry no weight worth sampling.
DROP_RTOL = 1e-12
BLOCK = 1024


@dataclass(frozen=True, eq=False)
class NullSpectrum:
    """Eigenvalues of ``H S H`` plus the mixture metadata.

    Attributes
    ----------
    eigenvalues : ndarray
        Descending, clipped at zero.
    m : int
        Number of predictors.
    factor : float
        ``1 / (1 + mu' Delta^{-1} mu)``; 1 for mean-zero predictors.
    """

    eigenvalues: np.ndarray
    m: int
    factor: float = 1.0
    notes: tuple = field(default=())

    @classmethod
    def from_eigenvalues(cls, eigenvalues, m, factor=1.0):
        lam = np.sort(np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None))[::-1]
        if lam.size == 0 or not lam[0] > 0:
            raise DegenerateSpectrum("all eigenvalues of H S H are zero")
        if int(m) < 1:
            raise InvalidInput(f"m must be >= 1, got {m}")
        if not 0.0 <= factor <= 1.0:
            raise InvalidInput(f"factor must lie in [0, 1], got {factor}")
        notes = []
        eta = np.sqrt(lam) / np.sqrt(lam).sum()
        if eta[0] < 2.0 / lam.size:
            notes.append("HeavyTailedSpectrum")
        return cls(lam, int(m), float(factor), tuple(notes))

    @property
    def w(self):
        return self.eigenvalues / self.eigenvalues.sum()

    @property
    def eta(self):
        root = np.sqrt(self.eigenvalues)
        return root / root.sum()

    def weights(self, method):
        if method == "pseudo":
            return self.w
        if method == "sqrt":
            return self.eta
        raise InvalidInput(f"unknown method {method!r}; expected one of {METHODS}")

    @property
    def active(self):
        """Mask of eigenvalues kept for sampling."""
        return self.eigenvalues > DROP_RTOL * self.eigenvalues[0]

    def active_weights(self, method):
        a = self.weights(method)[self.active]
        return a / a.sum()

    @property
    def m0(self):
        return self.m - 1 + self.factor


def null_spectrum(S, X, factor=None):
    """Null mixture for similarity ``S`` and design ``X``.

    ``factor`` defaults to the plug-in value computed from the sample mean
    and covariance of ``X``; pass ``1.0`` for designs known to be centred.
    """
    X = as_design(X)
    A = center(S).values
    if A.shape[0] != X.n:
        raise InvalidInput(f"similarity matrix has {A.shape[0]} subjects but design has {X.n}")
    lam, _ = psd_eigh(A)
    if factor is None:
        factor = noncentrality_factor(X)
    return NullSpectrum.from_eigenvalues(lam, X.m, factor)


def _draw_xi(rng, m, factor, shape):
    xi = factor * rng.chisquare(1, shape)
    if m > 1:
        xi += rng.chisquare(m - 1, shape)
    return xi


def sample_mixture(spectrum, method, rng):
    """One draw of the null mixture for ``method``."""
    a = spectrum.active_weights(method)
    xi = _draw_xi(rng, spectrum.m, spectrum.factor, a.shape)
    return float(a @ xi) / spectrum.m


def mixture_draws(spectrum, B, seed=None, methods=METHODS, threads=None):
    """``B`` mixture draws per method, sharing the chi-squared variates.

    Draws come in blocks of 1024; block ``j`` uses the stream
    ``(seed, j)``, so the output is identical for any thread count.
    """
    B = int(B)
    if B < 1:
        raise InvalidInput(f"B must be positive, got {B}")
    ss = _parallel.as_seed_sequence(seed)
    coef = np.column_stack([spectrum.active_weights(mt) for mt in methods]) / spectrum.m
    shape_r = coef.shape[0]

    def run(block):
        j, start, stop = block
        rng = _parallel.generator(ss, j)
        xi = _draw_xi(rng, spectrum.m, spectrum.factor, (stop - start, shape_r))
        return xi @ coef

    parts = _parallel.pmap(run, _parallel.blocks(B, BLOCK), threads)
    draws = np.concatenate(parts, axis=0)
    return {mt: draws[:, i] for i, mt in enumerate(methods)}


def bootstrap_pvalues(t_obs, spectrum, B=2000, seed=None, threads=None):
    """Parametric-bootstrap p-values for a ``{method: t_obs}`` mapping."""
    methods = tuple(t_obs)
    draws = mixture_draws(spectrum, B, seed, methods, threads)
    return {mt: float(np.mean(draws[mt] >= t_obs[mt])) for mt in methods}


def bootstrap_pvalue(t_obs, spectrum, method="pseudo", B=2000, seed=None, threads=None):
    """Fraction of ``B`` mixture draws at least as large as ``t_obs``."""
    if int(B) < 100:
        raise InvalidInput(f"bootstrap needs B >= 100, got {B}")
    return bootstrap_pvalues({method: t_obs}, spectrum, B, seed, threads)[method]


# ---------------------------------------------------------------------------
# cumulants and analytic approximations


@dataclass(frozen=True)
class CumulantSet:
    values: tuple
    method: str
    m0: float


def cumulants(spectrum, method="pseudo", exact=True):
    """First four cumulants of the null mixture.

    With ``exact=True`` the chi2(m-1) and ``f * chi2(1)`` parts contribute
    ``(m - 1) + f**l`` to the ``l``-th cumulant. ``exact=False`` pools them
    as ``m0 = m - 1 + f`` for every order, which agrees with the exact
    value for ``l = 1`` and whenever ``f = 1``.
    """
    a = spectrum.weights(method) / spectrum.m
    m, f = spectrum.m, spectrum.factor
    out = []
    for l in range(1, 5):
        df = (m - 1 + f**l) if exact else (m - 1 + f)
        out.append(2.0 ** (l - 1) * math.factorial(l - 1) * df * float(np.sum(a**l)))
    return CumulantSet(tuple(out), method, m - 1 + f)


def fit_box_chi2(c):
    """Scaled chi-squared ``a * chi2(d)`` matching the first two cumulants."""
    c1, c2 = _values(c)[:2]
    if not (c1 > 0 and c2 > 0):
        raise InvalidCumulants(f"need positive c1, c2, got {c1}, {c2}")
    return c2 / (2.0 * c1), 2.0 * c1 * c1 / c2


def box_pvalue(t_obs, c):
    a, d = fit_box_chi2(c)
    return float(stats.chi2.sf(t_obs / a, d))


@dataclass(frozen=True)
class GeneralizedGammaParams:
    """Shifted generalized gamma ``X + theta`` with density
    ``v x^(v w - 1) exp(-(x/sigma)^v) / (sigma^(v w) Gamma(w))``."""

    v: float
    w: float
    sigma: float
    theta: float = 0.0
    iterations: int = 0
    residual: float = 0.0


_GG_DPS = 40


def _gg_standard(v, w):
    """Mean, variance, third and fourth cumulant of the unit-scale GG."""
    with mpmath.workdps(_GG_DPS):
        v, w = mpmath.mpf(v), mpmath.mpf(w)
        lg = [mpmath.loggamma(w + l / v) - mpmath.loggamma(w) for l in range(5)]
        q = [mpmath.exp(lg[l] - l * lg[1]) for l in range(5)]
        k2 = q[2] - 1
        k3 = q[3] - 3 * q[2] + 2
        k4 = q[4] - 4 * q[3] - 3 * q[2] ** 2 + 12 * q[2] - 6
        return mpmath.exp(lg[1]), k2, k3, k4


def gg_cumulants(g):
    """First four cumulants of ``X_g + theta`` from the raw moment formula."""
    mean, k2, k3, k4 = _gg_standard(g.v, g.w)
    with mpmath.workdps(_GG_DPS):
        s = mpmath.mpf(g.sigma) * mean
        return (
            float(s + g.theta),
            float(s**2 * k2),
            float(s**3 * k3),
            float(s**4 * k4),
        )


def _shape(x):
    v, w = mpmath.exp(x[0]), mpmath.exp(x[1])
    _, k2, k3, k4 = _gg_standard(v, w)
    return k3 / k2**1.5, k4 / k2**2


def fit_generalized_gamma(c, max_iter=200, rtol=1e-6):
    """Solve the four-cumulant system for a shifted generalized gamma.

    Skewness and kurtosis fix ``(v, w)``; these are found by damped Newton
    steps on ``(log v, log w)`` starting from the gamma member ``v = 1``.
    The scale ``sigma`` then matches the variance and ``theta`` the mean.

    Raises
    ------
    GammaFitFailed
        If the iteration stalls or the relative cumulant residual stays
        above ``rtol`` after ``max_iter`` steps.
    """
    c1, c2, c3, c4 = _values(c)
    if not (c2 > 0 and c4 > 0 and c3 > 0):
        raise InvalidCumulants(f"need positive c2, c3, c4, got {c2}, {c3}, {c4}")
    with mpmath.workdps(_GG_DPS):
        skew = mpmath.mpf(c3) / mpmath.mpf(c2) ** 1.5
        kurt = mpmath.mpf(c4) / mpmath.mpf(c2) ** 2
        target = (skew, kurt)

        def resid(x):
            s, k = _shape(x)
            return mpmath.matrix([s / target[0] - 1, k / target[1] - 1])

        x = mpmath.matrix([0, mpmath.log(4 / skew**2)])
        F = resid(x)
        norm = mpmath.norm(F)
        it = 0
        h = mpmath.mpf("1e-12")
        while norm > mpmath.mpf("1e-14") and it < max_iter:
            it += 1
            J = mpmath.matrix(2, 2)
            for j in range(2):
                xh = x.copy()
                xh[j] += h
                col = (resid(xh) - F) / h
                J[0, j], J[1, j] = col[0], col[1]
            try:
                step = -mpmath.lu_solve(J, F)
            except ZeroDivisionError:
                break
            big = max(abs(step[0]), abs(step[1]))
            if big > 2:
                step = step * (2 / big)
            t = mpmath.mpf(1)
            while t > mpmath.mpf("1e-6"):
                cand = x + t * step
                try:
                    Fc = resid(cand)
                except (ValueError, ZeroDivisionError, OverflowError):
                    Fc = None
                if Fc is not None and mpmath.norm(Fc) < norm:
                    break
                t /= 2
            else:
                break
            x, F, norm = cand, Fc, mpmath.norm(Fc)
        v, w = mpmath.exp(x[0]), mpmath.exp(x[1])
        mean, k2, _, _ = _gg_standard(v, w)
        sigma = mpmath.sqrt(mpmath.mpf(c2) / k2) / mean
        theta = mpmath.mpf(c1) - sigma * mean
    g = GeneralizedGammaParams(float(v), float(w), float(sigma), float(theta), it)
    fitted = gg_cumulants(g)
    res = max(abs(a - b) / abs(b) for a, b in zip(fitted[1:], (c2, c3, c4)))
    if not math.isfinite(res) or res > rtol:
        raise GammaFitFailed(
            f"generalized-gamma fit did not converge (residual {res:.3e} after {it} iterations)",
            iterations=it,
            residual=res,
        )
    return GeneralizedGammaParams(g.v, g.w, g.sigma, g.theta, it, res)


def tail_pvalue_gamma(t_obs, g):
    """``P(X_g + theta >= t_obs)`` via the regularized upper incomplete gamma."""
    if t_obs <= g.theta:
        return 1.0
    z = ((t_obs - g.theta) / g.sigma) ** g.v
    return float(special.gammaincc(g.w, z))


def _values(c):
    return tuple(float(x) for x in getattr(c, "values", c))
