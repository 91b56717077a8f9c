"""Hat matrix, symmetric square root and the two F-type statistics.

Both statistics split the total trace of a centred similarity matrix ``A``
into the part captured by the column space of the design ``X`` and the
residual part::

    T = [tr(H_X A) / m] / [tr((I - H_X) A) / (n - m)]

The pseudo-F statistic uses ``A = H S H``; the square-root statistic uses
``A = (H S H)^{1/2}``, which flattens the eigenvalue spread of ``H S H``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResidual, InvalidInput, SingularCovariance, SingularDesign
from .kernels import center, psd_eigh

METHODS = ("pseudo", "sqrt")
MAX_CONDITION = 1e12
RESIDUAL_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Predictor observations, one row per subject.

    ``mean`` and ``cov`` are the sample mean and the unbiased sample
    covariance of the columns of ``x``.
    """

    x: np.ndarray
    mean: np.ndarray
    cov: np.ndarray

    @classmethod
    def from_array(cls, x, add_intercept=False):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise InvalidInput(f"design matrix must be 2-D, got shape {x.shape}")
        bad = ~np.isfinite(x)
        if bad.any():
            loc = tuple(int(i) for i in np.argwhere(bad)[0])
            raise InvalidInput(f"design matrix has a non-finite entry at {loc}")
        if add_intercept:
            x = np.column_stack([np.ones(x.shape[0]), x])
        n, m = x.shape
        if not n > m >= 1:
            raise InvalidInput(f"need n > m >= 1, got n={n}, m={m}")
        cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
        return cls(x, x.mean(axis=0), cov)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.x.shape[1]


def as_design(X):
    if isinstance(X, DesignMatrix):
        return X
    return DesignMatrix.from_array(X)


@dataclass(frozen=True)
class TestStatistic:
    """Value of one F-type statistic together with its two halves.

    ``numerator`` is ``tr(H_X A)/m`` and ``denominator`` is
    ``tr((I - H_X) A)/(n - m)``.
    """

    __test__ = False  # keep pytest from collecting this class

    value: float
    method: str
    numerator: float
    denominator: float


def orthonormal_basis(X):
    """Orthonormal basis ``Q`` of the column space of ``X`` (``H_X = Q Q'``).

    Raises :class:`SingularDesign` if ``X'X`` has condition number above
    ``1e12``.
    """
    x = X.x if isinstance(X, DesignMatrix) else np.asarray(X, dtype=float)
    Q, R = np.linalg.qr(x, mode="reduced")
    d = np.abs(np.diag(R))
    if d.min() == 0.0:
        raise SingularDesign("design matrix is rank deficient")
    sv = np.linalg.svd(R, compute_uv=False)
    cond = (sv[0] / sv[-1]) ** 2
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularDesign(f"X'X is ill-conditioned (condition number {cond:.3e})")
    return Q


def hat_matrix(X):
    """Orthogonal projection ``X (X'X)^{-1} X'`` onto the columns of ``X``."""
    Q = orthonormal_basis(X)
    return Q @ Q.T


def matrix_sqrt(A):
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues within ``1e-8 * lambda_max`` below zero are clipped; more
    negative ones raise :class:`~dbreg.errors.NotPSD`.
    """
    A = getattr(A, "values", A)
    vals, vecs = psd_eigh(A)
    B = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (B + B.T)


def noncentrality_factor(X):
    """Plug-in estimate of ``1 / (1 + mu' Delta^{-1} mu)`` from sample moments.

    A constant nonzero column (an intercept) makes ``Delta`` singular in a
    direction where ``mu`` is nonzero; the factor then takes its limiting
    value 0.
    """
    X = as_design(X)
    mu, cov = X.mean, X.cov
    scale = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    const = scale <= 1e-12 * np.maximum(1.0, np.abs(mu))
    if const.any():
        if np.count_nonzero(const) > 1:
            raise SingularCovariance("more than one constant column in the design")
        keep = ~const
        if keep.any():
            _check_cov(cov[np.ix_(keep, keep)])
        return 0.0
    _check_cov(cov)
    q = float(mu @ np.linalg.solve(cov, mu))
    return 1.0 / (1.0 + max(q, 0.0))


def _check_cov(cov):
    sv = np.linalg.svd(cov, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > MAX_CONDITION:
        raise SingularCovariance("sample covariance of the design is singular")


def _ratio(captured, total, n, m, method):
    if not total > 0 or total - captured <= RESIDUAL_RTOL * total:
        raise DegenerateResidual(
            f"residual trace for the {method} statistic vanishes "
            f"(captured {captured:.3e} of {total:.3e})"
        )
    captured = max(captured, 0.0)
    num = captured / m
    den = (total - captured) / (n - m)
    return TestStatistic(num / den, method, num, den)


def trace_statistic(A, Q, method):
    """F-type ratio for a centred PSD matrix ``A`` and basis ``Q``."""
    n, m = Q.shape
    captured = float(np.sum(Q * (A @ Q)))
    return _ratio(captured, float(np.trace(A)), n, m, method)


def pseudo_f(S, X):
    """Pseudo-F statistic on the double-centred similarity ``H S H``."""
    X = as_design(X)
    A = center(S).values
    _check_n(A, X)
    return trace_statistic(A, orthonormal_basis(X), "pseudo")


def sqrt_f(S, X):
    """Square-root F statistic on ``(H S H)^{1/2}``."""
    X = as_design(X)
    A = center(S).values
    _check_n(A, X)
    return trace_statistic(matrix_sqrt(A), orthonormal_basis(X), "sqrt")


def statistic(S, X, method):
    if method == "pseudo":
        return pseudo_f(S, X)
    if method == "sqrt":
        return sqrt_f(S, X)
    raise InvalidInput(f"unknown method {method!r}; expected one of {METHODS}")


def spectral_statistics(values, vectors, Q, methods=METHODS):
    """Both statistics from an eigendecomposition of ``H S H``.

    ``values`` (length r) and ``vectors`` (n x r) need only cover the
    nonzero part of the spectrum, which makes this the cheap route for
    low-rank kernels such as the linear one.
    """
    n, m = Q.shape
    proj = np.sum((Q.T @ vectors) ** 2, axis=0)
    out = {}
    for method in methods:
        weights = values if method == "pseudo" else np.sqrt(values)
        out[method] = _ratio(float(weights @ proj), float(weights.sum()), n, m, method)
    return out


def linear_spectrum(Y):
    """Nonzero eigenpairs of ``H Y Y' H`` from a thin SVD of the centred ``Y``."""
    Y = np.asarray(Y, dtype=float)
    F = Y - Y.mean(axis=0)
    U, s, _ = np.linalg.svd(F, full_matrices=False)
    keep = s > 1e-12 * max(s[0], np.finfo(float).tiny) if s.size else s > 0
    return s[keep] ** 2, U[:, keep]


def _check_n(A, X):
    if A.shape[0] != X.n:
        raise InvalidInput(
            f"similarity matrix has {A.shape[0]} subjects but design has {X.n}"
        )
