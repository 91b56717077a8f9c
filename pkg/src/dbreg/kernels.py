"""Similarity matrices for multivariate responses.

Responses enter either as an ``n x k`` matrix (rows are subjects) turned into
a Gram matrix by a kernel, or as a precomputed ``n x n`` similarity or
distance matrix. Everything downstream works with the Gower double-centred
form ``H S H`` where ``H = I - 11'/n``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NotPSD

RAW = "raw-similarity"
CENTERED = "centered"

# Relative eigenvalue floor below which a matrix is not considered PSD.
PSD_RTOL = 1e-8
# Eigenvalues this small relative to the largest are rounding noise.
ZERO_RTOL = 1e-12
# Looser floor used to flag distance matrices that are not Euclidean.
EUCLIDEAN_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """An ``n x n`` symmetric similarity matrix.

    Attributes
    ----------
    values : ndarray
        The matrix itself.
    kind : str
        ``"raw-similarity"`` or ``"centered"`` (already ``H S H``).
    warnings : tuple of str
        Non-fatal diagnostics accumulated while building the matrix,
        e.g. ``"NotEuclidean"``.
    """

    values: np.ndarray
    kind: str = RAW
    warnings: tuple = field(default=())

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def centered(self):
        return self.kind == CENTERED


def as_response(Y):
    """Validate an ``n x k`` response matrix and return it as float array."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise InvalidInput(f"response matrix must be 2-D, got shape {Y.shape}")
    n, k = Y.shape
    if n < 1 or k < 1:
        raise InvalidInput(f"response matrix is empty, got shape {Y.shape}")
    _check_finite(Y, "response matrix")
    return Y


def as_similarity(S, kind=None):
    """Coerce ``S`` to a :class:`SimilarityMatrix`.

    Plain arrays are treated as raw similarities unless ``kind`` says
    otherwise. Centering is idempotent, so treating an already centred
    array as raw only costs an extra pass.
    """
    if isinstance(S, SimilarityMatrix):
        return S
    values = np.asarray(S, dtype=float)
    _check_square(values, "similarity matrix")
    _check_finite(values, "similarity matrix")
    _check_symmetric(values, "similarity matrix")
    return SimilarityMatrix(values, kind or RAW)


def gram_linear(Y):
    """Inner-product Gram matrix ``S = Y Y'``."""
    Y = as_response(Y)
    S = Y @ Y.T
    return SimilarityMatrix(_symmetrize(S), RAW)


def gram_gaussian(Y, bandwidth):
    """Gaussian RBF kernel ``exp(-|y_i - y_j|^2 / (2 h^2))``."""
    if not np.isfinite(bandwidth) or bandwidth <= 0:
        raise InvalidInput(f"bandwidth must be positive, got {bandwidth!r}")
    Y = as_response(Y)
    sq = squared_distances(Y)
    S = np.exp(-sq / (2.0 * bandwidth**2))
    np.fill_diagonal(S, 1.0)
    return SimilarityMatrix(S, RAW)


def squared_distances(Y):
    """Matrix of squared Euclidean distances between the rows of ``Y``."""
    Y = np.asarray(Y, dtype=float)
    norms = np.einsum("ij,ij->i", Y, Y)
    sq = norms[:, None] + norms[None, :] - 2.0 * (Y @ Y.T)
    np.maximum(sq, 0.0, out=sq)
    np.fill_diagonal(sq, 0.0)
    return _symmetrize(sq)


def euclidean_distances(Y):
    return np.sqrt(squared_distances(as_response(Y)))


def double_center(A):
    """Return ``H A H`` for a square array, without forming ``H``."""
    A = np.asarray(A, dtype=float)
    row = A.mean(axis=1, keepdims=True)
    col = A.mean(axis=0, keepdims=True)
    return _symmetrize(A - row - col + A.mean())


def center(S):
    """Gower double-centering ``S -> H S H``."""
    S = as_similarity(S)
    if S.centered:
        return S
    return SimilarityMatrix(double_center(S.values), CENTERED, S.warnings)


def distance_to_similarity(D):
    """Convert a distance matrix to the centred similarity ``-1/2 H (D*D) H``.

    A distance matrix that is not Euclidean-embeddable yields a matrix with
    noticeably negative eigenvalues; this is reported through the
    ``"NotEuclidean"`` warning rather than raised.
    """
    D = np.asarray(D, dtype=float)
    _check_square(D, "distance matrix")
    _check_finite(D, "distance matrix")
    if np.any(D < 0):
        i, j = np.argwhere(D < 0)[0]
        raise InvalidInput(f"distance matrix has a negative entry at ({i}, {j})")
    if np.any(np.diag(D) != 0):
        i = int(np.flatnonzero(np.diag(D) != 0)[0])
        raise InvalidInput(f"distance matrix has a nonzero diagonal entry at ({i}, {i})")
    _check_symmetric(D, "distance matrix")
    G = double_center(-0.5 * D * D)
    warnings = ()
    if G.any():
        ev = np.linalg.eigvalsh(G)
        if ev[0] < -EUCLIDEAN_RTOL * max(ev[-1], 0.0):
            warnings = ("NotEuclidean",)
    return SimilarityMatrix(G, CENTERED, warnings)


def psd_eigh(A, rtol=PSD_RTOL):
    """Eigendecomposition of a symmetric matrix expected to be PSD.

    Eigenvalues in ``[-rtol * lambda_max, 1e-12 * lambda_max]`` are set to
    zero (their square roots would otherwise turn rounding noise into
    visible error); anything more negative raises :class:`NotPSD`.
    Returned in descending order.
    """
    vals, vecs = np.linalg.eigh(np.asarray(A, dtype=float))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    top = max(vals[0], 0.0) if vals.size else 0.0
    if vals.size and vals[-1] < -rtol * top:
        raise NotPSD(
            f"smallest eigenvalue {vals[-1]:.3e} is below -{rtol:g} * {top:.3e}"
        )
    vals = np.where(vals > ZERO_RTOL * top, vals, 0.0)
    return vals, vecs


def _symmetrize(A):
    return 0.5 * (A + A.T)


def _check_square(A, what):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"{what} must be square, got shape {A.shape}")
    if A.shape[0] < 1:
        raise InvalidInput(f"{what} is empty")


def _check_finite(A, what):
    bad = ~np.isfinite(A)
    if bad.any():
        loc = tuple(int(i) for i in np.argwhere(bad)[0])
        raise InvalidInput(f"{what} has a non-finite entry at {loc}")


def _check_symmetric(A, what):
    tol = 1e-10 * np.maximum(1.0, np.abs(A))
    bad = np.abs(A - A.T) > tol
    if bad.any():
        loc = tuple(int(i) for i in np.argwhere(bad)[0])
        raise InvalidInput(f"{what} is not symmetric at {loc}")
