"""Permutation reference p-values and a timing comparison.

Rows of ``X`` are permuted while ``H S H`` stays fixed; under no
association the subjects are exchangeable, so this gives an exact-level
test without any distributional assumption. It serves as the oracle for
the asymptotic p-value routes.
"""

import itertools
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import _parallel
from .errors import InvalidInput
from .kernels import center, gram_gaussian, gram_linear
from .null import bootstrap_pvalue, null_spectrum
from .statistics import METHODS, as_design, matrix_sqrt, orthonormal_basis, trace_statistic

BLOCK = 256
TIE_RTOL = 1e-10


def _targets(S, X, methods):
    X = as_design(X)
    A = center(S).values
    if A.shape[0] != X.n:
        raise InvalidInput(f"similarity matrix has {A.shape[0]} subjects but design has {X.n}")
    mats = {}
    for mt in methods:
        if mt == "pseudo":
            mats[mt] = A
        elif mt == "sqrt":
            mats[mt] = matrix_sqrt(A)
        else:
            raise InvalidInput(f"unknown method {mt!r}; expected one of {METHODS}")
    return X, mats


def _statistics(mats, x, perm):
    Q = orthonormal_basis(x[perm])
    return {mt: trace_statistic(A, Q, mt).value for mt, A in mats.items()}


def permutation_pvalues(S, X, methods=METHODS, B=999, seed=None, permutations=None, threads=None):
    """Permutation p-values ``(1 + #{T_b >= t_obs}) / (B + 1)`` per method.

    Each replicate recomputes the hat matrix of the permuted design and the
    statistic against the fixed centred similarity. Permutations come from
    the streams ``(seed, block)`` in blocks of 256. ``permutations`` may
    instead supply an explicit ``(B, n)`` index array.
    """
    methods = tuple(methods)
    X, mats = _targets(S, X, methods)
    n = X.n
    t_obs = _statistics(mats, X.x, np.arange(n))
    if permutations is None:
        B = int(B)
        if B < 99:
            raise InvalidInput(f"permutation test needs B >= 99, got {B}")
        ss = _parallel.as_seed_sequence(seed)

        def run(block):
            j, start, stop = block
            rng = _parallel.generator(ss, j)
            perms = [rng.permutation(n) for _ in range(stop - start)]
            return _exceed_counts(mats, X.x, perms, t_obs)

        parts = _parallel.pmap(run, _parallel.blocks(B, BLOCK), threads)
    else:
        perms = np.asarray(permutations, dtype=int)
        if perms.ndim != 2 or perms.shape[1] != n:
            raise InvalidInput(f"permutations must have shape (B, {n}), got {perms.shape}")
        B = perms.shape[0]
        parts = [_exceed_counts(mats, X.x, perms, t_obs)]
    counts = {mt: sum(p[mt] for p in parts) for mt in methods}
    return {mt: (1 + counts[mt]) / (B + 1) for mt in methods}


def permutation_pvalue(S, X, method="pseudo", B=999, seed=None, permutations=None, threads=None):
    return permutation_pvalues(S, X, (method,), B, seed, permutations, threads)[method]


def _exceed_counts(mats, x, perms, t_obs):
    counts = dict.fromkeys(mats, 0)
    for perm in perms:
        for mt, t in _statistics(mats, x, perm).items():
            if t >= t_obs[mt] - TIE_RTOL * abs(t_obs[mt]):
                counts[mt] += 1
    return counts


def exact_permutation_pvalues(S, X, methods=METHODS):
    """Exact permutation p-values by enumerating all ``n!`` orderings.

    Only sensible for ``n <= 8``.
    """
    X, mats = _targets(S, X, tuple(methods))
    n = X.n
    if n > 8:
        raise InvalidInput(f"exhaustive enumeration needs n <= 8, got {n}")
    t_obs = _statistics(mats, X.x, np.arange(n))
    perms = itertools.permutations(range(n))
    counts = _exceed_counts(mats, X.x, (np.array(p) for p in perms), t_obs)
    total = math.factorial(n)
    return {mt: counts[mt] / total for mt in mats}


@dataclass(frozen=True)
class BenchResult:
    n: int
    B: int
    t_parametric_s: float
    t_permutation_s: float
    ratio: float

    def as_dict(self):
        return asdict(self)


def timing_benchmark(n=500, B=1000, kernel="linear", seed=0, k=10, m=5, method="pseudo"):
    """Wall-clock time of the parametric bootstrap versus permutation.

    A null dataset is drawn (``X`` with mean one, independent ``Y``). Each
    route is timed from the point where its own inputs are available:
    :func:`~dbreg.null.bootstrap_pvalue` from the null spectrum and the
    observed statistic, :func:`permutation_pvalue` from ``S`` and ``X``.
    """
    if n < 50:
        raise InvalidInput(f"benchmark needs n >= 50, got {n}")
    rng = _parallel.generator(seed, 0)
    X = 1.0 + rng.standard_normal((n, m))
    Y = rng.standard_normal((n, k))
    if kernel == "linear":
        S = gram_linear(Y)
    elif isinstance(kernel, str) and kernel.startswith("gaussian"):
        _, _, bw = kernel.partition(":")
        S = gram_gaussian(Y, float(bw) if bw else np.sqrt(k))
    else:
        raise InvalidInput(f"unknown kernel {kernel!r}")
    S = center(S)
    spectrum = null_spectrum(S, X)
    t_obs = trace_statistic(
        S.values if method == "pseudo" else matrix_sqrt(S.values), orthonormal_basis(X), method
    ).value

    t0 = time.perf_counter()
    bootstrap_pvalue(t_obs, spectrum, method, B, seed, threads=1)
    t_par = time.perf_counter() - t0

    t0 = time.perf_counter()
    permutation_pvalue(S, X, method, B, seed, threads=1)
    t_perm = time.perf_counter() - t0
    return BenchResult(n, B, t_par, t_perm, t_perm / t_par)
