"""End-to-end association test: statistics plus the requested p-values."""

import time
from dataclasses import dataclass, field

from . import _parallel
from .errors import DegenerateResidual, GammaFitFailed, InvalidCumulants, InvalidInput
from .kernels import center
from .null import (
    bootstrap_pvalues,
    box_pvalue,
    cumulants,
    fit_box_chi2,
    fit_generalized_gamma,
    null_spectrum,
    tail_pvalue_gamma,
)
from .permutation import permutation_pvalues
from .statistics import METHODS, as_design, statistic

ROUTES = ("bootstrap", "gamma", "box", "permutation")


@dataclass
class PValueReport:
    p_bootstrap: float = None
    p_gamma: float = None
    p_box: float = None
    p_permutation: float = None
    B: int = None
    seed: int = None
    fit_diagnostics: dict = field(default_factory=dict)


@dataclass
class AssociationResult:
    statistics: dict
    pvalues: dict
    spectrum: object
    warnings: list
    timings: dict
    seed: int


def association_test(
    S,
    X,
    methods=METHODS,
    routes=("bootstrap",),
    B=2000,
    seed=None,
    factor=None,
    threads=None,
):
    """Compute the requested statistics and p-values for ``S ~ X``.

    Failures of a single route (a generalized-gamma fit that does not
    converge, say) become entries in ``warnings`` and leave that p-value
    as ``None``; only problems that invalidate every statistic raise.
    """
    methods = tuple(methods)
    routes = tuple(routes)
    for r in routes:
        if r not in ROUTES:
            raise InvalidInput(f"unknown p-value route {r!r}; expected a subset of {ROUTES}")
    if any(r in ("bootstrap", "permutation") for r in routes) and int(B) < 100:
        raise InvalidInput(f"B must be >= 100 for resampling routes, got {B}")
    if seed is None:
        seed = _parallel.fresh_seed()
    X = as_design(X)
    S = center(S)
    warnings = list(S.warnings)
    timings = {}

    t0 = time.perf_counter()
    stats = {}
    for mt in methods:
        try:
            stats[mt] = statistic(S, X, mt)
        except DegenerateResidual:
            warnings.append("DegenerateResidual")
    if not stats:
        raise DegenerateResidual("residual trace vanishes for every requested statistic")
    spectrum = null_spectrum(S, X, factor)
    warnings.extend(spectrum.notes)
    timings["statistics_s"] = time.perf_counter() - t0

    reports = {mt: PValueReport(B=int(B), seed=int(seed)) for mt in stats}
    t_obs = {mt: st.value for mt, st in stats.items()}

    if "bootstrap" in routes:
        t0 = time.perf_counter()
        ps = bootstrap_pvalues(t_obs, spectrum, B, _parallel.substream(seed, 0), threads)
        for mt, p in ps.items():
            reports[mt].p_bootstrap = p
        timings["bootstrap_s"] = time.perf_counter() - t0

    if "gamma" in routes or "box" in routes:
        t0 = time.perf_counter()
        for mt in stats:
            c = cumulants(spectrum, mt)
            diag = reports[mt].fit_diagnostics
            diag["cumulants"] = list(c.values)
            if "box" in routes:
                try:
                    a, d = fit_box_chi2(c)
                    reports[mt].p_box = box_pvalue(t_obs[mt], c)
                    diag["box"] = {"scale": a, "df": d}
                except InvalidCumulants:
                    warnings.append("InvalidCumulants")
            if "gamma" in routes:
                try:
                    g = fit_generalized_gamma(c)
                except GammaFitFailed as exc:
                    warnings.append("GammaFitFailed")
                    diag["gamma"] = {
                        "converged": False,
                        "iterations": exc.iterations,
                        "residual": exc.residual,
                    }
                except InvalidCumulants:
                    warnings.append("InvalidCumulants")
                else:
                    reports[mt].p_gamma = tail_pvalue_gamma(t_obs[mt], g)
                    diag["gamma"] = {
                        "converged": True,
                        "v": g.v,
                        "w": g.w,
                        "sigma": g.sigma,
                        "theta": g.theta,
                        "iterations": g.iterations,
                        "residual": g.residual,
                    }
        timings["moment_matching_s"] = time.perf_counter() - t0

    if "permutation" in routes:
        t0 = time.perf_counter()
        ps = permutation_pvalues(S, X, tuple(stats), B, _parallel.substream(seed, 1), threads=threads)
        for mt, p in ps.items():
            reports[mt].p_permutation = p
        timings["permutation_s"] = time.perf_counter() - t0

    return AssociationResult(stats, reports, spectrum, _dedupe(warnings), timings, int(seed))


def _dedupe(items):
    return list(dict.fromkeys(items))
