"""Delimited-text ingestion and the versioned result document."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .kernels import SimilarityMatrix, as_response, as_similarity, distance_to_similarity
from .statistics import DesignMatrix

SCHEMA = "dbreg/1"
INPUT_KINDS = ("responses", "similarity", "distance")


def _delimiter(line):
    return "\t" if "\t" in line else ","


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_table(path):
    """Read a comma- or tab-delimited numeric table into a float array.

    A first row containing any non-numeric cell is taken as a header.
    Errors name the file and the 1-based row and column of the bad cell.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror or exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInput(f"{path}: file is empty")
    rows = list(csv.reader(lines, delimiter=_delimiter(lines[0])))
    first = 0
    if not all(_is_number(c.strip()) for c in rows[0]):
        first = 1
    width = len(rows[first]) if len(rows) > first else 0
    data = []
    for r, row in enumerate(rows[first:], start=first + 1):
        if len(row) != width:
            raise InvalidInput(f"{path}: row {r} has {len(row)} columns, expected {width}")
        vals = []
        for c, cell in enumerate(row, start=1):
            try:
                x = float(cell.strip())
            except ValueError:
                raise InvalidInput(f"{path}: non-numeric cell {cell!r} at row {r}, column {c}") from None
            if not math.isfinite(x):
                raise InvalidInput(f"{path}: non-finite value {cell!r} at row {r}, column {c}")
            vals.append(x)
        data.append(vals)
    if not data:
        raise InvalidInput(f"{path}: no data rows")
    return np.array(data, dtype=float)


def ingest(x_path, y_path=None, similarity_path=None, distance_path=None, add_intercept=False):
    """Load a response source and the design matrix.

    Exactly one of ``y_path``, ``similarity_path`` and ``distance_path``
    must be given. Returns ``(source, design, kind)`` where ``source`` is
    an ``n x k`` array for responses or a :class:`SimilarityMatrix`.
    """
    given = [(k, p) for k, p in zip(INPUT_KINDS, (y_path, similarity_path, distance_path)) if p]
    if len(given) != 1:
        raise InvalidInput("exactly one of responses, similarity or distance input is required")
    kind, path = given[0]
    table = read_table(path)
    if kind == "responses":
        source = as_response(table)
    elif kind == "similarity":
        source = as_similarity(table)
    else:
        source = distance_to_similarity(table)
    X = read_table(x_path)
    n = source.shape[0] if kind == "responses" else source.n
    if X.shape[0] != n:
        raise InvalidInput(
            f"dimension mismatch: {path} has {n} subjects but {x_path} has {X.shape[0]} rows"
        )
    return source, DesignMatrix.from_array(X, add_intercept=add_intercept), kind


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def spectrum_summary(spectrum):
    return {
        "n": int(spectrum.eigenvalues.size),
        "m": spectrum.m,
        "factor": spectrum.factor,
        "rank": int(spectrum.active.sum()),
        "top_eigenvalues": [float(x) for x in spectrum.eigenvalues[:10]],
        "entropy_w": _entropy(spectrum.w),
        "entropy_eta": _entropy(spectrum.eta),
    }


@dataclass
class ResultDocument:
    """Serializable outcome of one ``dbreg test`` run."""

    config: dict
    statistics: dict
    pvalues: dict
    spectrum: dict
    warnings: list
    seed: int
    timings: dict = field(default_factory=dict)
    schema: str = SCHEMA

    @classmethod
    def from_result(cls, result, config, alpha=0.05, timings=False):
        stats = {
            mt: {"value": st.value, "numerator": st.numerator, "denominator": st.denominator}
            for mt, st in result.statistics.items()
        }
        pvals = {}
        for mt, rep in result.pvalues.items():
            d = asdict(rep)
            d["reject"] = {
                route: d[f"p_{route}"] <= alpha
                for route in ("bootstrap", "gamma", "box", "permutation")
                if d[f"p_{route}"] is not None
            }
            pvals[mt] = d
        return cls(
            config=dict(config),
            statistics=stats,
            pvalues=_jsonable(pvals),
            spectrum=spectrum_summary(result.spectrum),
            warnings=list(result.warnings),
            seed=result.seed,
            timings=dict(result.timings) if timings else {},
        )

    def to_dict(self):
        return _jsonable(asdict(self))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise InvalidInput(f"unsupported schema {d.get('schema')!r}; expected {SCHEMA!r}")
        return cls(**d)

    def to_tsv(self):
        cols = ["method", "statistic", "numerator", "denominator",
                "p_bootstrap", "p_gamma", "p_box", "p_permutation"]
        lines = ["\t".join(cols)]
        for mt, st in self.statistics.items():
            rep = self.pvalues[mt]
            row = [mt, st["value"], st["numerator"], st["denominator"]]
            row += [rep[c] for c in cols[4:]]
            lines.append("\t".join("NA" if v is None else (f"{v:.10g}" if isinstance(v, float) else str(v)) for v in row))
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
