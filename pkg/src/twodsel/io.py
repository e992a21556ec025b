"""On-disk formats: dataset manifests, long-format CSV data, result tables and JSON reports.

All indices on disk are 0-based. Numbers are written with 12 significant
digits (``%.12g``), which is also the precision at which files round-trip.

Files
-----
predictors   ``sample,row,col,value``           one line per entry, all ``n*s*t`` present
responses    ``sample,y`` or ``sample,y,trials`` (binomial)
profiles     ``sample,row,col,position,value``  any number of positions per cell
manifest     JSON with ``format_version``, ``dims``, ``family``, the two file
             names (relative to the manifest) and optional row/column labels
results      ``scenario,method,n,nsr,tp,tn,fp,fn,accuracy_mean,accuracy_sd``
             (``tp``..``fn`` are percentages averaged over replications)
rates        ``dimension,index,label,rate,important``
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np

from .exceptions import DimensionError, ParseError, ValidationError
from .glm import BINOMIAL, FAMILIES, NORMAL, DataSet, ResponseFamily

FORMAT_VERSION = 1
PREDICTOR_HEADER = ("sample", "row", "col", "value")
RESPONSE_HEADER = ("sample", "y")
BINOMIAL_RESPONSE_HEADER = ("sample", "y", "trials")
PROFILE_HEADER = ("sample", "row", "col", "position", "value")
RESULTS_HEADER = ("scenario", "method", "n", "nsr", "tp", "tn", "fp", "fn",
                  "accuracy_mean", "accuracy_sd")
RATES_HEADER = ("dimension", "index", "label", "rate", "important")
IMPORTANT_RATE = 50.0


def fmt(x):
    """Number formatting used by every writer."""
    return f"{float(x):.12g}"


@dataclass
class DataManifest:
    dims: tuple
    family: dict = field(default_factory=lambda: {"kind": "bernoulli"})
    predictor_file: str = "predictors.csv"
    response_file: str = "responses.csv"
    row_labels: list | None = None
    col_labels: list | None = None
    format_version: int = FORMAT_VERSION
    base_dir: str = "."  # directory the file names are relative to; not serialized

    def __post_init__(self):
        if self.format_version != FORMAT_VERSION:
            raise ValidationError(f"unsupported manifest format_version {self.format_version}")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValidationError(f"dims must be three positive integers (n, s, t), got {self.dims}")
        self.dims = dims
        kind = self.family.get("kind")
        if kind not in FAMILIES:
            raise ValidationError(f"unknown family {kind!r}; expected one of {FAMILIES}")
        for labels, size, name in ((self.row_labels, dims[1], "row"), (self.col_labels, dims[2], "col")):
            if labels is not None and len(labels) != size:
                raise DimensionError(f"{len(labels)} {name} labels for dimension {size}")

    def path(self, name):
        return Path(self.base_dir) / name

    def to_dict(self):
        d = asdict(self)
        d.pop("base_dir")
        d["dims"] = list(self.dims)
        return d


def load_manifest(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: manifest must be a JSON object")
    known = {"dims", "family", "predictor_file", "response_file", "row_labels", "col_labels",
             "format_version"}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown manifest keys {sorted(unknown)}")
    if "dims" not in raw:
        raise ValidationError("manifest needs dims")
    return DataManifest(base_dir=str(path.parent), **raw)


def save_manifest(manifest, path):
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


def _rows(path, header):
    """Yield ``(line_number, fields)`` after checking the header exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file", 1) from None
        if tuple(h.strip() for h in first) != tuple(header):
            raise ParseError(f"{path}: expected header {','.join(header)}, got {','.join(first)}", 1)
        for fields in reader:
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(fields)}", reader.line_num)
            yield reader.line_num, fields


def _index(text, bound, name, line):
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"{name} {text!r} is not an integer", line) from None
    if not 0 <= value < bound:
        raise ParseError(f"{name} {value} out of range [0, {bound})", line)
    return value


def _number(text, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"value {text!r} is not numeric", line) from None
    if not math.isfinite(value):
        raise ParseError(f"value {text!r} is not finite", line)
    return value


def read_predictors(path, dims):
    n, s, t = dims
    X = np.empty((n, s, t))
    seen = np.zeros((n, s, t), dtype=bool)
    for line, (i, j, k, v) in _rows(path, PREDICTOR_HEADER):
        cell = (_index(i, n, "sample", line), _index(j, s, "row", line), _index(k, t, "col", line))
        if seen[cell]:
            raise ParseError(f"duplicate cell (sample,row,col)={cell}", line)
        seen[cell] = True
        X[cell] = _number(v, line)
    if not seen.all():
        missing = tuple(int(a) for a in np.argwhere(~seen)[0])
        raise ParseError(f"{path}: missing cell (sample,row,col)={missing} "
                         f"({int((~seen).sum())} missing in total)")
    return X


def read_responses(path, n, binomial=False):
    """Returns ``(y, trials)``; ``trials`` is ``None`` unless ``binomial``."""
    header = BINOMIAL_RESPONSE_HEADER if binomial else RESPONSE_HEADER
    y = np.empty(n)
    trials = np.empty(n) if binomial else None
    seen = np.zeros(n, dtype=bool)
    for line, fields in _rows(path, header):
        i = _index(fields[0], n, "sample", line)
        if seen[i]:
            raise ParseError(f"duplicate sample {i}", line)
        seen[i] = True
        y[i] = _number(fields[1], line)
        if binomial:
            trials[i] = _number(fields[2], line)
    if not seen.all():
        raise ParseError(f"{path}: missing response for sample {int(np.flatnonzero(~seen)[0])}")
    return y, trials


def _family(spec, trials):
    kind = spec["kind"]
    if kind == BINOMIAL:
        return ResponseFamily.binomial(trials)
    if kind == NORMAL:
        return ResponseFamily.normal(spec.get("sigma", 1.0))
    return ResponseFamily.bernoulli(fractional=bool(spec.get("fractional", False)))


def _dataset(X, manifest):
    n = manifest.dims[0]
    binomial = manifest.family["kind"] == BINOMIAL
    y, trials = read_responses(manifest.path(manifest.response_file), n, binomial)
    return DataSet(X, y, _family(manifest.family, trials))


def ingest(manifest):
    """Load the data set a manifest (object or path) points to."""
    if not isinstance(manifest, DataManifest):
        manifest = load_manifest(manifest)
    X = read_predictors(manifest.path(manifest.predictor_file), manifest.dims)
    return _dataset(X, manifest)


def ingest_profiles(profile_file, manifest):
    """Like :func:`ingest`, but every cell is the mean of its profile values."""
    if not isinstance(manifest, DataManifest):
        manifest = load_manifest(manifest)
    n, s, t = manifest.dims
    values = {}
    for line, (i, j, k, _pos, v) in _rows(profile_file, PROFILE_HEADER):
        cell = (_index(i, n, "sample", line), _index(j, s, "row", line), _index(k, t, "col", line))
        values.setdefault(cell, []).append(_number(v, line))
    X = np.empty((n, s, t))
    for cell in np.ndindex(n, s, t):
        profile = values.get(cell)
        if not profile:
            raise ParseError(f"{profile_file}: empty profile for cell (sample,row,col)={cell}")
        X[cell] = math.fsum(profile) / len(profile)
    return _dataset(X, manifest)


def export(data, directory, labels=None, manifest_name="manifest.json"):
    """Write ``data`` as predictor/response CSVs plus a manifest; returns the manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n, s, t = data.X.shape
    fam = data.family
    family = {"kind": fam.kind}
    if fam.kind == NORMAL:
        family["sigma"] = fam.sigma
    if fam.fractional:
        family["fractional"] = True
    rows, cols = labels if labels is not None else (None, None)
    manifest = DataManifest((n, s, t), family, row_labels=rows, col_labels=cols,
                            base_dir=str(directory))
    with open(manifest.path(manifest.predictor_file), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTOR_HEADER)
        for (i, j, k), v in np.ndenumerate(data.X):
            w.writerow((i, j, k, fmt(v)))
    with open(manifest.path(manifest.response_file), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fam.kind == BINOMIAL:
            w.writerow(BINOMIAL_RESPONSE_HEADER)
            for i in range(n):
                w.writerow((i, fmt(data.y[i]), fmt(fam.trials[i])))
        else:
            w.writerow(RESPONSE_HEADER)
            for i in range(n):
                w.writerow((i, fmt(data.y[i])))
    save_manifest(manifest, directory / manifest_name)
    return manifest


# result tables

def results_rows(summaries, spec):
    """One results-table row per method of a :func:`twodsel.simulation.run_study` call."""
    return [{
        "scenario": spec.label, "method": method, "n": spec.n, "nsr": spec.nsr,
        "tp": m.tp_pct, "tn": m.tn_pct, "fp": m.fp_pct, "fn": m.fn_pct,
        "accuracy_mean": m.accuracy_mean, "accuracy_sd": m.accuracy_sd,
    } for method, m in summaries.items()]


def write_results_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in rows:
            w.writerow([r["scenario"], r["method"], int(r["n"])]
                       + [fmt(r[k]) for k in RESULTS_HEADER[3:]])


def read_results_csv(path):
    out = []
    for line, fields in _rows(path, RESULTS_HEADER):
        row = {"scenario": fields[0], "method": fields[1]}
        try:
            row["n"] = int(fields[2])
        except ValueError:
            raise ParseError(f"n {fields[2]!r} is not an integer", line) from None
        for key, text in zip(RESULTS_HEADER[3:], fields[3:]):
            try:
                row[key] = float(text)  # nan is allowed: a scenario with no successful replication
            except ValueError:
                raise ParseError(f"{key} {text!r} is not numeric", line) from None
        out.append(row)
    return out


def format_results_table(rows):
    """Plain-text table: one block per scenario, one line per method."""
    lines = []
    head = f"{'method':<12}{'TP %':>8}{'TN %':>8}{'FP %':>8}{'FN %':>8}{'accuracy':>10}{'SD':>8}"
    for scenario in dict.fromkeys(r["scenario"] for r in rows):
        lines += [scenario, head]
        for r in rows:
            if r["scenario"] == scenario:
                lines.append(f"{r['method']:<12}{r['tp']:8.1f}{r['tn']:8.1f}{r['fp']:8.1f}"
                             f"{r['fn']:8.1f}{r['accuracy_mean']:10.2f}{r['accuracy_sd']:8.2f}")
        lines.append("")
    return "\n".join(lines)


def rates_rows(row_rates, col_rates, row_labels=None, col_labels=None):
    out = []
    for dim, rates, labels in (("row", row_rates, row_labels), ("col", col_rates, col_labels)):
        for j, rate in enumerate(rates):
            out.append({"dimension": dim, "index": j,
                        "label": labels[j] if labels is not None else f"{dim}{j}",
                        "rate": float(rate), "important": bool(rate >= IMPORTANT_RATE)})
    return out


def write_rates_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATES_HEADER)
        for r in rows:
            w.writerow((r["dimension"], r["index"], r["label"], fmt(r["rate"]), int(r["important"])))


def read_rates_csv(path):
    out = []
    for line, (dim, idx, label, rate, important) in _rows(path, RATES_HEADER):
        if dim not in ("row", "col"):
            raise ParseError(f"dimension must be row or col, got {dim!r}", line)
        out.append({"dimension": dim, "index": _index(idx, 2**31, "index", line), "label": label,
                    "rate": _number(rate, line), "important": important.strip() == "1"})
    return out


def format_rates_table(rows):
    lines = [f"{'':<6}{'label':<16}{'rate %':>8}  important"]
    for r in rows:
        lines.append(f"{r['dimension']:<6}{r['label']:<16}{r['rate']:8.1f}  {'yes' if r['important'] else ''}")
    return "\n".join(lines)


# JSON reports

def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(obj.to_dict() if hasattr(obj, "to_dict") else asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, os.PathLike):
        return os.fspath(obj)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
