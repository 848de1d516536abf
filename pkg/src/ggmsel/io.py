"""File formats: delimited matrices/edges, JSON reports, JSONL streams.

Every writer goes through an atomic temp-file-then-rename so that readers
never observe half-written output.  Node indices in edge lists and cluster
maps are 0-based.  NaN/inf are mapped to null when serializing JSON (risk
curves use null for undefined grid points).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from contextlib import contextmanager

import numpy as np


@contextmanager
def atomic_open(path: str, mode: str = "w"):
    """Open a temp file next to `path`, renaming over it only on success."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def jsonsafe(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(key): jsonsafe(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonsafe(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return [jsonsafe(val) for val in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    return obj


def write_json(path: str, obj):
    with atomic_open(path) as handle:
        json.dump(jsonsafe(obj), handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_json(path: str):
    with open(path) as handle:
        return json.load(handle)


def write_jsonl(path: str, records):
    with atomic_open(path) as handle:
        for record in records:
            handle.write(json.dumps(jsonsafe(record), sort_keys=True) + "\n")


def read_jsonl(path: str) -> list:
    with open(path) as handle:
        return [json.loads(line) for line in handle if line.strip()]


def read_data(path: str) -> np.ndarray:
    """Numeric data matrix from CSV or TSV, skipping a header row if present."""
    with open(path) as handle:
        first = handle.readline()
    sep = "\t" if "\t" in first else ","
    skip = 0
    for token in first.strip().split(sep):
        try:
            float(token)
        except ValueError:
            skip = 1
            break
    data = np.loadtxt(path, delimiter=sep, skiprows=skip, ndmin=2)
    return data


def write_data_csv(path: str, x: np.ndarray):
    with atomic_open(path) as handle:
        np.savetxt(handle, np.asarray(x, dtype=float), delimiter=",", fmt="%.17g")


def write_edges_tsv(path: str, matrix: np.ndarray):
    """Upper-triangle nonzeros as `i<TAB>j<TAB>value` lines (i < j, 0-based).

    Boolean adjacencies write value 1; weighted matrices (e.g. precision
    estimates) write the entry itself.
    """
    m = np.asarray(matrix)
    ii, jj = np.triu_indices(m.shape[0], k=1)
    vals = m[ii, jj]
    keep = vals != 0
    with atomic_open(path) as handle:
        for i, j, val in zip(ii[keep], jj[keep], vals[keep]):
            if m.dtype == bool:
                handle.write(f"{i}\t{j}\t1\n")
            else:
                handle.write(f"{i}\t{j}\t{float(val):.17g}\n")


def read_edges_tsv(path: str, p: int, weighted: bool = False) -> np.ndarray:
    """Rebuild a symmetric matrix from an edge list written by write_edges_tsv."""
    out = np.zeros((p, p), dtype=float if weighted else bool)
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            i, j, val = line.split("\t")
            i, j = int(i), int(j)
            entry = float(val) if weighted else True
            out[i, j] = entry
            out[j, i] = entry
    return out


def write_matrix_tsv(path: str, matrix: np.ndarray):
    """Dense matrix, one tab-separated row per line."""
    with atomic_open(path) as handle:
        np.savetxt(handle, np.asarray(matrix, dtype=float), delimiter="\t",
                   fmt="%.17g")


def read_matrix_tsv(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter="\t", ndmin=2)


def write_clusters_tsv(path: str, assignment: np.ndarray):
    """`node<TAB>cluster` lines, one per node."""
    with atomic_open(path) as handle:
        for node, cluster in enumerate(np.asarray(assignment, dtype=int)):
            handle.write(f"{node}\t{cluster}\n")


def write_merges_tsv(path: str, dendrogram):
    """`step<TAB>a<TAB>b<TAB>height` merge list of a dendrogram."""
    with atomic_open(path) as handle:
        for step, (a, b, height) in enumerate(dendrogram.merges):
            handle.write(f"{step}\t{a}\t{b}\t{height:.17g}\n")


def curve_record(curve) -> dict:
    """RiskCurve as the per-method block of the selection report JSON."""
    return {
        "method": curve.method,
        "grid": curve.grid,
        "risk_values": curve.values,
        "selected_lambda": curve.selected_lambda,
        "selected_index": curve.selected_index,
        "direction": curve.direction,
        "flags": list(curve.flags),
        "config": curve.config,
    }


def report_record(report, estimator: str, p: int, n: int) -> dict:
    """SelectionReport as one JSON document."""
    return {
        "estimator": estimator,
        "p": int(p),
        "n": int(n),
        "grid": report.path.grid,
        "path_errors": {str(k): v for k, v in report.path.errors.items()},
        "methods": {name: curve_record(curve)
                    for name, curve in report.curves.items()},
        "errors": dict(report.errors),
    }
