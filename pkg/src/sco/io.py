"""File formats: strict numeric CSV, graph/solution JSON, snapshot
streams, trace CSV. All writes are atomic (temp file + rename) and JSON
is serialised canonically so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import DataValidationError, ParameterError
from .graph import VariableGraph


def read_matrix_csv(path: str, with_targets: bool = False):
    """Read a numeric CSV: one row per instance, comma-separated,
    decimal-dot floats only. Non-numeric or non-finite entries fail fast.

    With ``with_targets`` the final column is split off as the target
    vector.

    Returns (values, targets_or_None).
    """
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                cells = line.split(",")
                try:
                    row = [float(c) for c in cells]
                except ValueError:
                    raise DataValidationError(
                        f"{path}:{lineno}: non-numeric cell in {cells!r}") from None
                if not all(np.isfinite(row)):
                    raise DataValidationError(f"{path}:{lineno}: non-finite value")
                rows.append(row)
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataValidationError(f"{path}: empty dataset")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataValidationError(f"{path}: ragged rows with widths {sorted(widths)}")
    matrix = np.array(rows, dtype=float)
    if with_targets:
        if matrix.shape[1] < 2:
            raise DataValidationError(f"{path}: need at least one feature beside the target")
        return matrix[:, :-1], matrix[:, -1]
    return matrix, None


def write_matrix_csv(path: str, values: np.ndarray, targets: np.ndarray | None = None) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    lines = []
    for i in range(values.shape[0]):
        cells = [repr(float(v)) for v in values[i]]
        if targets is not None:
            cells.append(repr(float(targets[i])))
        lines.append(",".join(cells))
    _write_text_atomic(path, "\n".join(lines) + "\n")


def canonical_json(obj) -> str:
    """Deterministic JSON serialisation (sorted keys, fixed separators)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sco-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path: str, obj) -> None:
    _write_text_atomic(path, canonical_json(obj) + "\n")


def write_jsonl_atomic(path: str, records) -> None:
    _write_text_atomic(path, "".join(canonical_json(r) + "\n" for r in records))


def matrix_to_lists(M: np.ndarray):
    return [[float(v) for v in row] for row in np.atleast_2d(np.asarray(M, dtype=float))]


def graph_to_dict(graph: VariableGraph) -> dict:
    return {"n": graph.vertex_count,
            "edges": [[int(i), int(j), float(w)] for i, j, w in graph.edges]}


def graph_from_dict(payload: dict) -> VariableGraph:
    try:
        n = int(payload["n"])
        edges = tuple((int(i), int(j), float(w)) for i, j, w in payload["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataValidationError(f"malformed graph payload: {exc}") from exc
    return VariableGraph(vertex_count=n, edges=edges)


def load_graph_json(path: str) -> VariableGraph:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read graph {path}: {exc}") from exc
    return graph_from_dict(payload)


def load_solution_json(path: str) -> dict:
    """Read a solution document back and validate its schema."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read solution {path}: {exc}") from exc
    required = {"X", "lambda", "dual_objective", "primal_objective", "iters", "converged"}
    missing = required - payload.keys()
    if missing:
        raise DataValidationError(f"{path}: missing solution keys {sorted(missing)}")
    return payload


def iter_snapshot_files(directory: str):
    """CSV files in a directory in lexicographic order."""
    try:
        names = sorted(os.listdir(directory))
    except OSError as exc:
        raise ParameterError(f"cannot list {directory}: {exc}") from exc
    return [os.path.join(directory, name) for name in names if name.endswith(".csv")]


def read_snapshot_jsonl(path: str, with_targets: bool = False):
    """Snapshots from a JSONL file: one {"values": [[...]], "targets": [...]}
    object per line (targets optional)."""
    out = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    payload = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataValidationError(f"{path}:{lineno}: bad JSON: {exc}") from None
                values = np.asarray(payload.get("values"), dtype=float)
                targets = payload.get("targets")
                if targets is not None:
                    targets = np.asarray(targets, dtype=float)
                elif with_targets:
                    raise DataValidationError(f"{path}:{lineno}: snapshot lacks targets")
                out.append((values, targets))
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc}") from exc
    return out


def write_trace_csv(path: str, trace) -> None:
    lines = ["iter,primal_res,dual_res,h_step"]
    for it, p, d, h in trace.rows():
        lines.append(f"{it},{repr(p)},{repr(d)},{repr(h)}")
    _write_text_atomic(path, "\n".join(lines) + "\n")


def write_path_csv(path: str, cluster_path) -> None:
    """Sweep output rows: alpha, vertex, label, then the model coordinates."""
    if cluster_path.solutions:
        d = cluster_path.solutions[0].shape[1]
    else:
        d = 0
    header = "alpha,vertex,label" + "".join(f",x_{k + 1}" for k in range(d))
    lines = [header]
    for alpha, X, labels in zip(cluster_path.alphas, cluster_path.solutions,
                                cluster_path.memberships):
        for v in range(X.shape[0]):
            coords = "".join("," + repr(float(x)) for x in X[v])
            lines.append(f"{repr(float(alpha))},{v},{int(labels[v])}{coords}")
    _write_text_atomic(path, "\n".join(lines) + "\n")
