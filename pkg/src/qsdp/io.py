"""JSON/CSV formats: problem files, instance specs, reports, traces, manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .exceptions import InvalidInputError
from .herm import matrix_from_json, matrix_to_json
from .instances import InstanceSpec, build_instance
from .problem import ProblemInstance

TRACE_COLUMNS = ("iter", "dual_value", "grad_norm", "seconds")
SWEEP_COLUMNS = ("epsilon", "dual_value", "slackness_residual", "zero_temp_margin", "status")


def problem_to_json(inst: ProblemInstance) -> dict:
    return {
        "epsilon": inst.epsilon,
        "H": matrix_to_json(inst.H),
        "Q": [matrix_to_json(x) for x in inst.Q],
        "q": [float(v) for v in inst.q],
    }


def problem_from_json(obj) -> ProblemInstance:
    if not isinstance(obj, dict):
        raise InvalidInputError("problem file must contain a JSON object")
    missing = [k for k in ("epsilon", "H", "Q", "q") if k not in obj]
    if missing:
        raise InvalidInputError(f"problem file is missing field(s): {', '.join(missing)}")
    if not isinstance(obj["Q"], list) or not obj["Q"]:
        raise InvalidInputError("field 'Q' must be a nonempty list of matrices")
    H = matrix_from_json(obj["H"])
    Q = []
    for i, m in enumerate(obj["Q"]):
        try:
            Q.append(matrix_from_json(m))
        except InvalidInputError as exc:
            raise InvalidInputError(f"field 'Q[{i}]': {exc}") from None
    return ProblemInstance(H, np.stack(Q), obj["q"], obj["epsilon"])


def read_json(path) -> object:
    """Load JSON, turning syntax errors into :class:`InvalidInputError` with a position."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_problem_or_spec(path) -> tuple[ProblemInstance, InstanceSpec | None]:
    """Accept either a raw problem file or an instance spec ``{family, params, seed}``."""
    obj = read_json(path)
    if isinstance(obj, dict) and "family" in obj:
        spec = InstanceSpec.from_json(obj)
        return build_instance(spec), spec
    return problem_from_json(obj), None


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def csv_text(columns: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def trace_csv(trace) -> str:
    return csv_text(TRACE_COLUMNS, ([r.iter, float(r.dual_value), float(r.grad_norm),
                                     float(r.seconds)] for r in trace))


def report_to_json(report, inst: ProblemInstance | None = None, extra: dict | None = None) -> dict:
    out = {
        "status": report.status.value,
        "message": report.message,
        "regularizer": report.regularizer,
        "epsilon": report.epsilon,
        "config": report.config,
        "iterations": report.n_iters,
        "alpha_star": [float(a) for a in report.alpha_star],
        "dual_value": report.dual_value,
        "final_grad_norm": report.final_grad_norm,
        "primal_value": report.primal_value,
        "duality_gap": report.duality_gap,
        "residuals": None if report.residuals is None else [float(r) for r in report.residuals],
    }
    if report.pi_star is not None:
        out["pi_star"] = matrix_to_json(report.pi_star)
        out["pi_star_min_eigenvalue"] = float(np.linalg.eigvalsh(report.pi_star)[0])
    if extra:
        out.update(extra)
    return out


def manifest(command: list[str], config: dict, inputs: dict, outputs: list) -> dict:
    """Run manifest: command echo, resolved config, input hashes, output paths, versions."""
    import numba
    import scipy

    return {
        "command": list(command),
        "config": config,
        "inputs": {str(k): v for k, v in inputs.items()},
        "outputs": sorted(str(p) for p in outputs),
        "versions": {
            "qsdp": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
            "python": platform.python_version(),
        },
    }
