"""JSON model-config documents: parsing into a PumpModel and dumping back.

Document layout::

    {
      "parameters": {"omega": 1.0},
      "subsystems": [
        {"dim": 2, "beta": 1.0, "hamiltonian": [{"coefficient": "omega", "pauli": "Z"}]},
        {"dim": 2, "beta": 2.0, "hamiltonian": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]}
      ],
      "interaction": [
        {"terms": [{"coefficient": 1.0, "factors": [[0, "X"], [1, "X"]]}], "duration": 1.0}
      ],
      "tau": 1.0,
      "options": {"conservation": "error", "merge_tol": 1e-12, "drop_tol": 1e-15}
    }

A Hamiltonian is either a list of Pauli terms or an explicit matrix given as
rows of ``[re, im]`` pairs. Term coefficients are numbers, parameter names
(``"omega"``) or scaled names (``"-0.5*omega"``).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, DimensionError
from .model import PauliTerm, PumpModel, build_pauli_operator
from .ttm import DROP_TOL, MERGE_TOL

_COEFF = re.compile(r"^\s*(?:([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*\s*)?([-+]?)\s*([A-Za-z_]\w*)\s*$")
BUNDLED = ("xy3.json", "exchange2.json", "nonconserving2.json")


@dataclass
class Options:
    conservation: str = "error"
    merge_tol: float = MERGE_TOL
    drop_tol: float = DROP_TOL


@dataclass
class LoadedConfig:
    model: PumpModel
    options: Options
    parameters: dict[str, float]
    used_parameters: set[str] = field(default_factory=set)
    document: dict = field(default_factory=dict)


class _Parser:
    def __init__(self, parameters: dict[str, float]):
        self.parameters = parameters
        self.used: set[str] = set()

    def number(self, value, where: str, allow_params: bool = False) -> float:
        if isinstance(value, bool):
            raise ConfigError(where, "expected a number, got a boolean")
        if isinstance(value, (int, float)):
            if not math.isfinite(value):
                raise ConfigError(where, "non-finite number")
            return float(value)
        if allow_params and isinstance(value, str):
            m = _COEFF.match(value)
            if not m:
                raise ConfigError(where, f"cannot parse coefficient {value!r}")
            factor, sign, name = m.groups()
            if name not in self.parameters:
                raise ConfigError(where, f"unknown parameter {name!r}")
            self.used.add(name)
            scale = float(factor) if factor else 1.0
            return (-scale if sign == "-" else scale) * float(self.parameters[name])
        raise ConfigError(where, f"expected a number, got {type(value).__name__}")

    def matrix(self, rows, where: str) -> np.ndarray:
        if not isinstance(rows, list) or not rows:
            raise ConfigError(where, "matrix must be a non-empty list of rows")
        d = len(rows)
        out = np.zeros((d, d), dtype=np.complex128)
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != d:
                raise ConfigError(f"{where}[{i}]", f"row must have {d} entries")
            for k, entry in enumerate(row):
                loc = f"{where}[{i}][{k}]"
                if not isinstance(entry, list) or len(entry) != 2:
                    raise ConfigError(loc, "complex entry must be a [re, im] pair")
                out[i, k] = complex(self.number(entry[0], loc), self.number(entry[1], loc))
        return out

    def terms(self, items, where: str, local: bool) -> list[PauliTerm]:
        if not isinstance(items, list):
            raise ConfigError(where, "terms must be a list")
        out = []
        for t, item in enumerate(items):
            loc = f"{where}[{t}]"
            if not isinstance(item, dict) or "coefficient" not in item:
                raise ConfigError(loc, "term must be an object with a 'coefficient'")
            coeff = self.number(item["coefficient"], f"{loc}.coefficient", allow_params=True)
            if local:
                label = item.get("pauli", "I")
                factors = [(0, label)]
            else:
                raw = item.get("factors", [])
                if not isinstance(raw, list) or any(not isinstance(f, list) or len(f) != 2 for f in raw):
                    raise ConfigError(f"{loc}.factors", "factors must be [[subsystem, label], ...]")
                factors = [(f[0], f[1]) for f in raw]
            try:
                out.append(PauliTerm(coeff, tuple(factors)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(loc, str(exc)) from None
        return out

    def operator(self, node, where: str, dims: list[int], local: bool) -> np.ndarray:
        if isinstance(node, dict):
            if "matrix" in node:
                return self.matrix(node["matrix"], f"{where}.matrix")
            if "terms" in node:
                node = node["terms"]
                where = f"{where}.terms"
            else:
                raise ConfigError(where, "expected 'terms' or 'matrix'")
        if isinstance(node, list) and node and all(isinstance(x, list) for x in node):
            return self.matrix(node, where)
        terms = self.terms(node, where, local)
        try:
            return build_pauli_operator(terms, dims)
        except DimensionError as exc:
            raise ConfigError(where, str(exc)) from None


def parse_config(doc: Any, parameters: dict[str, float] | None = None,
                 conservation: str | None = None) -> LoadedConfig:
    """Parse a config document. ``parameters`` overrides values declared in
    the document; ``conservation`` overrides ``options.conservation``."""
    if not isinstance(doc, dict):
        raise ConfigError("$", "document must be a JSON object")
    declared = doc.get("parameters", {})
    if not isinstance(declared, dict):
        raise ConfigError("parameters", "must be an object of name: number")
    params = {str(k): v for k, v in declared.items()}
    params.update(parameters or {})
    p = _Parser({})
    p.parameters = {k: p.number(v, f"parameters.{k}") for k, v in params.items()}

    subsystems = doc.get("subsystems")
    if not isinstance(subsystems, list) or not subsystems:
        raise ConfigError("subsystems", "must be a non-empty list")
    dims, local_h, beta = [], [], []
    for j, sub in enumerate(subsystems):
        loc = f"subsystems[{j}]"
        if not isinstance(sub, dict):
            raise ConfigError(loc, "must be an object")
        for key in ("dim", "hamiltonian", "beta"):
            if key not in sub:
                raise ConfigError(loc, f"missing '{key}'")
        dim = sub["dim"]
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise ConfigError(f"{loc}.dim", "must be a positive integer")
        dims.append(dim)
        beta.append(p.number(sub["beta"], f"{loc}.beta", allow_params=True))
        local_h.append(p.operator(sub["hamiltonian"], f"{loc}.hamiltonian", [dim], local=True))

    if "tau" not in doc:
        raise ConfigError("$", "missing 'tau'")
    tau = p.number(doc["tau"], "tau", allow_params=True)
    total = int(np.prod(dims))

    raw_segments = doc.get("interaction", [])
    if not isinstance(raw_segments, list):
        raise ConfigError("interaction", "must be a list of segments")
    segments = []
    for s, seg in enumerate(raw_segments):
        loc = f"interaction[{s}]"
        if not isinstance(seg, dict):
            raise ConfigError(loc, "segment must be an object")
        if "duration" in seg:
            duration = p.number(seg["duration"], f"{loc}.duration", allow_params=True)
        elif len(raw_segments) == 1:
            duration = tau
        else:
            raise ConfigError(loc, "missing 'duration' (only a single segment may omit it)")
        segments.append((p.operator(seg, loc, dims, local=False), duration))
    if not segments:
        segments = [(np.zeros((total, total), dtype=np.complex128), tau)]

    opts_doc = doc.get("options", {})
    if not isinstance(opts_doc, dict):
        raise ConfigError("options", "must be an object")
    options = Options(
        conservation=opts_doc.get("conservation", "error"),
        merge_tol=p.number(opts_doc.get("merge_tol", MERGE_TOL), "options.merge_tol"),
        drop_tol=p.number(opts_doc.get("drop_tol", DROP_TOL), "options.drop_tol"),
    )
    if conservation is not None:
        options.conservation = conservation
    if options.conservation not in ("error", "warn"):
        raise ConfigError("options.conservation", "must be 'error' or 'warn'")

    try:
        model = PumpModel(tuple(dims), tuple(local_h), tuple(beta), tuple(segments), tau, options.conservation)
    except (DimensionError, ValueError) as exc:
        raise ConfigError("$", str(exc)) from None
    return LoadedConfig(model, options, p.parameters, p.used, doc)


def resolve_path(path: str | Path):
    """A filesystem path, or the name of a bundled example config."""
    path = Path(path)
    if not path.exists() and path.name in BUNDLED and path.parent == Path("."):
        return resources.files("qpump") / "data" / path.name
    return path


def read_document(path: str | Path) -> dict:
    target = resolve_path(path)
    try:
        text = target.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None


def load_config(path: str | Path, parameters: dict[str, float] | None = None,
                conservation: str | None = None) -> LoadedConfig:
    return parse_config(read_document(path), parameters, conservation)


def _matrix_doc(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def dump_config(model: PumpModel, options: Options | None = None) -> dict:
    """Config document with every operator written out as an explicit matrix."""
    options = options or Options(conservation=model.conservation)
    return {
        "subsystems": [
            {"dim": d, "beta": b, "hamiltonian": {"matrix": _matrix_doc(h)}}
            for d, b, h in zip(model.dims, model.beta, model.local_h)
        ],
        "interaction": [
            {"matrix": _matrix_doc(seg.matrix), "duration": seg.duration} for seg in model.segments
        ],
        "tau": model.tau,
        "options": {
            "conservation": model.conservation,
            "merge_tol": options.merge_tol,
            "drop_tol": options.drop_tol,
        },
    }
