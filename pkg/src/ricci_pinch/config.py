"""Scenario configuration files (TOML, one scenario per file).

Grammar, ``format_version = 1``::

    format_version = 1
    name = "round_s4"
    seed = 7

    [geometry]
    type = "constant_curvature"     # n, and kappa or radius
    # type = "product_spheres"      # dims = [n1, n2], radii = [a, b]
    # type = "milnor"               # group = "SU2" | "Nil" | "Sol", A, B, C
    # type = "warped_dumbbell"      # n_fiber, n_grid, scale, depth, power
    # type = "warped_round"         # n_fiber, n_grid, radius

    [flow]                          # all optional
    t_end = 10.0
    dt_init = 1e-3
    dt_min = 1e-12
    safety = 0.05
    max_steps = 200000
    blowup_ratio = 1e4
    cfl = 0.05

    [pinch]                         # all optional; unset constants get defaults
    gamma = 2.0
    c_shift = 0.0
    C1 = 1.0
    c2 = 0.6
    c1_cubic = 0.5
    c3 = 0.0
    c4 = 2.0
    fd_step = 1e-3

    [outputs]                       # optional, relative to the output directory
    csv_path = "round_s4.csv"
    summary_path = "round_s4.json"

Unknown keys, missing required keys and non-finite numbers raise
:class:`ConfigError` naming the dotted key and its line.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .flow import FlowControls
from .geometry import ConstantCurvature, MilnorFrame3D, ProductOfSpheres, WarpedProductSphere
from .pinching import PinchConfig

FORMAT_VERSION = 1

GEOMETRY_KEYS = {
    "constant_curvature": ({"n"}, {"kappa", "radius"}),
    "product_spheres": ({"dims", "radii"}, set()),
    "milnor": ({"group", "A", "B", "C"}, set()),
    "warped_dumbbell": (set(), {"n_fiber", "n_grid", "scale", "depth", "power"}),
    "warped_round": (set(), {"n_fiber", "n_grid", "radius"}),
}
FLOW_KEYS = {"t_end", "dt_init", "dt_min", "safety", "max_steps", "blowup_ratio", "cfl"}
PINCH_KEYS = {"gamma", "c_shift", "C1", "c2", "c1_cubic", "c3", "c4", "fd_step"}
OUTPUT_KEYS = {"csv_path", "summary_path"}
TOP_KEYS = {"format_version", "name", "seed", "geometry", "flow", "pinch", "outputs"}


class ConfigError(ValueError):
    def __init__(self, key: str, line: int | None, message: str):
        self.key = key
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"{key}{where}: {message}")


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    seed: int
    geometry: object
    geometry_table: dict
    t_end: float
    controls: FlowControls
    pinch: PinchConfig
    csv_path: str
    summary_path: str
    format_version: int = FORMAT_VERSION
    source: str | None = field(default=None, compare=False)


def _line_of(text: str, dotted: str) -> int | None:
    """Line number of ``dotted`` (``section.key`` or ``key``) in TOML text."""
    parts = dotted.split(".")
    section, key = (parts[0], parts[-1]) if len(parts) > 1 else (None, parts[0])
    current = None
    header_line = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            current = m.group(1).strip()
            if current == section:
                header_line = no
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return no
    return header_line


def _number(tbl: dict, key: str, dotted: str, text: str, *, integer=False, positive=False,
            nonneg=False):
    v = tbl[key]
    line = _line_of(text, dotted)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(dotted, line, f"expected a number, got {v!r}")
    if integer and not isinstance(v, int):
        raise ConfigError(dotted, line, "expected an integer")
    if not math.isfinite(v):
        raise ConfigError(dotted, line, "must be finite")
    if positive and not v > 0:
        raise ConfigError(dotted, line, "must be positive")
    if nonneg and v < 0:
        raise ConfigError(dotted, line, "must be >= 0")
    return int(v) if integer else float(v)


def _check_keys(tbl: dict, allowed: set, required: set, prefix: str, text: str):
    for k in tbl:
        if k not in allowed:
            dotted = f"{prefix}.{k}" if prefix else k
            raise ConfigError(dotted, _line_of(text, dotted), "unknown key")
    for k in sorted(required):
        if k not in tbl:
            dotted = f"{prefix}.{k}" if prefix else k
            raise ConfigError(dotted, _line_of(text, prefix) if prefix else None, "missing required key")


def _table(doc: dict, key: str, text: str) -> dict:
    tbl = doc.get(key, {})
    if not isinstance(tbl, dict):
        raise ConfigError(key, _line_of(text, key), "expected a table")
    return tbl


def _geometry(tbl: dict, text: str):
    if "type" not in tbl:
        raise ConfigError("geometry.type", _line_of(text, "geometry"), "missing required key")
    tag = tbl["type"]
    if tag not in GEOMETRY_KEYS:
        raise ConfigError("geometry.type", _line_of(text, "geometry.type"), f"unknown geometry tag {tag!r}")
    required, optional = GEOMETRY_KEYS[tag]
    _check_keys(tbl, required | optional | {"type"}, required, "geometry", text)

    def num(k, **kw):
        return _number(tbl, k, f"geometry.{k}", text, **kw)

    if tag == "constant_curvature":
        n = num("n", integer=True)
        if not 3 <= n <= 8:
            raise ConfigError("geometry.n", _line_of(text, "geometry.n"), "must lie in [3, 8]")
        if ("kappa" in tbl) == ("radius" in tbl):
            raise ConfigError("geometry.kappa", _line_of(text, "geometry"), "give exactly one of kappa, radius")
        if "radius" in tbl:
            r = num("radius", positive=True)
            return ConstantCurvature(n, 1.0 / (r * r))
        return ConstantCurvature(n, num("kappa"))
    if tag == "product_spheres":
        dims, radii = tbl["dims"], tbl["radii"]
        for key, val in (("dims", dims), ("radii", radii)):
            if not isinstance(val, list) or len(val) != 2:
                raise ConfigError(f"geometry.{key}", _line_of(text, f"geometry.{key}"), "expected a list of two values")
        sub = {"d0": dims[0], "d1": dims[1], "r0": radii[0], "r1": radii[1]}
        d = [_number(sub, f"d{i}", "geometry.dims", text, integer=True, positive=True) for i in (0, 1)]
        r = [_number(sub, f"r{i}", "geometry.radii", text) for i in (0, 1)]
        if min(r) <= 0:
            raise ConfigError("geometry.radii", _line_of(text, "geometry.radii"), "radii must be positive")
        if not 3 <= sum(d) <= 8:
            raise ConfigError("geometry.dims", _line_of(text, "geometry.dims"), "total dimension must lie in [3, 8]")
        return ProductOfSpheres(d[0], r[0], d[1], r[1])
    if tag == "milnor":
        group = tbl["group"]
        if group not in ("SU2", "Nil", "Sol"):
            raise ConfigError("geometry.group", _line_of(text, "geometry.group"), f"unknown group {group!r}")
        return MilnorFrame3D(group, *(num(k, positive=True) for k in "ABC"))
    kw = {}
    if "n_fiber" in tbl:
        kw["n_fiber"] = num("n_fiber", integer=True)
        if not 2 <= kw["n_fiber"] <= 7:
            raise ConfigError("geometry.n_fiber", _line_of(text, "geometry.n_fiber"), "must lie in [2, 7]")
    if "n_grid" in tbl:
        kw["n_grid"] = num("n_grid", integer=True)
        if kw["n_grid"] < 16:
            raise ConfigError("geometry.n_grid", _line_of(text, "geometry.n_grid"), "must be >= 16")
    if tag == "warped_round":
        if "radius" in tbl:
            kw["radius"] = num("radius", positive=True)
        return WarpedProductSphere.round(**kw)
    for k in ("scale", "depth"):
        if k in tbl:
            kw[k] = num(k, positive=True)
    if "power" in tbl:
        kw["power"] = num("power", integer=True, positive=True)
    if kw.get("depth", 0.7) >= 1:
        raise ConfigError("geometry.depth", _line_of(text, "geometry.depth"), "must be < 1")
    return WarpedProductSphere.dumbbell(**kw)


def parse_config(data: bytes | str, source: str | None = None) -> ScenarioConfig:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError("<file>", int(m.group(1)) if m else None, f"syntax error: {exc}") from None
    _check_keys(doc, TOP_KEYS, {"format_version", "name", "seed", "geometry"}, "", text)
    version = _number(doc, "format_version", "format_version", text, integer=True)
    if version != FORMAT_VERSION:
        raise ConfigError("format_version", _line_of(text, "format_version"),
                          f"unsupported version {version} (expected {FORMAT_VERSION})")
    name = doc["name"]
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ConfigError("name", _line_of(text, "name"), "must be a non-empty [A-Za-z0-9_.-] string")
    seed = _number(doc, "seed", "seed", text, integer=True, nonneg=True)
    if seed >= 2**64:
        raise ConfigError("seed", _line_of(text, "seed"), "must fit in 64 bits")

    gtbl = _table(doc, "geometry", text)
    try:
        geometry = _geometry(gtbl, text)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("geometry", _line_of(text, "geometry"), str(exc)) from None

    ftbl = _table(doc, "flow", text)
    _check_keys(ftbl, FLOW_KEYS, set(), "flow", text)
    t_end = _number(ftbl, "t_end", "flow.t_end", text, positive=True) if "t_end" in ftbl else 10.0
    ckw = {}
    for k in sorted(FLOW_KEYS - {"t_end"}):
        if k in ftbl:
            ckw[k] = _number(ftbl, k, f"flow.{k}", text, integer=(k == "max_steps"), positive=True)
    try:
        controls = FlowControls(**ckw)
    except ValueError as exc:
        raise ConfigError("flow", _line_of(text, "flow"), str(exc)) from None

    ptbl = _table(doc, "pinch", text)
    _check_keys(ptbl, PINCH_KEYS, set(), "pinch", text)
    pkw = {k: _number(ptbl, k, f"pinch.{k}", text, nonneg=True) for k in sorted(ptbl)}
    for k in ("gamma", "C1", "c1_cubic", "fd_step"):
        if k in pkw and pkw[k] <= 0:
            raise ConfigError(f"pinch.{k}", _line_of(text, f"pinch.{k}"), "must be positive")
    if "gamma" in pkw and pkw["gamma"] > 2:
        raise ConfigError("pinch.gamma", _line_of(text, "pinch.gamma"), "must be <= 2")
    pkw["provenance"] = {k: "user" for k in ("C1", "c2", "c3", "c4") if k in pkw}
    pinch = PinchConfig(**pkw)

    otbl = _table(doc, "outputs", text)
    _check_keys(otbl, OUTPUT_KEYS, set(), "outputs", text)
    for k, v in otbl.items():
        if not isinstance(v, str) or not v:
            raise ConfigError(f"outputs.{k}", _line_of(text, f"outputs.{k}"), "expected a non-empty path")
    return ScenarioConfig(
        name=name, seed=seed, geometry=geometry, geometry_table=dict(gtbl), t_end=t_end,
        controls=controls, pinch=pinch, csv_path=otbl.get("csv_path", f"{name}.csv"),
        summary_path=otbl.get("summary_path", f"{name}.json"), format_version=version, source=source,
    )


def load_config(path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        return parse_config(fh.read(), source=str(path))


def controls_dict(c: FlowControls) -> dict:
    return {f.name: getattr(c, f.name) for f in fields(c)}
