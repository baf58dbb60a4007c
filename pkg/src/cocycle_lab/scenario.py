"""Scenario files: parsing, resolution, validation and seeded generation.

A scenario is a TOML document with ``format_version = 1`` and named
tables ``[units]``, ``[arrows]``, ``[compose]``, ``[transformation]``,
``[bundle]``, ``[action]``, ``[cocycle]``, ``[metric]``,
``[tolerances]``. See ``README.md`` for the full schema.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import tomli
import tomli_w

from .bundle import (Cocycle, HilbertBundle, IsometricAction, Section, ShapeMismatch, coboundary,
                     complete_action, random_isometry, random_section, trivial_action,
                     validate_action, birkhoff_cocycle_on)
from .groupoid import (FiniteGroupoid, TransformationSystem, WindowedTG,
                       build_transformation_groupoid, pair_group_groupoid, validate_groupoid)
from .solvers import Metric

__all__ = [
    "FORMAT_VERSION",
    "ParseError",
    "ValidationError",
    "ParamError",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "scenario_from_doc",
    "dump_scenario",
    "gen_scenario",
    "gen_scenario_doc",
    "builtin_scenario",
    "builtin_scenarios",
]

FORMAT_VERSION = 1
DEFAULT_TOL = 1e-9
DEFAULT_SOLVE_TOL = 1e-7
ISOTROPY = {"trivial": 1, "Z/1": 1, "Z/2": 2, "Z/3": 3, "Z/4": 4}
MAX_UNITS = 32
MAX_DIM = 16


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line, self.column = line, column


class ValidationError(ValueError):
    def __init__(self, message: str, ids=()):
        super().__init__(message)
        self.ids = tuple(ids)


class ParamError(ValueError):
    pass


@dataclass(eq=False)
class Scenario:
    id: str
    groupoid: FiniteGroupoid
    bundle: HilbertBundle
    action: IsometricAction
    cocycle: Cocycle
    tol: float = DEFAULT_TOL
    solve_tol: float = DEFAULT_SOLVE_TOL
    seed: int | None = None
    system: TransformationSystem | None = None
    wtg: WindowedTG | None = None
    K_list: tuple[int, ...] | None = None
    potential: list | None = None
    metric: Metric | None = None
    base_section: Section | None = None
    perturbation: dict | None = None
    doc: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# parsing

_POS = re.compile(r"\(at line (\d+), column (\d+)\)")


def parse_scenario(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        msg = str(exc)
        m = _POS.search(msg)
        if m:
            raise ParseError(_POS.sub("", msg).strip(), int(m.group(1)), int(m.group(2))) from None
        raise ParseError(msg) from None


def load_scenario(path) -> Scenario:
    """Read, resolve and validate a scenario file.

    Raises ``ParseError`` for malformed TOML and ``ValidationError`` for
    dangling ids, shape problems or failed groupoid/action axioms.
    """
    text = Path(path).read_text()
    doc = parse_scenario(text)
    doc.setdefault("id", Path(path).stem)
    return scenario_from_doc(doc)


def dump_scenario(doc: dict) -> str:
    return tomli_w.dumps(doc)


# ---------------------------------------------------------------------------
# resolution

def _number(v):
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            raise ValidationError(f"cannot read number {v!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"expected a number, got {v!r}")
    return v


def _vec(real, imag=None, dtype=np.float64) -> np.ndarray:
    v = np.asarray(real, dtype=np.float64)
    if imag is not None:
        v = v + 1j * np.asarray(imag, dtype=np.float64)
    return v.astype(dtype)


def _ids(values, limit, what):
    arr = np.asarray(values, dtype=np.int64)
    if arr.size == 0 or (arr.min() >= 0 and arr.max() < limit):
        return
    bad = [int(v) for v in arr.tolist() if not 0 <= v < limit]
    if bad:
        raise ValidationError(f"{what} refers to id {bad[0]} but only {limit} exist", bad)


def _require(doc, key, kind=dict):
    v = doc.get(key)
    if not isinstance(v, kind):
        raise ValidationError(f"missing or malformed [{key}] block")
    return v


def _groupoid_from_tables(doc) -> FiniteGroupoid:
    units = _require(doc, "units")
    n = int(units.get("count", -1))
    if n < 0:
        raise ValidationError("[units] needs count >= 0")
    arrows = _require(doc, "arrows")
    try:
        src, rng, inv, unit = (list(map(int, arrows[k])) for k in ("src", "rng", "inverse", "unit"))
    except KeyError as exc:
        raise ValidationError(f"[arrows] is missing {exc.args[0]!r}") from None
    m = len(src)
    if not (len(rng) == len(inv) == m):
        raise ValidationError("[arrows] src, rng and inverse must have equal length")
    if len(unit) != n:
        raise ValidationError(f"[arrows] unit lists {len(unit)} arrows for {n} units")
    _ids(src + rng, n, "[arrows] src/rng")
    _ids(inv + unit, m, "[arrows] inverse/unit")
    table = _require(doc, "compose").get("table", [])
    if any(len(row) != 3 for row in table):
        bad = next(row for row in table if len(row) != 3)
        raise ValidationError(f"[compose] rows must be [a, b, ab], got {bad}")
    arr = np.asarray(table, dtype=np.int64).reshape(-1, 3)
    _ids(arr.ravel().tolist(), m, "[compose] table")
    compose = {(a, b): c for a, b, c in arr.tolist()}
    return FiniteGroupoid(n, tuple(src), tuple(rng), tuple(inv), tuple(unit), compose)


def _matrix_entries(block, m, what):
    out = {}
    for entry in block:
        a = int(entry["arrow"])
        _ids([a], m, what)
        out[a] = _vec(entry["data"], entry.get("imag"), np.complex128)
    return out


def scenario_from_doc(doc: dict) -> Scenario:
    """Resolve a parsed document into a validated ``Scenario``."""
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    has_tables, has_tr = "arrows" in doc, "transformation" in doc
    if has_tables == has_tr:
        raise ValidationError("give exactly one of [arrows]/[compose] or [transformation]")

    tols = doc.get("tolerances", {})
    tol = float(tols.get("tol", DEFAULT_TOL))
    solve_tol = float(tols.get("solve_tol", DEFAULT_SOLVE_TOL))

    system = wtg = K_list = None
    if has_tr:
        tr = doc["transformation"]
        T = [int(t) for t in tr.get("T", [])]
        if not T:
            raise ValidationError("[transformation] needs a non-empty T array")
        _ids(T, len(T), "[transformation] T")
        system = TransformationSystem(tuple(T))
        K_list = tuple(int(k) for k in tr.get("K_list", []))
        K = int(tr.get("K", K_list[0] if K_list else 0))
        if K < 0 or any(k < 0 for k in K_list) or list(K_list) != sorted(set(K_list)):
            raise ValidationError("[transformation] K must be >= 0 and K_list increasing")
        if not K_list:
            K_list = (K,)
        wtg = build_transformation_groupoid(system, K)
        g = wtg.groupoid
    else:
        g = _groupoid_from_tables(doc)

    rep = validate_groupoid(g)
    if not rep.ok:
        v = rep.violations[0]
        raise ValidationError(f"groupoid axioms fail: {v.kind} at arrows {list(v.arrows)} "
                              f"({len(rep.violations)} violation(s))", v.arrows)

    bdoc = doc.get("bundle", {})
    fieldname = bdoc.get("field", "real")
    if "dims" in bdoc:
        dims = [int(d) for d in bdoc["dims"]]
        if len(dims) != g.n_units:
            raise ValidationError(f"[bundle] dims has {len(dims)} entries for {g.n_units} units")
    else:
        dims = [int(bdoc.get("dim", 1))] * g.n_units
    try:
        bundle = HilbertBundle(tuple(dims), fieldname)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if system is not None and (set(dims) != {1} or fieldname != "real"):
        raise ValidationError("transformation scenarios use a real 1-dim bundle")

    action = _resolve_action(doc.get("action", {"kind": "trivial"}), g, bundle)
    try:
        arep = validate_action(g, bundle, action, tol)
    except ShapeMismatch as exc:
        raise ValidationError(str(exc)) from None
    if not arep.ok:
        v = arep.violations[0]
        raise ValidationError(f"action axioms fail: {v.kind} at arrows {list(v.arrows)} "
                              f"{v.detail}", v.arrows)

    sc = Scenario(id=str(doc.get("id", "scenario")), groupoid=g, bundle=bundle, action=action,
                  cocycle=None, tol=tol, solve_tol=solve_tol, seed=doc.get("seed"),
                  system=system, wtg=wtg, K_list=K_list, doc=doc)
    _resolve_cocycle(doc.get("cocycle", {"kind": "zero"}), sc)

    if "metric" in doc:
        edges = []
        for e in doc["metric"].get("edges", []):
            if len(e) != 3:
                raise ValidationError(f"[metric] edges are [u, v, weight], got {e}")
            _ids(e[:2], g.n_units, "[metric] edges")
            edges.append((int(e[0]), int(e[1]), float(e[2])))
        sc.metric = Metric(g.n_units, tuple(edges))
    return sc


def _resolve_action(adoc, g, bundle) -> IsometricAction:
    kind = adoc.get("kind", "trivial")
    if kind == "trivial":
        return trivial_action(g, bundle)
    mats = _matrix_entries(adoc.get("matrix", []), g.n_arrows, "[action] matrix")
    if bundle.field == "real":
        if any(np.abs(M.imag).max(initial=0) > 0 for M in mats.values()):
            raise ValidationError("complex matrix entries in a real bundle")
        mats = {a: M.real.copy() for a, M in mats.items()}
    for a, M in mats.items():
        want = (bundle.dims[g.rng[a]], bundle.dims[g.src[a]])
        if M.ndim == 1 and want[0] * want[1] == M.size:
            M = M.reshape(want)
            mats[a] = M
        if M.shape != want:
            raise ValidationError(f"[action] arrow {a}: matrix shape {M.shape}, fibers need {want}",
                                  (a,))
    if kind == "explicit":
        missing = [a for a in range(g.n_arrows) if a not in mats]
        if missing:
            raise ValidationError(f"[action] explicit matrices missing for arrow {missing[0]}",
                                  missing)
        return IsometricAction(tuple(mats[a] for a in range(g.n_arrows)))
    if kind == "generators":
        try:
            return complete_action(g, bundle, mats)
        except ValueError as exc:
            raise ValidationError(f"[action] {exc}") from None
    raise ValidationError(f"unknown [action] kind {kind!r}")


def _section(cdoc, bundle, key="section") -> Section:
    rows = cdoc.get(key)
    if rows is None or len(rows) != len(bundle.dims):
        raise ValidationError(f"[cocycle] {key} needs one vector per unit")
    imag = cdoc.get(key + "_imag")
    vals = []
    for x, row in enumerate(rows):
        v = _vec(row, None if imag is None else imag[x], bundle.dtype)
        if len(v) != bundle.dims[x]:
            raise ValidationError(f"[cocycle] {key}[{x}] has length {len(v)}, fiber has "
                                  f"dimension {bundle.dims[x]}", (x,))
        vals.append(v)
    return Section(tuple(vals))


def _resolve_cocycle(cdoc, sc: Scenario):
    g, bundle = sc.groupoid, sc.bundle
    kind = cdoc.get("kind", "zero")
    if kind == "zero":
        c = Cocycle(tuple(bundle.zero(r) for r in g.rng))
    elif kind == "explicit":
        vals = cdoc.get("values")
        if vals is None or len(vals) != g.n_arrows:
            raise ValidationError("[cocycle] explicit values need one vector per arrow")
        imag = cdoc.get("imag")
        out = []
        for a, row in enumerate(vals):
            v = _vec(row, None if imag is None else imag[a], bundle.dtype)
            if len(v) != bundle.dims[g.rng[a]]:
                raise ValidationError(f"[cocycle] value for arrow {a} has wrong length", (a,))
            out.append(v)
        c = Cocycle(tuple(out))
    elif kind == "birkhoff":
        if sc.wtg is None:
            raise ValidationError("birkhoff cocycles need a [transformation] block")
        pot = [_number(v) for v in cdoc.get("potential", [])]
        if len(pot) != sc.system.n_points:
            raise ValidationError(f"[cocycle] potential has {len(pot)} values for "
                                  f"{sc.system.n_points} points")
        sc.potential = pot
        c = birkhoff_cocycle_on(sc.wtg, pot)
    elif kind in ("coboundary", "perturbed"):
        f = _section(cdoc, bundle)
        sc.base_section = f
        c = coboundary(g, sc.action, f)
        if kind == "perturbed":
            a = int(cdoc.get("arrow", 0))
            _ids([a], g.n_arrows, "[cocycle] perturbed arrow")
            coord = int(cdoc.get("coord", 0))
            if not 0 <= coord < len(c[a]):
                raise ValidationError(f"[cocycle] coord {coord} outside fiber of arrow {a}", (a,))
            delta = float(cdoc.get("delta", 0.5))
            vals = list(c.values)
            bumped = vals[a].copy()
            bumped[coord] += delta
            vals[a] = bumped
            c = Cocycle(tuple(vals))
            sc.perturbation = {"arrow": a, "coord": coord, "delta": delta}
    else:
        raise ValidationError(f"unknown [cocycle] kind {kind!r}")
    sc.cocycle = c


# ---------------------------------------------------------------------------
# generation

def _cyclic_rep(q: int, d: int, rng: np.random.Generator, fieldname: str) -> np.ndarray:
    """A d-dim orthogonal (unitary) representation of Z/q, conjugated randomly."""
    if fieldname == "complex":
        D = np.diag(np.exp(2j * np.pi * rng.integers(0, q, size=d) / q))
    else:
        D = np.zeros((d, d))
        i = 0
        while i < d:
            if d - i >= 2 and q > 2 and rng.random() < 0.6:
                t = 2 * np.pi * rng.integers(0, q) / q
                D[i:i + 2, i:i + 2] = [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]
                i += 2
            else:
                D[i, i] = -1.0 if (q % 2 == 0 and rng.random() < 0.5) else 1.0
                i += 1
    U = random_isometry(d, rng, fieldname)
    return U @ D @ U.conj().T


def _mat_entry(a, M, fieldname):
    entry = {"arrow": int(a), "data": np.real(M).tolist()}
    if fieldname == "complex":
        entry["imag"] = np.imag(M).tolist()
    return entry


def _groupoid_tables(g: FiniteGroupoid) -> dict:
    return {
        "units": {"count": g.n_units},
        "arrows": {"src": list(g.src), "rng": list(g.rng), "inverse": list(g.inverse),
                   "unit": list(g.unit_arrow)},
        "compose": {"table": [[a, b, c] for (a, b), c in sorted(g.compose.items())]},
    }


def _param(params, key, default, lo, hi):
    v = params.get(key, default)
    if not isinstance(v, (int, np.integer)) or not lo <= v <= hi:
        raise ParamError(f"{key} must be an integer in [{lo}, {hi}], got {v!r}")
    return int(v)


def gen_scenario_doc(seed: int, kind: str, params: dict | None = None) -> dict:
    """Deterministic scenario document for ``(seed, kind, params)``.

    kinds: ``minimal_groupoid`` (transitive, isotropy Z/q with q <= 4,
    coboundary cocycle), ``perturbed`` (same, one arrow value bumped by
    ``delta``), ``transformation`` (cyclic T with a rational potential).
    """
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    if kind in ("minimal_groupoid", "perturbed"):
        units = _param(params, "units", int(rng.integers(2 if kind == "perturbed" else 1, 9)),
                       1, MAX_UNITS)
        dim = _param(params, "dim", int(rng.integers(1, 5)), 1, MAX_DIM)
        iso = params.get("isotropy", ["trivial", "Z/2", "Z/3", "Z/4"][int(rng.integers(0, 4))])
        if iso not in ISOTROPY:
            raise ParamError(f"isotropy must be one of {sorted(ISOTROPY)}, got {iso!r}")
        q = ISOTROPY[iso]
        fieldname = params.get("field", "real")
        if fieldname not in ("real", "complex"):
            raise ParamError(f"field must be 'real' or 'complex', got {fieldname!r}")
        g = pair_group_groupoid(units, q)
        index = {lab: i for i, lab in enumerate(g.labels)}
        gens = [_mat_entry(index[(j, 0, 0)], random_isometry(dim, rng, fieldname), fieldname)
                for j in range(1, units)]
        if q > 1:
            gens.append(_mat_entry(index[(0, 1, 0)], _cyclic_rep(q, dim, rng, fieldname), fieldname))
        bundle = HilbertBundle.constant(units, dim, fieldname)
        f = random_section(bundle, rng, scale=float(params.get("scale", 1.0)))
        cdoc: dict[str, Any] = {"kind": "coboundary", "section": [np.real(v).tolist() for v in f.values]}
        if fieldname == "complex":
            cdoc["section_imag"] = [np.imag(v).tolist() for v in f.values]
        if kind == "perturbed":
            delta = float(params.get("delta", 0.5))
            if not delta > 0:
                raise ParamError("delta must be positive")
            cdoc.update(kind="perturbed", arrow=int(rng.integers(0, g.n_arrows)),
                        coord=int(rng.integers(0, dim)), delta=delta)
        doc = {"format_version": FORMAT_VERSION, "id": f"gen-{kind}-{seed}", "seed": int(seed),
               "description": f"pair groupoid on {units} units x {iso}, fiber dim {dim}"}
        doc.update(_groupoid_tables(g))
        doc["bundle"] = {"dim": dim, "field": fieldname}
        doc["action"] = {"kind": "generators", "matrix": gens}
        doc["cocycle"] = cdoc
        doc["tolerances"] = {"tol": DEFAULT_TOL, "solve_tol": DEFAULT_SOLVE_TOL}
        return doc
    if kind == "transformation":
        n = _param(params, "n_points", int(rng.integers(2, 13)), 1, MAX_UNITS)
        perm = rng.permutation(n)
        T = [0] * n
        for i in range(n):
            T[int(perm[i])] = int(perm[(i + 1) % n])
        mean = Fraction(str(params.get("mean", 0)))
        pot = [Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5))) for _ in range(n)]
        pot[-1] += mean * n - sum(pot)
        K_list = params.get("K_list") or [n, 2 * n, 4 * n, 8 * n]
        K_list = [int(k) for k in K_list]
        return {
            "format_version": FORMAT_VERSION, "id": f"gen-transformation-{seed}", "seed": int(seed),
            "description": f"{n}-cycle, potential with cycle mean {mean}",
            "transformation": {"T": T, "K": int(params.get("K", K_list[0])), "K_list": K_list},
            "bundle": {"dim": 1, "field": "real"},
            "action": {"kind": "trivial"},
            "cocycle": {"kind": "birkhoff", "potential": [str(v) for v in pot]},
            "tolerances": {"tol": DEFAULT_TOL, "solve_tol": DEFAULT_SOLVE_TOL},
        }
    raise ParamError(f"unknown kind {kind!r}")


def gen_scenario(seed: int, kind: str, params: dict | None = None) -> Scenario:
    return scenario_from_doc(gen_scenario_doc(seed, kind, params))


# ---------------------------------------------------------------------------
# shipped examples

_BUILTIN = Path(__file__).parent / "scenarios"


def builtin_scenarios() -> list[str]:
    return sorted(p.stem for p in _BUILTIN.glob("*.toml"))


def builtin_scenario(name: str) -> Scenario:
    return load_scenario(_BUILTIN / f"{name}.toml")
