"""End-to-end check of the bounded-orbit / coboundary equivalences on a scenario.

For each orbit the three conditions are evaluated independently:

(i)   ``coboundary``: a solver reconstructs ``c`` (transfer function on
      cyclic orbits, center solver residual otherwise);
(ii)  ``bounded_at_every_unit``: ``sup ||c||`` over each source fiber is
      bounded (finite groupoid: always; windowed G(X, T): growth probe);
(iii) ``globally_bounded``: the same for all arrows of the orbit.

The verdict is ``consistent`` when the three agree on every orbit,
``counterexample`` when they do not, and ``not_a_cocycle`` when the
cocycle identity itself fails.
"""

from __future__ import annotations

import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bundle import coboundary, cocycle_defects
from .groupoid import TransformationSystem, orbits, validate_groupoid
from .scenario import Scenario
from .solvers import (GrowthClassification, NotACoboundary, NotMinimal, boundedness_probe,
                      global_growth, solve_by_center, solve_least_squares, solve_transfer_function)

__all__ = ["REPORT_VERSION", "TheoremReport", "run_verify", "emit_report", "emit_csv",
           "parse_report"]

REPORT_VERSION = 1
AGREEMENT_TOL = 1e-6


@dataclass
class TheoremReport:
    scenario: str
    body: dict
    verdict: str
    details: list[str] = field(default_factory=list)
    growth: list[tuple[int, float]] = field(default_factory=list)
    timing_s: float = 0.0

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"

    def to_dict(self) -> dict:
        out = {"format_version": REPORT_VERSION, "schema": "cocycle-lab/report",
               "scenario": self.scenario, "verdict": self.verdict, "details": list(self.details),
               "growth": [[k, s] for k, s in self.growth]}
        out.update(self.body)
        return _clean(out)


def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def _cycle_subsystem(system: TransformationSystem, cycle: list[int]):
    pos = {x: i for i, x in enumerate(cycle)}
    return TransformationSystem(tuple(pos[system.T[x]] for x in cycle))


def _growth_dict(gc: GrowthClassification) -> dict:
    return {"verdict": gc.verdict, "slope": gc.slope_estimate,
            "sup": gc.sup_norm_by_window[-1][1] if gc.sup_norm_by_window else 0.0,
            "sup_norm_by_window": gc.sup_norm_by_window}


def run_verify(sc: Scenario, K_list=None) -> TheoremReport:
    """Cocycle check, boundedness per base unit and globally, all solvers, verdict."""
    t0 = time.perf_counter()
    g, L, c = sc.groupoid, sc.action, sc.cocycle
    details: list[str] = []
    warn: list[str] = []

    cc = cocycle_defects(g, L, c)
    is_cocycle = (cc.max_defect <= sc.tol and cc.unit_defect <= sc.tol
                  and cc.inverse_defect <= 2 * sc.tol)
    blocks = orbits(g)
    minimal = len(blocks) == 1
    if not minimal:
        warn.append(f"NotMinimal: {len(blocks)} orbits; equivalences are checked orbit by "
                    "orbit (outside the theorem's hypotheses for the whole groupoid)")
    gflags = dict(validate_groupoid(g).flags)
    if sc.wtg is not None:
        gflags.update(sc.wtg.flags)

    # (ii) and (iii)
    per_unit: dict[int, dict] = {}
    per_orbit_global: list[dict] = []
    growth: list[tuple[int, float]] = []
    if sc.system is None:
        norms = c.norms()
        for x in range(g.n_units):
            arrows = g.source_fibers[x]
            per_unit[x] = {"verdict": "bounded", "sup": float(norms[arrows].max(initial=0.0))}
        for block in blocks:
            idx = np.concatenate([g.source_fibers[x] for x in block])
            per_orbit_global.append({"verdict": "bounded",
                                     "sup": float(norms[idx].max(initial=0.0))})
    else:
        K_list = list(K_list or sc.K_list)
        for x in range(g.n_units):
            per_unit[x] = _growth_dict(boundedness_probe(sc.system, sc.potential, x, K_list))
        for block in blocks:
            per_orbit_global.append(_growth_dict(global_growth(sc.system, sc.potential, K_list,
                                                               units=block)))
        growth = [tuple(p) for p in global_growth(sc.system, sc.potential,
                                                  K_list).sup_norm_by_window]

    # (i): solvers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotMinimal)
        center = solve_by_center(g, L, c, sc.tol, strict=False)
    lsq = solve_least_squares(g, L, c, sc.tol)
    dc, dl = coboundary(g, L, center.section), coboundary(g, L, lsq.section)
    agreement = max((float(np.linalg.norm(dc[a] - dl[a])) for a in range(g.n_arrows)), default=0.0)
    solvers = {
        "center": {"max_residual": center.max_residual, "per_fiber_radii": center.per_fiber_radii},
        "least_squares": {"max_residual": lsq.max_residual, "gauge_dim": lsq.gauge_dim,
                          "per_fiber_radii": lsq.per_fiber_radii},
    }
    transfer_by_unit: dict[int, bool] = {}
    if sc.system is not None and sc.system.injective:
        tr = []
        for cyc in sc.system.cycles():
            sub = _cycle_subsystem(sc.system, cyc)
            try:
                solve_transfer_function(sub, [sc.potential[x] for x in cyc], sc.tol)
                ok, total = True, 0
            except NotACoboundary as exc:
                ok, total = False, exc.cycle_sum
            tr.append({"cycle": cyc, "solved": ok, "cycle_sum": total})
            transfer_by_unit.update({x: ok for x in cyc})
        solvers["transfer"] = {"status": "applied", "cycles": tr}
    else:
        solvers["transfer"] = {"status": "not_applicable"}

    orbit_rows = []
    for block, glob in zip(blocks, per_orbit_global):
        if transfer_by_unit:
            cond_i = all(transfer_by_unit[x] for x in block)
            how = "transfer"
        else:
            arrows = np.concatenate([g.source_fibers[x] for x in block]).tolist()
            res = max((float(np.linalg.norm(c[a] - dc[a])) for a in arrows), default=0.0)
            cond_i = res <= sc.solve_tol
            how = "center_residual"
        cond_ii = all(per_unit[x]["verdict"] == "bounded" for x in block)
        cond_iii = glob["verdict"] == "bounded"
        same = cond_i == cond_ii == cond_iii
        orbit_rows.append({"units": block, "coboundary": cond_i, "coboundary_test": how,
                           "bounded_at_every_unit": cond_ii, "globally_bounded": cond_iii,
                           "global": glob, "consistent": same})
        if not same:
            details.append(f"orbit {block}: coboundary={cond_i} bounded_at_every_unit={cond_ii} "
                           f"globally_bounded={cond_iii}")

    if not is_cocycle:
        verdict = "not_a_cocycle"
        details.insert(0, f"cocycle identity fails: defect {cc.max_defect:.6g} at pair "
                          f"{list(cc.worst_pair) if cc.worst_pair else None} (tol {sc.tol:g})")
    elif all(r["consistent"] for r in orbit_rows):
        verdict = "consistent"
    else:
        verdict = "counterexample"
    if sc.system is None and is_cocycle and agreement > AGREEMENT_TOL:
        details.append(f"center and least-squares coboundaries differ by {agreement:.3g}")

    body = {
        "groupoid": {"n_units": g.n_units, "n_arrows": g.n_arrows, "orbits": blocks,
                     "minimal": minimal, "window": g.window, "flags": gflags},
        "cocycle": {"defect": cc.max_defect,
                    "worst_pair": list(cc.worst_pair) if cc.worst_pair else None,
                    "unit_defect": cc.unit_defect, "inverse_defect": cc.inverse_defect,
                    "is_cocycle": is_cocycle, "tol": sc.tol},
        "boundedness": {"per_unit": per_unit, "per_orbit": per_orbit_global},
        "solvers": solvers,
        "solver_agreement": agreement,
        "orbits": orbit_rows,
        "warnings": warn,
        "cnd_interpretation": "per range fiber, K_ij = psi(a_i^-1 a_j)",
    }
    if sc.perturbation:
        body["perturbation"] = sc.perturbation
    return TheoremReport(sc.id, body, verdict, details, growth, time.perf_counter() - t0)


def emit_report(report: TheoremReport, format: str = "machine") -> bytes:
    """``machine``: sorted-key JSON (no timing, byte-stable); ``text``: summary."""
    if format == "machine":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if format != "text":
        raise ValueError(f"format must be 'text' or 'machine', got {format!r}")
    d = report.to_dict()
    out = io.StringIO()
    w = out.write
    w(f"scenario {d['scenario']}: {d['verdict'].upper()}\n")
    gd = d["groupoid"]
    w(f"  groupoid: {gd['n_units']} units, {gd['n_arrows']} arrows, "
      f"{len(gd['orbits'])} orbit(s), minimal={gd['minimal']}")
    w(f", window K={gd['window']}\n" if gd["window"] is not None else "\n")
    cd = d["cocycle"]
    w(f"  cocycle defect {cd['defect']:.3e} (tol {cd['tol']:g}) -> "
      f"{'cocycle' if cd['is_cocycle'] else 'NOT a cocycle'}\n")
    for name, s in d["solvers"].items():
        if "max_residual" in s:
            extra = f", gauge dim {s['gauge_dim']}" if s.get("gauge_dim") is not None else ""
            w(f"  solver {name}: max residual {s['max_residual']:.3e}{extra}\n")
        elif s.get("status") == "applied":
            for cyc in s["cycles"]:
                state = "solved" if cyc["solved"] else f"obstruction, cycle sum {cyc['cycle_sum']}"
                w(f"  solver transfer on cycle {cyc['cycle']}: {state}\n")
    w(f"  center vs least-squares coboundary gap {d['solver_agreement']:.3e}\n")
    for row in d["orbits"]:
        glob = row["global"]
        w(f"  orbit {row['units']}: coboundary={row['coboundary']} "
          f"bounded_at_every_unit={row['bounded_at_every_unit']} "
          f"globally_bounded={row['globally_bounded']} (sup {glob['sup']:.6g}"
          + (f", slope {glob['slope']:.4g}" if "slope" in glob and isinstance(glob["slope"], float)
             else "") + ")\n")
    for msg in d["warnings"]:
        w(f"  warning: {msg}\n")
    for msg in d["details"]:
        w(f"  detail: {msg}\n")
    w(f"  time {report.timing_s:.3f} s\n")
    return out.getvalue().encode()


def emit_csv(growth) -> bytes:
    """``K,sup_norm`` rows from a ``GrowthClassification`` or ``(K, sup)`` pairs."""
    if isinstance(growth, GrowthClassification):
        growth = growth.sup_norm_by_window
    lines = ["K,sup_norm"] + [f"{int(k)},{float(s)!r}" for k, s in growth]
    return ("\n".join(lines) + "\n").encode()


def parse_report(data: bytes) -> dict:
    return json.loads(data.decode())
