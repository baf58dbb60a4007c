"""Solvers for the coboundary equation and boundedness diagnostics.

Three routes to a section ``f`` with ``c = delta f``:

* ``solve_by_center``: ``f(x)`` is the Chebyshev center of ``c(G^x)``;
* ``solve_least_squares``: minimum-norm least squares on the linear
  coboundary operator;
* ``solve_transfer_function``: partial sums along a cyclic permutation.

Sections are only determined up to invariant sections, so results are
compared through their coboundaries, never directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import nnls
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .bundle import (BundleVector, Cocycle, IsometricAction, Section, check_cocycle, coboundary)
from .groupoid import FiniteGroupoid, TransformationSystem, is_minimal, transformation_fiber
from .meb import Ball, min_enclosing_ball

__all__ = [
    "NotMinimal",
    "CocycleDefect",
    "NotACoboundary",
    "DomainError",
    "NoMetric",
    "SolveReport",
    "GrowthClassification",
    "OrbitHull",
    "Metric",
    "max_residual",
    "solve_by_center",
    "solve_least_squares",
    "solve_transfer_function",
    "birkhoff_fiber_values",
    "boundedness_probe",
    "global_growth",
    "classify_growth",
    "affine_orbit",
    "hull_distance",
    "orbit_hull_invariance_check",
    "uniform_convexity_delta",
    "midpoint_check",
    "modulus_of_continuity_estimate",
]

STALL_EPS = 1e-6
SLOPE_EPS = 1e-6
FIT_RTOL = 0.05


class NotMinimal(UserWarning):
    """The groupoid has several orbits; results are per orbit."""


class CocycleDefect(ValueError):
    def __init__(self, defect: float, tol: float):
        super().__init__(f"cocycle identity fails: defect {defect:.3g} > tol {tol:.3g}")
        self.defect = defect


class NotACoboundary(ValueError):
    def __init__(self, cycle_sum):
        super().__init__(f"not a coboundary: cycle sum {cycle_sum}")
        self.cycle_sum = cycle_sum


class DomainError(ValueError):
    pass


class NoMetric(ValueError):
    pass


@dataclass
class SolveReport:
    section: Section
    max_residual: float
    method: str
    per_fiber_radii: dict[int, float]
    gauge_dim: int | None = None
    warnings: list[str] = field(default_factory=list)


def max_residual(g: FiniteGroupoid, L: IsometricAction, c: Cocycle, f: Section) -> float:
    """``max_a ||c(a) - (f(r(a)) - L(a) f(s(a)))||``."""
    d = coboundary(g, L, f)
    return max((float(np.linalg.norm(c[a] - d[a])) for a in range(g.n_arrows)), default=0.0)


def _radii(g, c, f) -> dict[int, float]:
    out = {}
    for x in range(g.n_units):
        arrows = g.range_fibers[x]
        out[x] = max((float(np.linalg.norm(c[a] - f[x])) for a in arrows.tolist()), default=0.0)
    return out


def _precheck(g, L, c, tol, strict, warn):
    if strict:
        defect = check_cocycle(g, L, c)
        if defect > tol:
            raise CocycleDefect(defect, tol)
    if not is_minimal(g):
        msg = "groupoid is not minimal; solving orbit by orbit"
        warn.append(msg)
        warnings.warn(msg, NotMinimal, stacklevel=3)


def solve_by_center(g: FiniteGroupoid, L: IsometricAction, c: Cocycle, tol: float = 1e-9,
                    strict: bool = True) -> SolveReport:
    """``f(x) = center of the smallest ball containing {c(a) : r(a) = x}``.

    Works because left multiplication by ``a`` maps the points over
    ``s(a)`` onto those over ``r(a)`` through the affine isometry
    ``u -> L(a) u + c(a)``, which carries center to center.
    """
    notes: list[str] = []
    _precheck(g, L, c, tol, strict, notes)
    values, radii = [], {}
    for x in range(g.n_units):
        arrows = g.range_fibers[x].tolist()
        ball: Ball = min_enclosing_ball(np.stack([c[a] for a in arrows]), tol)
        values.append(ball.center)
        radii[x] = ball.radius
    f = Section(tuple(values))
    return SolveReport(f, max_residual(g, L, c, f), "center", radii, warnings=notes)


def coboundary_matrix(g: FiniteGroupoid, L: IsometricAction, dims: Sequence[int]) -> np.ndarray:
    """Dense matrix of ``f -> (f(r(a)) - L(a) f(s(a)))_a``."""
    col = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    rows = [dims[r] for r in g.rng]
    row = np.concatenate([[0], np.cumsum(rows)]).astype(int)
    dtype = np.result_type(*(M.dtype for M in L.mats)) if L.mats else np.float64
    D = np.zeros((row[-1], col[-1]), dtype=dtype)
    for a, (s, r) in enumerate(zip(g.src, g.rng)):
        blk = D[row[a]:row[a + 1]]
        blk[:, col[r]:col[r + 1]] += np.eye(dims[r])
        blk[:, col[s]:col[s + 1]] -= L.mats[a]
    return D


def solve_least_squares(g: FiniteGroupoid, L: IsometricAction, c: Cocycle,
                        tol: float = 1e-9) -> SolveReport:
    """Minimum-norm minimizer of ``sum_a ||c(a) - f(r(a)) + L(a) f(s(a))||^2``.

    Also reports ``gauge_dim``, the dimension of the invariant sections
    (kernel of the coboundary operator).
    """
    dims = [len(v) for v in _unit_dims(g, c)]
    D = coboundary_matrix(g, L, dims)
    rhs = np.concatenate([np.asarray(v) for v in c.values]) if len(c) else np.zeros(0)
    if D.size == 0:
        sol, rank = np.zeros(D.shape[1], dtype=D.dtype), 0
    else:
        sol, _, rank, _ = np.linalg.lstsq(D, rhs.astype(np.result_type(D, rhs)), rcond=None)
    col = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    f = Section(tuple(sol[col[x]:col[x + 1]] for x in range(g.n_units)))
    notes = [] if is_minimal(g) else ["groupoid is not minimal; solving orbit by orbit"]
    return SolveReport(f, max_residual(g, L, c, f), "least_squares", _radii(g, c, f),
                       gauge_dim=int(D.shape[1] - rank), warnings=notes)


def _unit_dims(g, c):
    out = [None] * g.n_units
    for a, r in enumerate(g.rng):
        if out[r] is None:
            out[r] = c[a]
    return out


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def solve_transfer_function(sys: TransformationSystem, f: Sequence, tol: float = 1e-9) -> list:
    """``g`` with ``f(x) = g(x) - g(T x)`` for a cyclic permutation ``T``.

    ``g(x0) = 0`` at ``x0 = 0``; then ``g(T x) = g(x) - f(x)`` around the
    cycle. Exact for ``int``/``Fraction`` potentials. Raises
    ``NotACoboundary`` carrying the cycle sum when it is nonzero.
    """
    if not sys.is_single_cycle():
        raise ValueError("transfer-function solver needs T to be a single cycle")
    if len(f) != sys.n_points:
        raise ValueError("potential length does not match the system")
    exact = _is_exact(f)
    total = sum(f, 0 * f[0])
    if (total != 0) if exact else (abs(total) > tol):
        raise NotACoboundary(total)
    g = [None] * sys.n_points
    x = 0
    g[x] = 0 * f[0]
    for _ in range(sys.n_points - 1):
        g[sys.T[x]] = g[x] - f[x]
        x = sys.T[x]
    return g


# ---------------------------------------------------------------------------
# growth of Birkhoff cocycles

@dataclass
class GrowthClassification:
    verdict: str
    sup_norm_by_window: list[tuple[int, float]]
    slope_estimate: float
    fit_rel_error: float = math.nan
    stall_increase: float = math.nan

    def __post_init__(self):
        sups = [s for _, s in self.sup_norm_by_window]
        if any(b < a for a, b in zip(sups, sups[1:])):
            raise AssertionError("sup norms must be non-decreasing in K")


def birkhoff_fiber_values(sys: TransformationSystem, f: Sequence, triples, witnesses) -> list:
    """``c_f`` on the given arrows via trajectory prefix sums (exact when ``f`` is)."""
    if not triples:
        return []
    length = max(max(w) for w in witnesses) + 1
    P = sys.trajectories(length)
    zero = 0 * f[0]
    cache: dict[int, list] = {}

    def prefix(x):
        row = cache.get(x)
        if row is None:
            row = [zero]
            acc = zero
            for m in range(length):
                acc = acc + f[int(P[x, m])]
                row.append(acc)
            cache[x] = row
        return row

    return [prefix(x)[m] - prefix(y)[n] for (x, _, y), (m, n) in zip(triples, witnesses)]


def classify_growth(K_list: Sequence[int], sups: Sequence[float], stall_eps: float = STALL_EPS,
                    slope_eps: float = SLOPE_EPS, fit_rtol: float = FIT_RTOL) -> GrowthClassification:
    """``bounded`` if the sup stalls over the last half of the windows,
    ``linear_growth`` if a line fits within ``fit_rtol`` with positive slope."""
    K = np.asarray(K_list, dtype=float)
    s = np.asarray(sups, dtype=float)
    pairs = [(int(k), float(v)) for k, v in zip(K_list, sups)]
    if len(K) == 0:
        return GrowthClassification("inconclusive", pairs, math.nan)
    if len(K) >= 2:
        slope, icpt = np.polyfit(K, s, 1)
        peak = float(np.max(np.abs(s)))
        rel = float(np.max(np.abs(s - (slope * K + icpt)))) / peak if peak > 0 else 0.0
    else:
        slope, rel = math.nan, math.nan
    mid, last = s[(len(s) - 1) // 2], s[-1]
    if len(K) < 2:
        increase = math.inf
    elif last == mid:
        increase = 0.0
    else:
        increase = float((last - mid) / abs(mid)) if mid != 0 else math.inf
    if increase < stall_eps:
        verdict = "bounded"
    elif rel < fit_rtol and slope > slope_eps:
        verdict = "linear_growth"
    else:
        verdict = "inconclusive"
    return GrowthClassification(verdict, pairs, float(slope), rel, increase)


def _sorted_windows(K_list):
    K_list = [int(k) for k in K_list]
    if any(b <= a for a, b in zip(K_list, K_list[1:])) or (K_list and K_list[0] < 0):
        raise ValueError("K_list must be increasing and non-negative")
    return K_list


def _window_sups(K_list, triples, vals):
    ks = np.array([abs(t[1]) for t in triples])
    absvals = [abs(v) for v in vals]
    out = []
    for K in K_list:
        inside = [v for v, k in zip(absvals, ks) if k <= K]
        out.append(float(max(inside)) if inside else 0.0)
    return out


def boundedness_probe(sys: TransformationSystem, f: Sequence, x: int, K_list: Sequence[int],
                      side: str = "source", **thresholds) -> GrowthClassification:
    """Classify ``K -> sup |c_f|`` over the fiber at ``x`` of the windowed G(X, T)."""
    K_list = _sorted_windows(K_list)
    if not K_list:
        return classify_growth([], [])
    triples, wits = transformation_fiber(sys, K_list[-1], x, side)
    vals = birkhoff_fiber_values(sys, f, triples, wits)
    return classify_growth(K_list, _window_sups(K_list, triples, vals), **thresholds)


def global_growth(sys: TransformationSystem, f: Sequence, K_list: Sequence[int],
                  units: Sequence[int] | None = None, **thresholds) -> GrowthClassification:
    """Same as ``boundedness_probe`` but with the sup over all arrows (of the given units' fibers)."""
    K_list = _sorted_windows(K_list)
    units = range(sys.n_points) if units is None else units
    best = [0.0] * len(K_list)
    for x in units:
        triples, wits = transformation_fiber(sys, K_list[-1], x, "source")
        vals = birkhoff_fiber_values(sys, f, triples, wits)
        best = [max(a, b) for a, b in zip(best, _window_sups(K_list, triples, vals))]
    return classify_growth(K_list, best, **thresholds)


# ---------------------------------------------------------------------------
# fiberwise convex hulls of affine orbits

@dataclass
class OrbitHull:
    points: dict[int, np.ndarray]   # unit -> (p, d) generators of the fiber hull


def affine_orbit(g: FiniteGroupoid, L: IsometricAction, c: Cocycle, seed: BundleVector) -> OrbitHull:
    """``{a . u : s(a) = seed.unit}`` grouped by range fiber."""
    x0, u = seed.unit, np.asarray(seed.coords)
    groups: dict[int, list] = {}
    for a in g.source_fibers[x0].tolist():
        groups.setdefault(g.rng[a], []).append(L[a] @ u + c[a])
    return OrbitHull({y: _dedupe(np.stack(v)) for y, v in sorted(groups.items())})


def _dedupe(P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    keep = []
    for p in P:
        if all(np.linalg.norm(p - q) > tol for q in keep):
            keep.append(p)
    return np.stack(keep)


def _real(P):
    P = np.asarray(P)
    return np.concatenate([P.real, P.imag], axis=-1) if np.iscomplexobj(P) else P.astype(float)


def hull_distance(V: np.ndarray, p: np.ndarray) -> float:
    """Euclidean distance from ``p`` to the convex hull of the rows of ``V``.

    Nearest vertex first; otherwise a nonnegative least-squares fit with a
    heavily weighted sum-to-one row, renormalized onto the simplex (this
    can only overestimate the distance).
    """
    V, p = _real(V), _real(p)
    near = float(np.min(np.linalg.norm(V - p, axis=1)))
    if len(V) == 1 or near == 0.0:
        return near
    w = 1e4 * (1.0 + float(np.max(np.abs(V))) + float(np.max(np.abs(p))))
    A = np.vstack([V.T, w * np.ones(len(V))])
    b = np.concatenate([p, [w]])
    lam, _ = nnls(A, b, maxiter=50 * len(V))
    if lam.sum() <= 0:
        return near
    lam /= lam.sum()
    return min(near, float(np.linalg.norm(V.T @ lam - p)))


def orbit_hull_invariance_check(g: FiniteGroupoid, L: IsometricAction, c: Cocycle,
                                seed: BundleVector, tol: float = 1e-9,
                                strict: bool = False) -> float:
    """Max distance from an arrow's image of a source-fiber hull generator to the target hull.

    For a cocycle the orbit is permuted by every arrow, so the fiberwise
    convex hull is invariant and the result is roundoff. With
    ``strict=True`` a failing cocycle identity raises ``CocycleDefect``.
    """
    if strict:
        defect = check_cocycle(g, L, c)
        if defect > tol:
            raise CocycleDefect(defect, tol)
    hull = affine_orbit(g, L, c, seed)
    worst = 0.0
    for a in range(g.n_arrows):
        s, r = g.src[a], g.rng[a]
        if s not in hull.points:
            continue
        target = hull.points.get(r)
        images = hull.points[s] @ L[a].T + c[a]
        if target is None:
            worst = max(worst, math.inf)
            continue
        for p in images:
            worst = max(worst, hull_distance(target, p))
    return worst


# ---------------------------------------------------------------------------
# uniform convexity and modulus of continuity

def uniform_convexity_delta(eps: float) -> float:
    """Hilbert-space modulus ``1 - sqrt(1 - eps^2 / 4)`` for ``eps`` in [0, 2]."""
    if not 0.0 <= eps <= 2.0:
        if -1e-12 <= eps < 0.0 or 2.0 < eps <= 2.0 + 1e-12:
            eps = min(max(eps, 0.0), 2.0)
        else:
            raise DomainError(f"eps must lie in [0, 2], got {eps}")
    return 1.0 - math.sqrt(max(0.0, 1.0 - eps * eps / 4.0))


def midpoint_check(u1, u2, atol: float = 1e-12) -> bool:
    """``||(u1 + u2) / 2|| <= 1 - delta(||u1 - u2||)`` for ``u1, u2`` in the unit ball."""
    u1, u2 = np.asarray(u1), np.asarray(u2)
    if np.linalg.norm(u1) > 1 + atol or np.linalg.norm(u2) > 1 + atol:
        raise DomainError("midpoint_check needs vectors in the closed unit ball")
    bound = 1.0 - uniform_convexity_delta(float(np.linalg.norm(u1 - u2)))
    return bool(np.linalg.norm((u1 + u2) / 2) <= bound + atol)


@dataclass(frozen=True)
class Metric:
    """Path metric on the units from a weighted neighbor graph."""

    n_units: int
    edges: tuple[tuple[int, int, float], ...]

    def distances(self) -> np.ndarray:
        if not self.edges:
            D = np.full((self.n_units, self.n_units), np.inf)
            np.fill_diagonal(D, 0.0)
            return D
        u, v, w = zip(*self.edges)
        G = coo_matrix((w, (u, v)), shape=(self.n_units, self.n_units))
        return shortest_path(G.tocsr(), directed=False)


def modulus_of_continuity_estimate(f: Section, r: float, metric: Metric | None) -> dict[int, float]:
    """``max_{d(x, y) <= r} ||f(y) - f(x)||`` per unit (constant bundle)."""
    if metric is None:
        raise NoMetric("the scenario declares no metric on the units")
    D = metric.distances()
    slack = r * 1e-12
    out = {}
    for x in range(metric.n_units):
        near = np.flatnonzero(D[x] <= r + slack)
        out[x] = max(float(np.linalg.norm(f[y] - f[x])) for y in near.tolist())
    return out
