"""Hilbert bundles over a finite unit space, isometric actions and cocycles.

Vectors in the fiber over ``x`` are 1-D numpy arrays of length ``dims[x]``
(real or complex). An action stores one matrix ``L(a)`` of shape
``dims[rng[a]] x dims[src[a]]`` per arrow, a cocycle one vector in
``E_{rng[a]}`` per arrow.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .groupoid import FiniteGroupoid, TransformationSystem, ValidationReport, WindowedTG, orbits

__all__ = [
    "ShapeMismatch",
    "FiberMismatch",
    "BadWitness",
    "HilbertBundle",
    "BundleVector",
    "Section",
    "IsometricAction",
    "Cocycle",
    "CocycleCheck",
    "trivial_action",
    "complete_action",
    "validate_action",
    "check_cocycle",
    "cocycle_defects",
    "coboundary",
    "affine_apply",
    "involution_W",
    "birkhoff_cocycle",
    "birkhoff_cocycle_on",
    "witness_discrepancy",
    "psi",
    "check_cnd",
    "random_isometry",
    "random_section",
    "zero_cocycle",
]


class ShapeMismatch(ValueError):
    pass


class FiberMismatch(ValueError):
    pass


class BadWitness(ValueError):
    pass


@dataclass(frozen=True)
class HilbertBundle:
    dims: tuple[int, ...]
    field: str = "real"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.field not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        if any(d < 0 for d in self.dims):
            raise ValueError("fiber dimensions must be >= 0")

    @classmethod
    def constant(cls, n_units: int, dim: int, field: str = "real") -> "HilbertBundle":
        return cls((dim,) * n_units, field)

    @property
    def dtype(self):
        return np.complex128 if self.field == "complex" else np.float64

    @property
    def n_units(self) -> int:
        return len(self.dims)

    def zero(self, x: int) -> np.ndarray:
        return np.zeros(self.dims[x], dtype=self.dtype)


@dataclass(frozen=True)
class BundleVector:
    unit: int
    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class Section:
    values: tuple[np.ndarray, ...]

    def __getitem__(self, x) -> np.ndarray:
        return self.values[x]

    def __len__(self):
        return len(self.values)

    def at(self, x: int) -> BundleVector:
        return BundleVector(x, self.values[x])


@dataclass(frozen=True, eq=False)
class IsometricAction:
    mats: tuple[np.ndarray, ...]

    def __getitem__(self, a) -> np.ndarray:
        return self.mats[a]


@dataclass(frozen=True, eq=False)
class Cocycle:
    values: tuple[np.ndarray, ...]

    def __getitem__(self, a) -> np.ndarray:
        return self.values[a]

    def __len__(self):
        return len(self.values)

    def norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(v) for v in self.values])


def trivial_action(g: FiniteGroupoid, bundle: HilbertBundle) -> IsometricAction:
    """``L(a) = I``; only meaningful when dims are constant on orbits."""
    return IsometricAction(tuple(
        np.eye(bundle.dims[r], bundle.dims[s], dtype=bundle.dtype) for s, r in zip(g.src, g.rng)
    ))


def complete_action(g: FiniteGroupoid, bundle: HilbertBundle,
                    generators: dict[int, np.ndarray]) -> IsometricAction:
    """Extend matrices given on a generating set of arrows to the whole groupoid.

    Uses ``L(unit) = I``, ``L(a^-1) = L(a)^*`` and ``L(ab) = L(a)L(b)``.
    Inconsistent relations are not detected here; run ``validate_action``.
    Raises ``ValueError`` if the generators do not generate every arrow.
    """
    mats: list[np.ndarray | None] = [None] * g.n_arrows
    queue = deque()
    remaining = [g.n_arrows]

    def assign(a, M):
        if mats[a] is None:
            mats[a] = np.asarray(M, dtype=bundle.dtype)
            queue.append(a)
            remaining[0] -= 1

    for u in g.unit_arrow:
        assign(u, np.eye(bundle.dims[g.src[u]], dtype=bundle.dtype))
    for a, M in sorted(generators.items()):
        assign(a, M)
    by_rng = g.range_fibers
    by_src = g.source_fibers
    while queue and remaining[0]:
        a = queue.popleft()
        ai = g.inverse[a]
        assign(ai, mats[a].conj().T)
        # a o b for b already known, and b o a for b already known
        for b in by_rng[g.src[a]].tolist():
            if mats[b] is not None:
                c = g.compose.get((a, b))
                if c is not None:
                    assign(c, mats[a] @ mats[b])
        for b in by_src[g.rng[a]].tolist():
            if mats[b] is not None:
                c = g.compose.get((b, a))
                if c is not None:
                    assign(c, mats[b] @ mats[a])
    missing = [a for a, M in enumerate(mats) if M is None]
    if missing:
        raise ValueError(f"generators do not reach arrows {missing[:10]}")
    return IsometricAction(tuple(mats))


def validate_action(g: FiniteGroupoid, e: HilbertBundle, L: IsometricAction,
                    tol: float = 1e-9) -> ValidationReport:
    """Isometry, unit, functoriality and inverse axioms, in operator norm."""
    if len(L.mats) != g.n_arrows:
        raise ShapeMismatch(f"{len(L.mats)} matrices for {g.n_arrows} arrows")
    if len(e.dims) != g.n_units:
        raise ShapeMismatch(f"bundle has {len(e.dims)} fibers for {g.n_units} units")
    for a, M in enumerate(L.mats):
        want = (e.dims[g.rng[a]], e.dims[g.src[a]])
        if M.shape != want:
            raise ShapeMismatch(f"arrow {a}: matrix shape {M.shape}, fibers need {want}")

    rep = ValidationReport()
    for block in orbits(g):
        ds = {e.dims[x] for x in block}
        if len(ds) > 1:
            rep.add("orbit_dimension", tuple(block), f"fiber dims {sorted(ds)} on one orbit")
    if not rep.ok:
        return rep

    mats = L.mats
    square = [M.shape[0] == M.shape[1] for M in mats]
    iso = _batched(mats, lambda S: np.abs(np.linalg.svd(S, compute_uv=False) - 1.0).max(axis=-1))
    for a in range(g.n_arrows):
        if not square[a] or iso[a] > tol:
            rep.add("isometry", (a,), f"max |singular value - 1| = {iso[a]:.3g}", iso[a])
    units = list(g.unit_arrow)
    errs = _batched([mats[u] - np.eye(e.dims[x]) for x, u in enumerate(units)], _opnorm)
    for x, u in enumerate(units):
        if errs[x] > tol:
            rep.add("unit", (u,), f"||L(unit) - I|| = {errs[x]:.3g}", errs[x])
    inv = g.inverse
    errs = _batched([mats[inv[a]] - mats[a].conj().T for a in range(g.n_arrows)], _opnorm)
    for a in np.flatnonzero(errs > tol).tolist():
        rep.add("inverse", (a, inv[a]), f"||L(a^-1) - L(a)*|| = {errs[a]:.3g}", errs[a])

    A, B, C = g.composition_table
    errs = _functoriality_errors(L, A, B, C)
    for k in np.flatnonzero(errs > tol)[:200].tolist():
        rep.add("functoriality", (int(A[k]), int(B[k]), int(C[k])),
                f"||L(ab) - L(a)L(b)|| = {errs[k]:.3g}", errs[k])
    return rep


def _opnorm(S: np.ndarray) -> np.ndarray:
    return np.linalg.svd(S, compute_uv=False).max(axis=-1)


def _batched(mats, fn) -> np.ndarray:
    """Apply a stacked-matrix reduction, grouping matrices by shape."""
    out = np.zeros(len(mats))
    groups: dict[tuple, list[int]] = {}
    for i, M in enumerate(mats):
        groups.setdefault(M.shape, []).append(i)
    for shape, idx in groups.items():
        if 0 in shape:
            continue
        out[idx] = fn(np.stack([mats[i] for i in idx]))
    return out


def _functoriality_errors(L, A, B, C) -> np.ndarray:
    if len(A) == 0:
        return np.zeros(0)
    shapes = {M.shape for M in L.mats}
    if len(shapes) == 1:
        stack = np.stack(L.mats)
        diff = stack[C] - stack[A] @ stack[B]
        if diff.shape[-1] == 0 or diff.shape[-2] == 0:
            return np.zeros(len(A))
        return np.linalg.norm(diff, 2, axis=(1, 2))
    out = np.empty(len(A))
    for k, (a, b, c) in enumerate(zip(A.tolist(), B.tolist(), C.tolist())):
        D = L.mats[c] - L.mats[a] @ L.mats[b]
        out[k] = np.linalg.norm(D, 2) if D.size else 0.0
    return out


@dataclass(frozen=True)
class CocycleCheck:
    max_defect: float
    worst_pair: tuple[int, int] | None
    unit_defect: float
    inverse_defect: float
    pairs_checked: int

    def __float__(self):
        return self.max_defect


def cocycle_defects(g: FiniteGroupoid, L: IsometricAction, c: Cocycle) -> CocycleCheck:
    """Cocycle identity defect plus the derived unit and inverse identities."""
    if len(c.values) != g.n_arrows:
        raise ShapeMismatch(f"cocycle has {len(c.values)} values for {g.n_arrows} arrows")
    A, B, C = g.composition_table
    errs = _pair_defects(L, c, A, B, C)
    if len(errs):
        k = int(np.argmax(errs))
        worst, top = (int(A[k]), int(B[k])), float(errs[k])
    else:
        worst, top = None, 0.0
    unit = max((float(np.linalg.norm(c.values[u])) for u in g.unit_arrow), default=0.0)
    inv = 0.0
    for a in range(g.n_arrows):
        ai = g.inverse[a]
        inv = max(inv, float(np.linalg.norm(c.values[ai] + L.mats[ai] @ c.values[a])))
    return CocycleCheck(top, worst, unit, inv, len(A))


def check_cocycle(g: FiniteGroupoid, L: IsometricAction, c: Cocycle, tol: float = 1e-9) -> float:
    """Max over composable pairs of ``||c(ab) - c(a) - L(a) c(b)||``."""
    return cocycle_defects(g, L, c).max_defect


def _pair_defects(L, c, A, B, C) -> np.ndarray:
    if len(A) == 0:
        return np.zeros(0)
    if len({v.shape for v in c.values}) == 1 and len({M.shape for M in L.mats}) == 1:
        V = np.stack(c.values)
        M = np.stack(L.mats)
        diff = V[C] - V[A] - np.einsum("kij,kj->ki", M[A], V[B])
        return np.linalg.norm(diff, axis=1)
    return np.array([
        np.linalg.norm(c.values[k] - c.values[a] - L.mats[a] @ c.values[b])
        for a, b, k in zip(A.tolist(), B.tolist(), C.tolist())
    ])


def coboundary(g: FiniteGroupoid, L: IsometricAction, f: Section) -> Cocycle:
    """``a -> f(r(a)) - L(a) f(s(a))``."""
    return Cocycle(tuple(
        np.asarray(f[r] - L.mats[a] @ f[s]) for a, (s, r) in enumerate(zip(g.src, g.rng))
    ))


def zero_cocycle(g: FiniteGroupoid, bundle: HilbertBundle) -> Cocycle:
    return Cocycle(tuple(bundle.zero(r) for r in g.rng))


def affine_apply(g: FiniteGroupoid, a: int, u: BundleVector, L: IsometricAction,
                 c: Cocycle) -> BundleVector:
    """``a . u = L(a) u + c(a)``, landing in the fiber over ``r(a)``."""
    if u.unit != g.src[a]:
        raise FiberMismatch(f"vector lives over {u.unit}, arrow {a} starts at {g.src[a]}")
    return BundleVector(g.rng[a], L.mats[a] @ u.coords + c.values[a])


def involution_W(g: FiniteGroupoid, a: int, u: BundleVector, L: IsometricAction,
                 c: Cocycle) -> tuple[int, BundleVector]:
    """``(a, u) -> (a^-1, a . u)``."""
    return g.inverse[a], affine_apply(g, a, u, L, c)


# ---------------------------------------------------------------------------
# Birkhoff cocycles on G(X, T)

def _birkhoff_sum(T: Sequence[int], f: Sequence, x: int, m: int):
    total = 0 * f[0] if len(f) else 0
    for _ in range(m):
        total = total + f[x]
        x = T[x]
    return total


def birkhoff_cocycle(wtg: WindowedTG | TransformationSystem, f: Sequence, triple,
                     witness: tuple[int, int] | None = None):
    """``sum_{i<m} f(T^i x) - sum_{j<n} f(T^j y)`` for the arrow ``(x, k, y)``.

    Exact for ``Fraction``/``int`` potentials. Without an explicit witness
    the recorded one is used.
    """
    system = wtg.system if isinstance(wtg, WindowedTG) else wtg
    x, k, y = triple
    if witness is None:
        if not isinstance(wtg, WindowedTG):
            raise BadWitness("no witness given and no recorded witness available")
        witness = wtg.witnesses[wtg.index[tuple(triple)]]
    m, n = witness
    if m - n != k or m < 0 or n < 0:
        raise BadWitness(f"witness {witness} does not match k={k}")
    T = system.T
    xm, yn = x, y
    for _ in range(m):
        xm = T[xm]
    for _ in range(n):
        yn = T[yn]
    if xm != yn:
        raise BadWitness(f"T^{m}({x}) = {xm} but T^{n}({y}) = {yn}")
    return _birkhoff_sum(T, f, x, m) - _birkhoff_sum(T, f, y, n)


def witness_discrepancy(wtg: WindowedTG, f: Sequence, triple) -> float:
    """Spread of ``birkhoff_cocycle`` over every witness with ``m, n <= m_max``."""
    from .groupoid import iter_witnesses

    vals = [birkhoff_cocycle(wtg.system, f, triple, w)
            for w in iter_witnesses(wtg.system, triple, wtg.m_max)]
    if not vals:
        raise BadWitness(f"{triple} has no witness within m_max={wtg.m_max}")
    return float(max(vals) - min(vals))


def birkhoff_cocycle_on(wtg: WindowedTG, f: Sequence, *, exact: bool = False) -> Cocycle:
    """The scalar cocycle ``c_f`` on every windowed arrow, as 1-dim fiber vectors.

    Uses prefix sums along trajectories, so the cost is linear in the
    number of arrows.
    """
    system = wtg.system
    length = max((max(w) for w in wtg.witnesses), default=0) + 1
    P = system.trajectories(length)
    zero = 0 * f[0] if len(f) else 0
    prefix = [[zero] * (length + 1) for _ in range(system.n_points)]
    for x in range(system.n_points):
        acc = zero
        row = prefix[x]
        for m in range(length):
            row[m] = acc
            acc = acc + f[int(P[x, m])]
        row[length] = acc
    vals = [prefix[x][m] - prefix[y][n] for (x, _, y), (m, n) in zip(wtg.triples, wtg.witnesses)]
    if exact:
        return Cocycle(tuple(np.array([v], dtype=object) for v in vals))
    return Cocycle(tuple(np.array([float(v)]) for v in vals))


# ---------------------------------------------------------------------------
# psi = ||c||^2 and its conditionally-negative-type check

def psi(c: Cocycle, a: int) -> float:
    return float(np.vdot(c.values[a], c.values[a]).real)


def check_cnd(g: FiniteGroupoid, c: Cocycle, x: int, tol: float = 1e-10,
              psi_fn: Callable[[int], float] | None = None) -> float:
    """Largest eigenvalue of ``K_ij = psi(a_i^-1 a_j)`` on zero-sum vectors.

    ``a_i`` runs over the arrows with range ``x``. A conditionally negative
    type function gives a value ``<= 0`` (returned as 0). The groupoid
    reading of the condition (per range fiber) is an interpretation.
    """
    if psi_fn is None:
        psi_fn = lambda a: psi(c, a)  # noqa: E731
    arrows = g.range_fibers[x].tolist()
    p = len(arrows)
    if p < 2:
        return 0.0
    K = np.empty((p, p))
    for i, ai in enumerate(arrows):
        inv = g.inverse[ai]
        for j, aj in enumerate(arrows):
            K[i, j] = psi_fn(g.compose[(inv, aj)])
    # orthonormal basis of the zero-sum subspace
    Q = np.linalg.qr(np.column_stack([np.ones(p), np.eye(p)[:, : p - 1]]))[0][:, 1:]
    top = np.linalg.eigvalsh(Q.T @ ((K + K.T) / 2) @ Q).max()
    return max(float(top), 0.0)


# ---------------------------------------------------------------------------
# random data

def random_isometry(d: int, rng: np.random.Generator, field: str = "real") -> np.ndarray:
    """Haar-distributed orthogonal (or unitary) ``d x d`` matrix via QR."""
    if d == 0:
        return np.zeros((0, 0), dtype=np.complex128 if field == "complex" else np.float64)
    Z = rng.standard_normal((d, d))
    if field == "complex":
        Z = (Z + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diagonal(R) / np.abs(np.diagonal(R))
    return Q * ph


def random_section(bundle: HilbertBundle, rng: np.random.Generator, scale: float = 1.0) -> Section:
    vals = []
    for d in bundle.dims:
        v = rng.standard_normal(d) * scale
        if bundle.field == "complex":
            v = v + 1j * rng.standard_normal(d) * scale
        vals.append(v)
    return Section(tuple(vals))


def windowed_bundle(wtg: WindowedTG) -> tuple[FiniteGroupoid, HilbertBundle, IsometricAction]:
    """Groupoid, 1-dim constant bundle and trivial action for scalar Birkhoff cocycles."""
    g = wtg.groupoid
    e = HilbertBundle.constant(g.n_units, 1)
    return g, e, trivial_action(g, e)
