"""Finite groupoids, orbits, and windowed transformation groupoids G(X, T).

Arrows are integer ids ``0..n_arrows-1``. An arrow ``a`` goes from
``src[a]`` to ``rng[a]`` and ``compose[(a, b)]`` is ``a o b`` (defined
when ``src[a] == rng[b]``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Arrow",
    "FiniteGroupoid",
    "TransformationSystem",
    "Violation",
    "ValidationReport",
    "WindowedTG",
    "build_transformation_groupoid",
    "transformation_fiber",
    "validate_groupoid",
    "orbits",
    "is_minimal",
    "fiber",
    "group_groupoid",
    "cyclic_group",
    "pair_groupoid",
    "pair_group_groupoid",
    "units_only",
    "disjoint_union",
]


class Arrow(NamedTuple):
    id: int
    src: int
    rng: int


class Violation(NamedTuple):
    kind: str
    arrows: tuple
    detail: str = ""
    value: float = 0.0


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def add(self, kind, arrows=(), detail="", value=0.0):
        self.violations.append(Violation(kind, tuple(arrows), detail, float(value)))

    def extend(self, other: "ValidationReport"):
        self.violations.extend(other.violations)
        self.flags.update(other.flags)

    def __str__(self):
        if self.ok:
            return "valid"
        lines = [f"{len(self.violations)} violation(s):"]
        for v in self.violations[:50]:
            lines.append(f"  {v.kind} arrows={list(v.arrows)} {v.detail}".rstrip())
        if len(self.violations) > 50:
            lines.append(f"  ... {len(self.violations) - 50} more")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    """A finite groupoid given by explicit tables.

    ``window`` is set for truncations of an infinite groupoid: composable
    pairs missing from ``compose`` are then out-of-window, not defects.
    ``labels`` optionally names each arrow (e.g. ``(x, k, y)`` triples).
    """

    n_units: int
    src: tuple[int, ...]
    rng: tuple[int, ...]
    inverse: tuple[int, ...]
    unit_arrow: tuple[int, ...]
    compose: Mapping[tuple[int, int], int]
    window: int | None = None
    labels: tuple | None = None

    @property
    def n_arrows(self) -> int:
        return len(self.src)

    def arrow(self, a: int) -> Arrow:
        return Arrow(a, self.src[a], self.rng[a])

    @property
    def arrows(self) -> list[Arrow]:
        return [self.arrow(a) for a in range(self.n_arrows)]

    def is_unit(self, a: int) -> bool:
        return self.unit_arrow[self.src[a]] == a

    @cached_property
    def range_fibers(self) -> tuple[np.ndarray, ...]:
        r = np.asarray(self.rng, dtype=np.int64)
        return tuple(np.flatnonzero(r == x) for x in range(self.n_units))

    @cached_property
    def source_fibers(self) -> tuple[np.ndarray, ...]:
        s = np.asarray(self.src, dtype=np.int64)
        return tuple(np.flatnonzero(s == x) for x in range(self.n_units))

    @cached_property
    def composable_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """All pairs ``(a, b)`` with ``src[a] == rng[b]``, as index arrays."""
        fibers = self.range_fibers
        left = [np.full(len(fibers[s]), a, dtype=np.int64) for a, s in enumerate(self.src)]
        right = [fibers[s] for s in self.src]
        if not left:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate(left), np.concatenate(right).astype(np.int64)

    @cached_property
    def composition_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Defined compositions ``(a, b, a o b)`` over composable pairs only."""
        a, b = self.composable_pairs
        c = np.array([self.compose.get((i, j), -1) for i, j in zip(a.tolist(), b.tolist())],
                     dtype=np.int64)
        keep = c >= 0
        return a[keep], b[keep], c[keep]


def validate_groupoid(g: FiniteGroupoid) -> ValidationReport:
    """Check every groupoid axiom; violations are returned, never raised."""
    rep = ValidationReport()
    n, m = g.n_units, g.n_arrows

    if not (len(g.rng) == len(g.inverse) == m and len(g.unit_arrow) == n):
        rep.add("structure", (), "table lengths disagree")
        return rep
    bad = [a for a in range(m)
           if not (0 <= g.src[a] < n and 0 <= g.rng[a] < n and 0 <= g.inverse[a] < m)]
    bad += [u for u in g.unit_arrow if not 0 <= u < m]
    for (a, b), c in g.compose.items():
        if not (0 <= a < m and 0 <= b < m and 0 <= c < m):
            bad.append((a, b, c))
    if bad:
        rep.add("structure", tuple(bad[:10]), "ids out of range")
        return rep

    for x, u in enumerate(g.unit_arrow):
        if g.src[u] != x or g.rng[u] != x:
            rep.add("unit_endpoints", (u,), f"unit arrow of {x} is {g.src[u]}->{g.rng[u]}")

    for (a, b), c in g.compose.items():
        if g.src[a] != g.rng[b]:
            rep.add("compose_not_composable", (a, b), f"defined as {c}")
        elif g.rng[c] != g.rng[a] or g.src[c] != g.src[b]:
            rep.add("compose_endpoints", (a, b, c))

    pa, pb = g.composable_pairs
    missing = [(i, j) for i, j in zip(pa.tolist(), pb.tolist()) if (i, j) not in g.compose]
    if g.window is None:
        for i, j in missing:
            rep.add("compose_missing", (i, j))
    else:
        out = 0
        for i, j in missing:
            k = g.labels[i][1] + g.labels[j][1] if g.labels else None
            if k is not None and abs(k) <= g.window:
                rep.add("window_incomplete", (i, j), f"composite k={k} should be in window")
            else:
                out += 1
        rep.flags["out_of_window_pairs"] = out

    for a in range(m):
        ai = g.inverse[a]
        if g.inverse[ai] != a:
            rep.add("inverse_not_involution", (a, ai))
        if g.src[ai] != g.rng[a] or g.rng[ai] != g.src[a]:
            rep.add("inverse_endpoints", (a, ai))
            continue
        left = g.compose.get((a, ai))
        if left is not None and left != g.unit_arrow[g.rng[a]]:
            rep.add("inverse_right", (a, ai), f"a o a^-1 = {left} != unit {g.unit_arrow[g.rng[a]]}")
        right = g.compose.get((ai, a))
        if right is not None and right != g.unit_arrow[g.src[a]]:
            rep.add("inverse_left", (ai, a), f"a^-1 o a = {right} != unit {g.unit_arrow[g.src[a]]}")
        for side, key in (("unit_left", (g.unit_arrow[g.rng[a]], a)),
                          ("unit_right", (a, g.unit_arrow[g.src[a]]))):
            v = g.compose.get(key)
            if v is not None and v != a:
                rep.add(side, key, f"gives {v}")

    rep.extend(_check_associativity(g))
    return rep


def _check_associativity(g: FiniteGroupoid) -> ValidationReport:
    rep = ValidationReport()
    a, b, ab = g.composition_table
    if len(a) == 0:
        return rep
    m = g.n_arrows
    # dense lookup only when small enough; fall back to the dict otherwise
    if m <= 2048:
        table = np.full((m, m), -1, dtype=np.int64)
        table[a, b] = ab
        lookup = lambda i, j: table[i, j]  # noqa: E731
    else:
        lookup = np.vectorize(lambda i, j: g.compose.get((int(i), int(j)), -1), otypes=[np.int64])

    fibers = g.range_fibers
    src = np.asarray(g.src, dtype=np.int64)
    counts = np.array([len(fibers[s]) for s in src[b]], dtype=np.int64)
    if counts.sum() == 0:
        return rep
    ta = np.repeat(a, counts)
    tb = np.repeat(b, counts)
    tab = np.repeat(ab, counts)
    tc = np.concatenate([fibers[s] for s in src[b]]).astype(np.int64)
    bc = lookup(tb, tc)
    ok = bc >= 0
    lhs = lookup(tab[ok], tc[ok])
    rhs = lookup(ta[ok], bc[ok])
    both = (lhs >= 0) & (rhs >= 0)
    bad = np.flatnonzero(both & (lhs != rhs))
    ta, tb, tc = ta[ok], tb[ok], tc[ok]
    for k in bad[:100].tolist():
        rep.add("associativity", (int(ta[k]), int(tb[k]), int(tc[k])),
                f"(ab)c={int(lhs[k])} a(bc)={int(rhs[k])}")
    return rep


def orbits(g) -> list[list[int]]:
    """Partition of the units into orbits (connected components)."""
    parent = list(range(g.n_units))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, r in zip(g.src, g.rng):
        a, b = find(s), find(r)
        if a != b:
            parent[max(a, b)] = min(a, b)
    blocks: dict[int, list[int]] = {}
    for x in range(g.n_units):
        blocks.setdefault(find(x), []).append(x)
    return sorted(blocks.values())


def is_minimal(g) -> bool:
    """Minimal for a finite discrete unit space means transitive."""
    return len(orbits(g)) == 1


def fiber(g, x: int, side: str = "source") -> list[int]:
    """Arrows with source ``x`` (``side="source"``) or range ``x``."""
    if isinstance(g, WindowedTG):
        g = g.groupoid
    if side == "source":
        return g.source_fibers[x].tolist()
    if side == "range":
        return g.range_fibers[x].tolist()
    raise ValueError(f"side must be 'source' or 'range', got {side!r}")


# ---------------------------------------------------------------------------
# constructors

def _from_labels(n_units, labels, src, rng, inverse_of, compose_of, window=None):
    index = {lab: i for i, lab in enumerate(labels)}
    inverse = tuple(index[inverse_of(lab)] for lab in labels)
    units = [None] * n_units
    for i, lab in enumerate(labels):
        if src[i] == rng[i] and compose_of(lab, lab) == lab:
            units[src[i]] = i
    compose = {}
    by_rng: dict[int, list[int]] = {}
    for i, r in enumerate(rng):
        by_rng.setdefault(r, []).append(i)
    for i, lab in enumerate(labels):
        for j in by_rng.get(src[i], ()):
            out = compose_of(lab, labels[j])
            k = index.get(out)
            if k is not None:
                compose[(i, j)] = k
    return FiniteGroupoid(n_units, tuple(src), tuple(rng), inverse, tuple(units), compose,
                          window=window, labels=tuple(labels))


def group_groupoid(table: Sequence[Sequence[int]], identity: int = 0) -> FiniteGroupoid:
    """A group (multiplication table ``table[a][b] = ab``) as a one-unit groupoid."""
    n = len(table)
    inverse = tuple(next(b for b in range(n) if table[a][b] == identity) for a in range(n))
    compose = {(a, b): table[a][b] for a in range(n) for b in range(n)}
    return FiniteGroupoid(1, (0,) * n, (0,) * n, inverse, (identity,), compose,
                          labels=tuple(range(n)))


def cyclic_group(q: int) -> FiniteGroupoid:
    return group_groupoid([[(a + b) % q for b in range(q)] for a in range(q)])


def pair_group_groupoid(n: int, q: int = 1) -> FiniteGroupoid:
    """Transitive groupoid ``{(i, h, j)}``: pair groupoid on ``n`` units times Z/q.

    ``(i, h, j)`` goes from ``j`` to ``i``; ``(i, h, j)(j, h', k) = (i, h + h', k)``.
    """
    labels = [(i, h, j) for i in range(n) for h in range(q) for j in range(n)]
    return _from_labels(
        n, labels,
        src=[lab[2] for lab in labels],
        rng=[lab[0] for lab in labels],
        inverse_of=lambda t: (t[2], (-t[1]) % q, t[0]),
        compose_of=lambda s, t: (s[0], (s[1] + t[1]) % q, t[2]),
    )


def pair_groupoid(n: int) -> FiniteGroupoid:
    return pair_group_groupoid(n, 1)


def units_only(n: int) -> FiniteGroupoid:
    return FiniteGroupoid(n, tuple(range(n)), tuple(range(n)), tuple(range(n)),
                          tuple(range(n)), {(a, a): a for a in range(n)},
                          labels=tuple(range(n)))


def disjoint_union(g: FiniteGroupoid, h: FiniteGroupoid) -> FiniteGroupoid:
    ua, aa = g.n_units, g.n_arrows
    compose = dict(g.compose)
    compose.update({(a + aa, b + aa): c + aa for (a, b), c in h.compose.items()})
    return FiniteGroupoid(
        ua + h.n_units,
        g.src + tuple(s + ua for s in h.src),
        g.rng + tuple(r + ua for r in h.rng),
        g.inverse + tuple(i + aa for i in h.inverse),
        g.unit_arrow + tuple(u + aa for u in h.unit_arrow),
        compose,
    )


# ---------------------------------------------------------------------------
# transformation groupoids

@dataclass(frozen=True)
class TransformationSystem:
    """A self-map ``T`` of ``{0, ..., n_points - 1}``."""

    T: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "T", tuple(int(t) for t in self.T))
        n = len(self.T)
        if any(not 0 <= t < n for t in self.T):
            raise ValueError("T must map 0..n_points-1 into itself")

    @property
    def n_points(self) -> int:
        return len(self.T)

    @property
    def injective(self) -> bool:
        return len(set(self.T)) == len(self.T)

    def cycles(self) -> list[list[int]]:
        """The periodic cycles of ``T``, each listed in orbit order from its least point."""
        seen_cycle = set()
        out = []
        for x in range(self.n_points):
            z = x
            for _ in range(self.n_points):
                z = self.T[z]
            if z in seen_cycle:
                continue
            cyc = [z]
            w = self.T[z]
            while w != z:
                cyc.append(w)
                w = self.T[w]
            seen_cycle.update(cyc)
            start = cyc.index(min(cyc))
            out.append(cyc[start:] + cyc[:start])
        return sorted(out)

    def is_single_cycle(self) -> bool:
        return self.injective and len(self.cycles()) == 1

    def trajectories(self, length: int) -> np.ndarray:
        """``P[x, m] = T^m x`` for ``0 <= m < length``."""
        T = np.asarray(self.T, dtype=np.int64)
        P = np.empty((self.n_points, length), dtype=np.int64)
        P[:, 0] = np.arange(self.n_points)
        for m in range(1, length):
            P[:, m] = T[P[:, m - 1]]
        return P


@dataclass(frozen=True, eq=False)
class WindowedTG:
    """The arrows ``(x, k, y)`` of G(X, T) with ``|k| <= K``.

    ``x`` is the range and ``y`` the source. ``witnesses[i]`` is the
    minimal pair ``(m, n)`` with ``m - n = k`` and ``T^m x = T^n y``.
    """

    system: TransformationSystem
    K: int
    triples: tuple[tuple[int, int, int], ...]
    witnesses: tuple[tuple[int, int], ...]

    @property
    def m_max(self) -> int:
        return 2 * self.system.n_points + self.K

    @cached_property
    def index(self) -> dict:
        return {t: i for i, t in enumerate(self.triples)}

    @cached_property
    def groupoid(self) -> FiniteGroupoid:
        """Arrow tables; compositions leaving the window are left undefined."""
        labels = list(self.triples)
        return _from_labels(
            self.system.n_points, labels,
            src=[t[2] for t in labels],
            rng=[t[0] for t in labels],
            inverse_of=lambda t: (t[2], -t[1], t[0]),
            compose_of=lambda s, t: (s[0], s[1] + t[1], t[2]),
            window=self.K,
        )

    @property
    def flags(self) -> dict:
        return {"t_not_injective": not self.system.injective}


def _witness_scan(P: np.ndarray, N: int, K: int, ranges, sources):
    """Minimal witnesses for every ``(x, k, y)`` with x in ``ranges``, y in ``sources``.

    Witness sets for fixed k are closed under ``(m, n) -> (m + 1, n + 1)``,
    and two trajectories that ever meet have met by step ``N``, so scanning
    the smaller exponent over ``0..N`` is complete.
    """
    ranges = np.asarray(ranges, dtype=np.int64)
    sources = np.asarray(sources, dtype=np.int64)
    span = N + 1
    found = []
    for k in range(-K, K + 1):
        if k >= 0:
            left = P[ranges][:, k:k + span]           # T^(n+k) x
            right = P[sources][:, 0:span]             # T^n y
        else:
            left = P[ranges][:, 0:span]               # T^m x
            right = P[sources][:, -k:-k + span]       # T^(m-k) y
        eq = left[:, None, :] == right[None, :, :]
        hit = eq.any(axis=2)
        first = eq.argmax(axis=2)
        for i, j in zip(*np.nonzero(hit)):
            s = int(first[i, j])
            w = (s + k, s) if k >= 0 else (s, s - k)
            found.append(((int(ranges[i]), k, int(sources[j])), w))
    found.sort()
    return found


def build_transformation_groupoid(sys: TransformationSystem, K: int) -> WindowedTG:
    """All arrows ``(x, k, y)``, ``|k| <= K``, of G(X, T) with a recorded witness."""
    if K < 0:
        raise ValueError("window K must be >= 0")
    N = sys.n_points
    P = sys.trajectories(2 * N + K + 1)
    found = _witness_scan(P, N, K, range(N), range(N))
    return WindowedTG(sys, K, tuple(t for t, _ in found), tuple(w for _, w in found))


def transformation_fiber(sys: TransformationSystem, K: int, x: int, side: str = "source"):
    """One fiber of the windowed G(X, T) without building the whole groupoid.

    Returns ``(triples, witnesses)`` sorted like ``build_transformation_groupoid``.
    """
    N = sys.n_points
    P = sys.trajectories(2 * N + K + 1)
    if side == "source":
        found = _witness_scan(P, N, K, range(N), [x])
    elif side == "range":
        found = _witness_scan(P, N, K, [x], range(N))
    else:
        raise ValueError(f"side must be 'source' or 'range', got {side!r}")
    return [t for t, _ in found], [w for _, w in found]


def iter_witnesses(sys: TransformationSystem, triple, m_max: int) -> Iterable[tuple[int, int]]:
    """Every witness ``(m, n)``, ``m, n <= m_max``, for a triple."""
    x, k, y = triple
    P = sys.trajectories(m_max + 1)
    for n in range(max(0, -k), m_max + 1):
        m = n + k
        if m > m_max:
            break
        if P[x, m] == P[y, n]:
            yield m, n
