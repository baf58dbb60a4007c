"""Minimum enclosing balls (Chebyshev centers) of finite point sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Ball", "EmptyInput", "min_enclosing_ball", "farthest_point_averaging"]


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    support: tuple[int, ...] = ()


def _as_real(points: np.ndarray) -> tuple[np.ndarray, bool]:
    if np.iscomplexobj(points):
        return np.concatenate([points.real, points.imag], axis=1), True
    return np.asarray(points, dtype=np.float64), False


def _from_real(center: np.ndarray, was_complex: bool) -> np.ndarray:
    if was_complex:
        d = len(center) // 2
        return center[:d] + 1j * center[d:]
    return center


def _circumball(Q: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball with every row of ``Q`` on its boundary, within aff(Q)."""
    q0 = Q[0]
    if len(Q) == 1:
        return q0.copy(), 0.0
    A = Q[1:] - q0
    G = A @ A.T
    b = 0.5 * np.einsum("ij,ij->i", A, A)
    mu = np.linalg.lstsq(G, b, rcond=None)[0]
    c = q0 + mu @ A
    return c, float(np.sqrt(np.max(np.sum((Q - c) ** 2, axis=1))))


def _welzl(P: list[int], R: list[int], pts: np.ndarray, dim: int, eps: float):
    if not P or len(R) == dim + 1:
        if not R:
            return None, -1.0, ()
        c, r = _circumball(pts[R])
        return c, r, tuple(R)
    p, rest = P[0], P[1:]
    c, r, basis = _welzl(rest, R, pts, dim, eps)
    if c is not None and np.linalg.norm(pts[p] - c) <= r + eps:
        return c, r, basis
    return _welzl(rest, R + [p], pts, dim, eps)


def min_enclosing_ball(points, tol: float = 1e-9, max_iter: int = 10_000) -> Ball:
    """Exact smallest enclosing ball by support-set pivoting.

    Keeps a basis of at most ``d + 1`` boundary points. Each round adds the
    farthest point outside the current ball and recomputes the ball of the
    small set exactly (Welzl recursion with the new point on the boundary);
    the radius strictly increases, so the loop terminates. Deterministic:
    ties break by lowest index. ``tol`` only bounds the acceptance slack.
    Complex points are handled as points of R^{2d}.
    """
    pts = np.asarray(points)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise EmptyInput("min_enclosing_ball needs at least one point")
    real, was_complex = _as_real(pts)
    if real.shape[1] == 0:
        return Ball(_from_real(real[0].copy(), was_complex), 0.0, (0,))
    scale = float(np.max(np.abs(real))) + 1.0
    eps = min(tol, 1e-12) * scale
    dim = real.shape[1]

    # start from the point farthest from the first one
    j = int(np.argmax(np.sum((real - real[0]) ** 2, axis=1)))
    basis: tuple[int, ...] = (j,)
    center, radius = real[j].copy(), 0.0
    for _ in range(max_iter):
        dist = np.sqrt(np.sum((real - center) ** 2, axis=1))
        j = int(np.argmax(dist))
        if dist[j] <= radius + eps:
            break
        c, r, new_basis = _welzl(list(basis), [j], real, dim, eps)
        if r <= radius:
            # numerical stall: no progress possible at this precision
            break
        center, radius, basis = c, r, new_basis
    radius = float(np.max(np.sqrt(np.sum((real - center) ** 2, axis=1))))
    return Ball(_from_real(center, was_complex), radius, tuple(int(b) for b in basis))


def farthest_point_averaging(points, iterations: int = 1000) -> Ball:
    """Badoiu-Clarkson iteration ``c += (p_far - c) / (k + 1)``.

    Converges like ``O(R / sqrt(k))``; kept as a slow, simple reference.
    """
    pts = np.asarray(points)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise EmptyInput("farthest_point_averaging needs at least one point")
    real, was_complex = _as_real(pts)
    c = real[0].copy()
    for k in range(1, iterations + 1):
        far = real[np.argmax(np.sum((real - c) ** 2, axis=1))]
        c = c + (far - c) / (k + 1)
    r = float(np.max(np.sqrt(np.sum((real - c) ** 2, axis=1))))
    return Ball(_from_real(c, was_complex), r)
