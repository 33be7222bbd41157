"""Adaptive quadrature on triangles with point singularities.

Panels are refined by midpoint subdivision until every singular point is at
least ``refine_ratio`` panel diameters away, except for at most one point
lying on the panel itself.  Such a panel is fanned into sub-triangles with
that point as the common apex and each is integrated with a Duffy-collapsed
Gauss rule, whose Jacobian cancels a ``1/r`` singularity at the apex.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from cornerflow.errors import QuadratureError

# Points within this fraction of a panel diameter count as lying on it.
SNAP = 1e-9


@lru_cache(maxsize=None)
def duffy_rule(order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule collapsed at vertex 0 of a triangle.

    Returns (s, t, w) with the node at ``v0 + s((1-t)(v1-v0) + t(v2-v0))``
    and weight ``w * 2 * area``.
    """
    g, wg = np.polynomial.legendre.leggauss(order)
    g = 0.5 * (g + 1.0)
    wg = 0.5 * wg
    s, t = np.meshgrid(g, g, indexing="ij")
    w = np.outer(wg, wg) * s
    out = s.ravel(), t.ravel(), w.ravel()
    for a in out:
        a.setflags(write=False)
    return out


def _area(tri: np.ndarray) -> float:
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    return 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])


def _diameter(tri: np.ndarray) -> float:
    return max(
        np.hypot(*(tri[1] - tri[0])),
        np.hypot(*(tri[2] - tri[1])),
        np.hypot(*(tri[0] - tri[2])),
    )


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ab = b - a
    denom = ab @ ab
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    foot = a + t[:, None] * ab
    return np.hypot(*(p - foot).T), foot


def triangle_distance(points: np.ndarray, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distance from each point to a closed triangle and the nearest point on it."""
    points = np.atleast_2d(points)
    v0, v1, v2 = tri
    det = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0])
    rel = points - v0
    l1 = (rel[:, 0] * (v2[1] - v0[1]) - rel[:, 1] * (v2[0] - v0[0])) / det
    l2 = ((v1[0] - v0[0]) * rel[:, 1] - (v1[1] - v0[1]) * rel[:, 0]) / det
    inside = (l1 >= 0) & (l2 >= 0) & (l1 + l2 <= 1)
    best = np.full(len(points), np.inf)
    nearest = points.copy()
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        d, foot = _segment_distance(points, a, b)
        better = d < best
        best = np.where(better, d, best)
        nearest[better] = foot[better]
    best[inside] = 0.0
    nearest[inside] = points[inside]
    return best, nearest


def _children(tri: np.ndarray) -> list[np.ndarray]:
    v0, v1, v2 = tri
    m01, m12, m20 = 0.5 * (v0 + v1), 0.5 * (v1 + v2), 0.5 * (v2 + v0)
    return [
        np.array([v0, m01, m20]),
        np.array([m01, v1, m12]),
        np.array([m20, m12, v2]),
        np.array([m01, m12, m20]),
    ]


def dedupe_points(points, tol: float = 1e-13) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.hypot(*(p - q)) > tol for q in kept):
            kept.append(p)
    return np.array(kept).reshape(-1, 2)


def panelize(
    triangle,
    singular_points,
    refine_ratio: float = 3.0,
    max_depth: int = 60,
) -> list[tuple[np.ndarray, np.ndarray | None]]:
    """Split a triangle into leaf panels as described in the module docstring.

    Each leaf is ``(vertices, apex)`` where ``apex`` is None for a regular
    panel or the singular point to fan around.
    """
    tri0 = np.asarray(triangle, dtype=float)
    pts = dedupe_points(singular_points) if len(singular_points) else np.zeros((0, 2))
    leaves: list[tuple[np.ndarray, np.ndarray | None]] = []
    # Each stack entry carries the points still close enough to matter:
    # a point far from a panel is also far from all of its children.
    stack = [(tri0, 0, pts)]
    while stack:
        tri, depth, near = stack.pop()
        diam = _diameter(tri)
        if len(near):
            dist, nearest = triangle_distance(near, tri)
            close = dist < refine_ratio * diam
        else:
            close = np.zeros(0, dtype=bool)
        if not close.any():
            leaves.append((tri, None))
            continue
        idx = np.nonzero(close)[0]
        if idx.size == 1 and dist[idx[0]] <= SNAP * diam:
            leaves.append((tri, nearest[idx[0]]))
            continue
        if depth >= max_depth:
            raise QuadratureError(f"panel refinement exceeded max_depth={max_depth}")
        keep = near[close]
        stack.extend((c, depth + 1, keep) for c in _children(tri))
    return leaves


def _graded_fan(apex: np.ndarray, a: np.ndarray, b: np.ndarray) -> list[np.ndarray]:
    """Cover triangle (apex, a, b) by pieces of bounded aspect ratio around the apex.

    The base is split at the foot of the altitude from the apex and each half
    is cut geometrically outward from the foot, so every piece subtends a
    moderate angle and has comparable side lengths at the apex.
    """
    ab = b - a
    L = np.hypot(*ab)
    if L == 0.0:
        return []
    u = ab / L
    t_foot = float(np.clip((apex - a) @ u, 0.0, L))
    h = float(np.hypot(*(apex - (a + t_foot * u))))
    if h <= 1e-14 * L:
        return []
    pieces: list[np.ndarray] = []
    for start, stop in ((t_foot, 0.0), (t_foot, L)):
        length = abs(stop - start)
        if length == 0.0:
            continue
        direction = 1.0 if stop > start else -1.0
        # Cut points at distances 0, h, 2h, 4h, ... from the foot.
        cuts = [0.0]
        d = h
        while d < length:
            cuts.append(d)
            d *= 2.0
        cuts.append(length)
        if len(cuts) > 2 and cuts[-1] - cuts[-2] < 0.25 * cuts[-2]:
            del cuts[-2]
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            p0 = a + (start + direction * c0) * u
            p1 = a + (start + direction * c1) * u
            pieces.append(np.array([apex, p0, p1]))
    return pieces


def leaf_rule(leaves, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for a list of leaves from :func:`panelize`."""
    s, t, w = duffy_rule(order)
    tris = []
    for tri, apex in leaves:
        if apex is None:
            tris.append(tri)
            continue
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            tris.extend(_graded_fan(apex, a, b))
    tris = np.array(tris)
    v0 = tris[:, 0, None, :]
    e1 = (tris[:, 1] - tris[:, 0])[:, None, :]
    e2 = (tris[:, 2] - tris[:, 0])[:, None, :]
    nodes = v0 + s[None, :, None] * ((1.0 - t)[None, :, None] * e1 + t[None, :, None] * e2)
    det = np.abs(e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0])
    weights = w[None, :] * det
    return nodes.reshape(-1, 2), weights.reshape(-1)


def integrate(f, triangle, singular_points=(), order: int = 8, refine_ratio: float = 3.0, max_depth: int = 60):
    """Integrate a vectorised ``f(nodes) -> values`` over a triangle."""
    leaves = panelize(triangle, singular_points, refine_ratio, max_depth)
    nodes, weights = leaf_rule(leaves, order)
    return np.tensordot(weights, f(nodes), axes=(0, 0))
