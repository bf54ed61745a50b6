"""Planar 1-manifold: triangulation, connected curve and mirror stretching.

The reduced cloud ``(x~, y~)`` is triangulated by 2-D ball pivoting, walked
into an ordered open curve, and unfolded into a graph of a function by
reflecting every branch about the turning point that starts it.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ._container import fmt_float
from .errors import DisconnectedCloud, EmptyInput


def normalize_unit_box(points):
    """Scale each axis of ``points`` to ``[0, 1]``; constant axes map to 0."""
    P = np.asarray(points, dtype=float)
    lo = P.min(axis=0)
    span = P.max(axis=0) - lo
    span[span == 0] = 1.0
    return (P - lo) / span


def default_radius(points, factor=3.0):
    """``factor`` times the median nearest-neighbour distance of ``points``."""
    P = np.asarray(points, dtype=float)
    if len(P) < 2:
        return 1.0
    d, _ = cKDTree(P).query(P, k=2)
    med = float(np.median(d[:, 1]))
    return factor * med if med > 0 else factor * float(np.max(d[:, 1]) or 1.0)


def _components(n, edges):
    if len(edges) == 0:
        return n, np.arange(n)
    A = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return connected_components(A, directed=False)


def ball_pivot(points, radius=None, radius_factor=3.0, normalize=True,
               check_connected=True):
    """2-D ball pivoting.

    An undirected edge ``(a, b)`` is emitted when some circle of the given
    radius passes through ``a`` and ``b`` with no other point strictly inside.

    Parameters
    ----------
    points : array_like, shape (n, 2)
    radius : float, optional
        Ball radius in the (normalized) coordinates. Defaults to
        ``radius_factor`` times the median nearest-neighbour distance.
    normalize : bool
        Scale both axes to ``[0, 1]`` before pivoting.
    check_connected : bool
        Raise :class:`DisconnectedCloud` when more than one connected
        component holds over 1% of the points.

    Returns
    -------
    edges : ndarray of int, shape (m, 2)
        Sorted rows ``(a, b)`` with ``a < b``.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if len(P) == 0:
        raise EmptyInput("no points to triangulate")
    if normalize:
        P = normalize_unit_box(P)
    if radius is None:
        radius = default_radius(P, radius_factor)
    if not radius > 0:
        raise ValueError("radius must be positive")

    tree = cKDTree(P)
    pairs = tree.query_pairs(2.0 * radius, output_type="ndarray")
    if len(pairs) == 0:
        edges = np.empty((0, 2), dtype=int)
    else:
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        a, b = P[pairs[:, 0]], P[pairs[:, 1]]
        chord = b - a
        d = np.linalg.norm(chord, axis=1)
        coincident = d == 0
        d_safe = np.where(coincident, 1.0, d)
        normal = np.column_stack([-chord[:, 1], chord[:, 0]]) / d_safe[:, None]
        height = np.sqrt(np.maximum(radius ** 2 - (d / 2) ** 2, 0.0))
        mid = 0.5 * (a + b)
        shrunk = radius * (1.0 - 1e-9)
        empty = np.zeros(len(pairs), dtype=bool)
        for side in (1.0, -1.0):
            centers = mid + side * height[:, None] * normal
            inside = tree.query_ball_point(centers, shrunk, return_length=True)
            empty |= inside == 0
        edges = pairs[empty | coincident]

    if check_connected and len(P) > 1:
        _, labels = _components(len(P), edges)
        sizes = np.bincount(labels)
        big = np.sort(sizes[sizes > 0.01 * len(P)])[::-1]
        if len(big) > 1:
            raise DisconnectedCloud(big.tolist())
    return edges


@dataclass(frozen=True)
class Curve1M:
    """Ordered open curve; ``points[i] == cloud[order[i]]``."""
    points: np.ndarray
    order: np.ndarray
    jumps: int = 0

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def __len__(self):
        return len(self.order)


def extract_connected_curve(edges, points, normalize=True):
    """Walk the edge graph into an ordered curve.

    Starts at the lowest point (minimal ``y~``) and repeatedly follows the
    shortest edge to an unvisited neighbour, ties broken by lower ``y~`` and
    then lower ``x~``. When no unvisited neighbour is left, jumps to the
    nearest unvisited point; the number of such jumps is recorded.
    """
    P = np.asarray(points, dtype=float)
    n = len(P)
    if n == 0:
        raise EmptyInput("no points to connect")
    Q = normalize_unit_box(P) if normalize else P
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)

    neighbours = [[] for _ in range(n)]
    lengths = np.linalg.norm(Q[edges[:, 0]] - Q[edges[:, 1]], axis=1)
    for (a, b), length in zip(edges.tolist(), lengths.tolist()):
        neighbours[a].append((length, b))
        neighbours[b].append((length, a))

    def key(length, j):
        return (length, P[j, 1], P[j, 0], j)

    start = int(np.lexsort((np.arange(n), P[:, 0], P[:, 1]))[0])
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    jumps = 0
    current = start
    while len(order) < n:
        options = [key(length, j) for length, j in neighbours[current] if not visited[j]]
        if options:
            nxt = min(options)[3]
        else:
            rest = np.flatnonzero(~visited)
            dist = np.linalg.norm(Q[rest] - Q[current], axis=1)
            pick = np.lexsort((rest, P[rest, 0], P[rest, 1], dist))[0]
            nxt = int(rest[pick])
            jumps += 1
        visited[nxt] = True
        order.append(nxt)
        current = nxt
    order = np.asarray(order)
    return Curve1M(points=P[order], order=order, jumps=jumps)


@dataclass(frozen=True)
class TurningPoint:
    index: int
    coords: tuple


def turning_indices(x):
    """Indices where consecutive nonzero increments of ``x`` change sign.

    Zero increments are skipped, so a plateau belongs to the segment that
    leaves it and the turning point sits at the plateau's last point.
    """
    dx = np.diff(np.asarray(x, dtype=float))
    out = []
    last = 0.0
    for i, s in enumerate(np.sign(dx)):
        if s == 0:
            continue
        if last != 0 and s != last:
            out.append(i)
        last = s
    return out


def find_turning_points(curve):
    if len(curve) < 3:
        return []
    return [TurningPoint(i, (float(curve.x[i]), float(curve.y[i])))
            for i in turning_indices(curve.x)]


def mirror(x, center):
    """Reflection ``x -> 2 center - x`` (y is left unchanged by the caller)."""
    return 2.0 * center - np.asarray(x, dtype=float)


@dataclass(frozen=True)
class BranchedDomain:
    """One branch: curve indices ``start..end`` mapped by ``x_bar = sign*x + offset``."""
    id: int
    lo: float
    hi: float
    sign: float
    offset: float
    start: int
    end: int

    def apply(self, x):
        return self.sign * np.asarray(x, dtype=float) + self.offset

    def invert(self, xbar):
        return self.sign * (np.asarray(xbar, dtype=float) - self.offset)

    def contains(self, xbar):
        return self.lo <= xbar <= self.hi


@dataclass(frozen=True)
class StretchedManifold:
    points: np.ndarray
    branches: list
    source: Curve1M
    turning_points: list = field(default_factory=list)
    reflection_centers: tuple = ()

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def __len__(self):
        return len(self.points)

    def branch_of_index(self, i):
        """Branch holding curve index ``i``; turning points go to the lower id."""
        ends = np.array([b.end for b in self.branches])
        return self.branches[int(np.searchsorted(ends, i, side="left"))]

    def branch_ids(self):
        return np.array([self.branch_of_index(i).id for i in range(len(self))])


def stretch(curve):
    """Unfold ``curve`` into a function of ``x_bar``.

    The first branch keeps the orientation of the curve's first nonzero step
    (identity when it goes right). Every turning point composes one more
    reflection about its own image, which keeps the curve continuous and
    makes ``x_bar`` non-decreasing along the order.
    """
    x, y = curve.x, curve.y
    n = len(curve)
    tps = find_turning_points(curve)
    dx = np.diff(x)
    nonzero = dx[dx != 0]
    sign = -1.0 if len(nonzero) and nonzero[0] < 0 else 1.0
    offset = 0.0
    bounds = [0] + [tp.index for tp in tps] + [max(n - 1, 0)]
    xbar = np.empty(n)
    branches = []
    centers = []
    for b, (s, e) in enumerate(zip(bounds[:-1], bounds[1:])):
        seg = slice(s + 1 if b else s, e + 1)
        xbar[seg] = sign * x[seg] + offset
        branches.append(BranchedDomain(b, float(xbar[s]), float(xbar[e]), sign,
                                       offset, s, e))
        if b < len(tps):
            centers.append(float(xbar[e]))
            offset = offset + 2.0 * sign * x[e]
            sign = -sign
    return StretchedManifold(np.column_stack([xbar, y]), branches, curve, tps,
                             tuple(centers))


def unstretch(sm):
    """Map the stretched points back to curve coordinates."""
    x = np.empty(len(sm))
    for br in sm.branches:
        x[br.start:br.end + 1] = br.invert(sm.x[br.start:br.end + 1])
    return np.column_stack([x, sm.y])


def branch_of(sm, xbar):
    """Return ``(branch, extrapolated)`` for a stretched abscissa.

    Boundary values go to the lower branch id; values outside the stretched
    range are clamped to the first or last branch with ``extrapolated=True``.
    """
    his = np.array([b.hi for b in sm.branches])
    if xbar < sm.branches[0].lo:
        return sm.branches[0], True
    if xbar > his[-1]:
        return sm.branches[-1], True
    return sm.branches[int(np.searchsorted(his, xbar, side="left"))], False


def export_curve_csv(sm, path):
    ids = sm.branch_ids()
    src = sm.source.points
    with open(path, "w") as fh:
        fh.write("index,sample,x_tilde,y_tilde,x_bar,y_bar,branch_id\n")
        for i in range(len(sm)):
            nums = ",".join(fmt_float(v) for v in (src[i, 0], src[i, 1], sm.x[i], sm.y[i]))
            fh.write(f"{i},{sm.source.order[i]},{nums},{ids[i]}\n")


def export_edges_csv(edges, path):
    np.savetxt(path, np.asarray(edges, dtype=int).reshape(-1, 2), fmt="%d",
               delimiter=",", header="a,b", comments="")
