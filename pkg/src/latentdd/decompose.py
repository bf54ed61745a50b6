"""Line-similarity segmentation of a stretched manifold.

A segment grows from an anchor point while every new triple
``(anchor, p_j, p_{j+1})`` spans a parallelogram of area at most ``epsilon``.
``epsilon`` is ``gamma`` times the mean inverse slope of the curve, so larger
``gamma`` yields fewer, longer segments.
"""
from dataclasses import dataclass

import numpy as np

from ._container import fmt_float
from .errors import FlatCurve, OutOfRange


@dataclass(frozen=True)
class DecompositionConfig:
    gamma: float = 4.0
    min_points_per_domain: int = 100

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.min_points_per_domain < 2:
            raise ValueError("min_points_per_domain must be >= 2")


@dataclass(frozen=True)
class SegmentDecomposition:
    """Inclusive index ranges over the stretched curve.

    Consecutive ranges share their boundary point. ``raw_segments`` is the
    scan output before undersized segments were merged.
    """
    segments: tuple
    epsilon: float
    gamma: float
    raw_segments: tuple = ()

    def __len__(self):
        return len(self.segments)

    def counts(self):
        return [e - s + 1 for s, e in self.segments]

    def labels(self):
        """Segment id of every curve index (shared points go to the earlier one)."""
        n = self.segments[-1][1] + 1
        out = np.empty(n, dtype=int)
        for sid, (s, e) in reversed(list(enumerate(self.segments))):
            out[s:e + 1] = sid
        return out


def _points(obj):
    return np.asarray(getattr(obj, "points", obj), dtype=float)


def similarity_threshold(sm, gamma):
    """``gamma * sum|dx_bar| / sum|dy_bar|`` over consecutive points."""
    P = _points(sm)
    if len(P) < 2:
        raise ValueError("need at least 2 points")
    d = np.abs(np.diff(P, axis=0))
    sy = d[:, 1].sum()
    if sy == 0:
        raise FlatCurve("curve has no vertical variation")
    return float(gamma * d[:, 0].sum() / sy)


def triple_area(p1, p2, p3):
    """``|(p2 - p1) x (p3 - p1)|``, the 2-D wedge magnitude."""
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    u, v = p2 - p1, p3 - p1
    return np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])


def _first_break(P, epsilon):
    """Scan position ``i >= 2`` of the first dissimilar triple, or None."""
    if len(P) < 3:
        return None
    area = triple_area(P[0], P[1:-1], P[2:])
    over = np.flatnonzero(area > epsilon)
    return int(over[0]) + 2 if len(over) else None


def lisp(points, epsilon):
    """One line-similarity scan from the first point.

    Returns ``(segment, remainder, exhausted)``. If the scan finishes
    without a dissimilar triple, ``segment`` is every point and ``remainder``
    is empty. If it stops at scan position ``i > 2``, ``segment`` is the first
    ``i`` points and ``remainder`` restarts at the last of them. A stop at
    ``i == 2`` returns an empty segment and the untouched points.
    """
    P = _points(points)
    i = _first_break(P, epsilon)
    if i is None:
        return P, P[:0], True
    if i > 2:
        return P[:i], P[i - 1:], False
    return P[:0], P, False


def _merge_small(segments, min_points):
    segs = [list(s) for s in segments]
    while len(segs) > 1:
        sizes = [e - s + 1 for s, e in segs]
        small = [i for i, c in enumerate(sizes) if c < min_points]
        if not small:
            break
        i = min(small, key=lambda j: (sizes[j], j))
        if i == 0:
            j = 1
        elif i == len(segs) - 1:
            j = i - 1
        else:
            j = i - 1 if sizes[i - 1] <= sizes[i + 1] else i + 1
        a, b = min(i, j), max(i, j)
        segs[a:b + 1] = [[segs[a][0], segs[b][1]]]
    return tuple(tuple(s) for s in segs)


def lissda(sm, cfg=DecompositionConfig()):
    """Decompose the stretched curve into line-similar segments.

    Repeats :func:`lisp` on the remaining points. A stop on the very first
    triple emits the two-point group ``[P_k, P_{k+1}]`` and continues from
    ``P_{k+1}``. Afterwards, segments with fewer than
    ``cfg.min_points_per_domain`` points are merged into their smaller
    neighbour.
    """
    P = _points(sm)
    eps = similarity_threshold(P, cfg.gamma)
    n = len(P)
    raw = []
    start = 0
    while start < n:
        i = _first_break(P[start:], eps)
        if i is None:
            raw.append((start, n - 1))
            break
        if i > 2:
            raw.append((start, start + i - 1))
            start += i - 1
        else:
            raw.append((start, start + 1))
            start += 1
    raw = tuple(raw)
    return SegmentDecomposition(_merge_small(raw, cfg.min_points_per_domain),
                                eps, float(cfg.gamma), raw)


def classify_index(dec, index):
    """Segment id containing curve ``index``; a shared boundary maps to the earlier one."""
    last = dec.segments[-1][1]
    if not 0 <= index <= last:
        raise OutOfRange(f"index {index} outside [0, {last}]")
    ends = np.array([e for _, e in dec.segments])
    return int(np.searchsorted(ends, index, side="left"))


def gamma_sweep(sm, gammas, min_points_per_domain=100):
    """Rows ``(gamma, epsilon, raw segment count, domain count)``."""
    rows = []
    for g in gammas:
        dec = lissda(sm, DecompositionConfig(g, min_points_per_domain))
        rows.append((float(g), dec.epsilon, len(dec.raw_segments), len(dec)))
    return rows


def export_segments_csv(dec, sm, path):
    xbar = _points(sm)[:, 0]
    with open(path, "w") as fh:
        fh.write("segment_id,start_index,end_index,point_count,x_bar_min,x_bar_max\n")
        for sid, (s, e) in enumerate(dec.segments):
            fh.write(f"{sid},{s},{e},{e - s + 1},{fmt_float(xbar[s:e + 1].min())},"
                     f"{fmt_float(xbar[s:e + 1].max())}\n")


def export_sweep_csv(rows, path):
    with open(path, "w") as fh:
        fh.write("gamma,epsilon,raw_segments,domains\n")
        for g, eps, n_raw, n_dom in rows:
            fh.write(f"{fmt_float(g)},{fmt_float(eps)},{n_raw},{n_dom}\n")
