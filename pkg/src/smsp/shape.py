"""Shape extraction from a fitted partition: boundary polylines and perimeter.

Each cut is discretized into a polyline, clipped to the region of the subset it
split, and classified as interior (separating same-label regions, an artifact
of over-cutting) or exterior (real label boundary) by inspecting the labels of
nearby data points on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import bezier_eval, rotate, side_of_cut


@dataclass(eq=False)
class BoundarySegment:
    """Contiguous clipped piece of one discretized cut, in data coordinates."""

    points: np.ndarray  # (m, 2), m >= 2
    cut_id: int
    source_cut: object = field(default=None, repr=False)
    interior: bool = False

    def length(self) -> float:
        d = np.diff(self.points, axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).sum())


def _mask_runs(mask):
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return []
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    return np.split(idx, breaks + 1)


def discretize_cuts(state, points_per_cut: int = 100) -> list:
    """Polyline segments for every cut, clipped to the subset the cut split.

    Each cut is sampled at ``points_per_cut`` parameter-uniform points; samples
    violating the split subset's constraint path are dropped and the survivors
    are grouped into maximal consecutive runs (segments need at least 2 points).
    """
    if points_per_cut < 2:
        raise ValueError("points_per_cut must be at least 2")
    path_by_cut = {}
    for parent_id, (cut_id, _, _) in state.splits.items():
        path_by_cut[cut_id] = state.subsets[parent_id].constraint_path
    s = np.linspace(0.0, 1.0, points_per_cut)
    segments = []
    for cut_id in range(len(state.cuts)):
        cut = state.cuts[cut_id]
        pts_rot = bezier_eval(cut.curve, s)
        pts_rot[:, 1] += cut.offset
        pts = rotate(pts_rot, -cut.theta)
        keep = np.ones(len(pts), dtype=bool)
        for cid, above in path_by_cut[cut_id]:
            if not keep.any():
                break
            keep &= side_of_cut(pts, state.cuts[cid]) == above
        for run in _mask_runs(keep):
            if len(run) >= 2:
                segments.append(
                    BoundarySegment(points=pts[run], cut_id=cut_id, source_cut=cut)
                )
    return segments


def _row_unanimous(labels, valid):
    # per-row: all valid entries equal; rows with no valid entries report False
    big = np.iinfo(np.int64).max
    small = np.iinfo(np.int64).min
    lo = np.where(valid, labels, big).min(axis=1)
    hi = np.where(valid, labels, small).max(axis=1)
    any_valid = valid.any(axis=1)
    return any_valid & (lo == hi), lo


def mark_interior(segments, data, k: int = 10, max_dist: float | None = None) -> list:
    """Flag segments that separate same-label regions.

    For every polyline vertex, up to ``k`` nearest data points within
    ``max_dist`` are collected on each side of the segment's source cut. A
    vertex votes "interior" iff both sides have neighbors and all neighbors on
    both sides share one label; a segment is interior iff a strict majority of
    its vertices vote interior. Segments with data on only one side stay
    exterior. Flags are set in place; the list is returned.
    """
    if max_dist is None or not (max_dist > 0.0):
        raise ValueError("max_dist must be a positive distance")
    if k < 1:
        raise ValueError("k must be at least 1")
    xy = np.asarray(data.xy, dtype=float)
    labels = np.asarray(data.labels)
    by_cut = {}
    for seg in segments:
        if seg.source_cut is None:
            raise ValueError("segment is missing its source cut")
        by_cut.setdefault(seg.cut_id, []).append(seg)
    for cut_id in sorted(by_cut):
        segs = by_cut[cut_id]
        above = side_of_cut(xy, segs[0].source_cut)
        side_data = []
        for mask in (~above, above):
            pts = xy[mask]
            side_data.append((cKDTree(pts) if len(pts) else None, labels[mask], len(pts)))
        for seg in segs:
            per_side = []
            for tree, side_labels, n_side in side_data:
                if tree is None:
                    per_side = None
                    break
                kk = min(k, n_side)
                dist, idx = tree.query(seg.points, k=kk, distance_upper_bound=max_dist)
                if kk == 1:
                    dist = dist[:, None]
                    idx = idx[:, None]
                valid = np.isfinite(dist)
                safe_idx = np.where(valid, idx, 0)
                labs = side_labels[safe_idx]
                per_side.append(_row_unanimous(labs, valid))
            if per_side is None:
                seg.interior = False
                continue
            (una_a, lab_a), (una_b, lab_b) = per_side
            votes = una_a & una_b & (lab_a == lab_b)
            seg.interior = bool(votes.sum() * 2 > len(votes))
    return segments


@dataclass(eq=False)
class ShapeResult:
    """Extracted boundary: all segments (flagged), exterior perimeter, budget."""

    segments: list
    perimeter: float
    budget: float | None = None

    @property
    def normalized_perimeter(self) -> float | None:
        if self.budget is None or not np.isfinite(self.budget):
            return None
        return self.perimeter / self.budget

    @property
    def exterior_segments(self) -> list:
        return [s for s in self.segments if not s.interior]


def extract_shape(
    state,
    data=None,
    points_per_cut: int = 100,
    k: int = 10,
    max_dist: float | None = None,
    budget: float | None = None,
) -> ShapeResult:
    """Discretize, optionally interior-mark, and measure a fitted partition.

    Interior marking runs only when both ``data`` and ``max_dist`` are given;
    otherwise every segment counts toward the perimeter.
    """
    segments = discretize_cuts(state, points_per_cut)
    if data is not None and max_dist is not None:
        mark_interior(segments, data, k=k, max_dist=max_dist)
    perimeter = float(sum(s.length() for s in segments if not s.interior))
    return ShapeResult(segments=segments, perimeter=perimeter, budget=budget)
