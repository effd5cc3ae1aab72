"""Partition-valued Markov process: recursive random Bezier cuts of a labeled point set.

Each live (unpaused) leaf subset carries an exponential lifetime whose rate is
the radius of its smallest enclosing circle; the process picks the next subset
to split with probability proportional to that radius, accumulates the waiting
time, and stops when a time budget is exhausted or every leaf is paused.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cutgen import CutFailureError, CutGenConfig, sample_cut_masked
from .geometry import side_of_cut, smallest_enclosing_circle


@dataclass(eq=False)
class Subset:
    """One node of the partition tree.

    ``constraint_path`` records, root to leaf, the (cut index, above?) pairs
    that carve this subset out of the plane. ``members`` indexes into the
    dataset and is dropped once the subset is split (or the state stripped).
    ``counts`` holds per-label member counts aligned with the state's
    ``label_values``.
    """

    id: int
    constraint_path: tuple
    members: np.ndarray | None
    counts: np.ndarray
    center: np.ndarray | None
    radius: float
    paused: bool
    cut_failed: bool = False

    @property
    def size(self) -> int:
        return int(self.counts.sum())


@dataclass(eq=False)
class AdvanceEvent:
    """What a single advance() call did."""

    kind: str  # "cut" | "cut-failed" | "budget" | "extinct"
    subset_id: int | None = None
    parent_counts: np.ndarray | None = None
    below_counts: np.ndarray | None = None
    above_counts: np.ndarray | None = None


@dataclass(eq=False)
class PartitionState:
    """Partition of a labeled dataset, plus the cut tree that produced it.

    ``xy`` and ``codes`` reference the dataset (coordinates and per-point label
    indices); they are shared across particles and may be detached for
    serialization. ``subsets`` is indexed by subset id; ``splits`` maps a split
    subset id to (cut id, below child id, above child id); ``leaves`` lists the
    current leaf ids in creation order.
    """

    label_values: np.ndarray
    xy: np.ndarray | None
    codes: np.ndarray | None
    subsets: list = field(default_factory=list)
    cuts: list = field(default_factory=list)
    splits: dict = field(default_factory=dict)
    leaves: list = field(default_factory=list)
    elapsed: float = 0.0
    last_event: AdvanceEvent | None = None

    @property
    def n_cuts(self) -> int:
        return len(self.cuts)

    def leaf_subsets(self):
        return [self.subsets[i] for i in self.leaves]

    def is_terminal(self) -> bool:
        return all(self.subsets[i].paused for i in self.leaves)


def _label_codes(labels, label_values):
    codes = np.searchsorted(label_values, labels)
    return codes.astype(np.int64)


def _new_subset(state: PartitionState, path: tuple, members: np.ndarray, rng) -> Subset:
    counts = np.bincount(state.codes[members], minlength=len(state.label_values))
    if len(members) >= 2:
        circ = smallest_enclosing_circle(state.xy[members], rng)
        center, radius = circ.center, float(circ.radius)
    elif len(members) == 1:
        center, radius = state.xy[members[0]].astype(float), 0.0
    else:
        center, radius = None, 0.0
    pure = np.count_nonzero(counts) <= 1
    # radius 0 with 2+ points means co-located points: nothing can separate them
    stuck = len(members) >= 2 and radius <= 0.0
    sub = Subset(
        id=len(state.subsets),
        constraint_path=path,
        members=members,
        counts=counts,
        center=center,
        radius=radius,
        paused=pure or len(members) < 2 or stuck,
        cut_failed=stuck and not pure,
    )
    state.subsets.append(sub)
    return sub


def init_partition(data, rng=None) -> PartitionState:
    """Trivial one-subset partition of the dataset.

    ``data`` is anything with ``xy`` (n, 2) and ``labels`` (n,) attributes.
    """
    xy = np.asarray(data.xy, dtype=float)
    labels = np.asarray(data.labels)
    if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) == 0:
        raise ValueError("dataset must contain at least one 2-d point")
    label_values = np.unique(labels)
    state = PartitionState(
        label_values=label_values,
        xy=xy,
        codes=_label_codes(labels, label_values),
    )
    members = np.arange(len(xy), dtype=np.int32)
    root = _new_subset(state, (), members, rng)
    state.leaves = [root.id]
    return state


def _sample_lifetime(total_rate: float, rng) -> float:
    """Exponential waiting time for a superposition of rates summing to total_rate."""
    if total_rate <= 0.0:
        raise ValueError("total rate must be positive")
    return float(rng.exponential(1.0 / total_rate))


def _pick_leaf_index(radii, rng) -> int:
    """Index drawn with probability proportional to each radius."""
    cum = np.cumsum(radii)
    u = rng.random() * cum[-1]
    return min(int(np.searchsorted(cum, u, side="right")), len(radii) - 1)


def total_rate(state: PartitionState) -> float:
    """Sum of enclosing-circle radii over unpaused leaves."""
    return float(sum(state.subsets[i].radius for i in state.leaves if not state.subsets[i].paused))


def advance(state: PartitionState, budget: float, cfg: CutGenConfig, rng) -> PartitionState:
    """One transition attempt; mutates and returns ``state``.

    Draws the next event time; if it exceeds the budget the state is frozen at
    the budget. Otherwise one leaf is chosen (probability proportional to its
    radius) and split by a freshly sampled separating cut; an unsplittable leaf
    is paused. ``state.last_event`` records what happened.
    """
    live = [i for i in state.leaves if not state.subsets[i].paused]
    if not live:
        state.last_event = AdvanceEvent("extinct")
        return state
    radii = np.array([state.subsets[i].radius for i in live])
    wait = _sample_lifetime(float(radii.sum()), rng)
    if state.elapsed + wait > budget:
        state.elapsed = budget
        state.last_event = AdvanceEvent("budget")
        return state
    state.elapsed += wait
    leaf = state.subsets[live[_pick_leaf_index(radii, rng)]]
    try:
        cut, above = sample_cut_masked(
            state.xy[leaf.members], cfg, rng, center=leaf.center, radius=leaf.radius
        )
    except CutFailureError:
        leaf.paused = True
        leaf.cut_failed = True
        state.last_event = AdvanceEvent("cut-failed", subset_id=leaf.id)
        return state
    cut_id = len(state.cuts)
    state.cuts.append(cut)
    below = _new_subset(state, leaf.constraint_path + ((cut_id, False),), leaf.members[~above], rng)
    above_s = _new_subset(state, leaf.constraint_path + ((cut_id, True),), leaf.members[above], rng)
    state.splits[leaf.id] = (cut_id, below.id, above_s.id)
    pos = state.leaves.index(leaf.id)
    state.leaves[pos : pos + 1] = [below.id, above_s.id]
    leaf.members = None
    state.last_event = AdvanceEvent(
        "cut",
        subset_id=leaf.id,
        parent_counts=leaf.counts,
        below_counts=below.counts,
        above_counts=above_s.counts,
    )
    return state


def run_to_budget(
    state: PartitionState,
    budget: float,
    cfg: CutGenConfig,
    rng,
    max_cuts: int | None = None,
) -> PartitionState:
    """Advance repeatedly until the budget, extinction, or an optional cut cap."""
    while True:
        advance(state, budget, cfg, rng)
        kind = state.last_event.kind
        if kind in ("budget", "extinct"):
            return state
        if max_cuts is not None and state.n_cuts >= max_cuts:
            return state


def route_points(state: PartitionState, points) -> np.ndarray:
    """Leaf subset id for each query point, following the cut tree from the root."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.full(len(pts), -1, dtype=np.int64)
    stack = [(0, np.arange(len(pts)))]
    while stack:
        sid, idx = stack.pop()
        if idx.size == 0:
            continue
        split = state.splits.get(sid)
        if split is None:
            out[idx] = sid
            continue
        cut_id, below_id, above_id = split
        above = side_of_cut(pts[idx], state.cuts[cut_id])
        stack.append((below_id, idx[~above]))
        stack.append((above_id, idx[above]))
    return out


def route_point(state: PartitionState, point) -> int:
    """Leaf subset id containing a single query point."""
    return int(route_points(state, np.asarray(point, dtype=float)[None, :])[0])


def strip_members(state: PartitionState) -> PartitionState:
    """Drop member indices and dataset references; routing and counts survive."""
    for sub in state.subsets:
        sub.members = None
    state.xy = None
    state.codes = None
    return state
