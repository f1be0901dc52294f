"""Gravity-model mobility graphs over geolocated regions.

Edge strength from region v to region w grows with both populations and
decays exponentially with Euclidean distance. Each destination keeps only
its k strongest incoming edges, whose normalized weights sum to one, so
downstream aggregation is a convex combination of neighbor states.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, GraphError


@dataclass
class Region:
    """A node: id, population, planar coordinates in meters, features."""

    region_id: str
    population: float
    x_m: float
    y_m: float
    features: np.ndarray | None = None

    def __post_init__(self):
        if not self.population > 0:
            raise DataError(
                f"region {self.region_id}: population must be positive"
            )
        if not (np.isfinite(self.x_m) and np.isfinite(self.y_m)):
            raise DataError(f"region {self.region_id}: non-finite coordinates")
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=np.float64).reshape(-1)


@dataclass(frozen=True)
class GravityConfig:
    """Exponents for source/destination populations and the decay length.

    delta_m sets how fast influence falls with distance; k caps incoming
    edges per destination ("full" keeps all n-1).
    """

    rho: float = 0.46
    theta: float = 0.64
    delta_m: float = 82000.0
    k: int | str = 16

    def __post_init__(self):
        if not self.delta_m > 0:
            raise ConfigError("delta_m", f"must be positive, got {self.delta_m}")
        if self.k != "full":
            if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
                raise ConfigError("k", f'must be an int >= 1 or "full", got {self.k!r}')


@dataclass(frozen=True)
class Edge:
    """Directed src -> dst flow; norm_weight sums to 1 over dst's inputs."""

    src: str
    dst: str
    raw_weight: float
    norm_weight: float


def gravity_weight(pop_src, pop_dst, distance_m, config):
    """pop_src^rho * pop_dst^theta / exp(d / delta); accepts arrays."""
    pop_src = np.asarray(pop_src, dtype=np.float64)
    pop_dst = np.asarray(pop_dst, dtype=np.float64)
    distance_m = np.asarray(distance_m, dtype=np.float64)
    out = (pop_src ** config.rho) * (pop_dst ** config.theta) \
        / np.exp(distance_m / config.delta_m)
    return float(out) if out.ndim == 0 else out


@dataclass
class MobilityGraph:
    """Regions plus directed weighted edges in canonical order.

    Edges are grouped by destination (in region input order) and sorted by
    descending raw weight within each group, ties broken by source id.
    """

    regions: list
    edges: list
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {r.region_id: j for j, r in enumerate(self.regions)}

    @property
    def num_nodes(self):
        return len(self.regions)

    @property
    def num_edges(self):
        return len(self.edges)

    def feature_matrix(self):
        """Stack region features row-wise; every region must carry some."""
        rows = []
        width = None
        for r in self.regions:
            if r.features is None:
                raise GraphError(f"region {r.region_id} has no features")
            if width is None:
                width = len(r.features)
            elif len(r.features) != width:
                raise GraphError(
                    f"region {r.region_id}: feature length {len(r.features)}"
                    f" != {width}"
                )
            rows.append(r.features)
        return np.array(rows, dtype=np.float64)

    def edge_triples(self, weighting="norm"):
        """(src_index, dst_index, weight) rows for the aggregation op.

        "norm" uses the gravity-normalized weights; "uniform" replaces
        them with 1/indegree(dst), keeping the same edge set.
        """
        if not self.edges:
            return np.zeros((0, 3))
        src = np.array([self.index[e.src] for e in self.edges], dtype=np.float64)
        dst = np.array([self.index[e.dst] for e in self.edges], dtype=np.float64)
        if weighting == "norm":
            w = np.array([e.norm_weight for e in self.edges])
        elif weighting == "uniform":
            indeg = np.zeros(self.num_nodes)
            np.add.at(indeg, dst.astype(np.int64), 1.0)
            w = 1.0 / indeg[dst.astype(np.int64)]
        else:
            raise ConfigError("weighting", f"unknown weighting {weighting!r}")
        return np.column_stack([src, dst, w])

    def in_edges(self, region_id):
        return [e for e in self.edges if e.dst == region_id]


def build_graph(regions, config=None):
    """Construct the top-k gravity graph over a list of regions.

    Deterministic: raw weights come from gravity_weight on exact pairwise
    distances; per-destination ranking is by descending raw weight with
    ties broken by source region id ascending; no self-loops.
    """
    cfg = config or GravityConfig()
    n = len(regions)
    if n < 2:
        raise GraphError(f"need >= 2 regions to build a graph, got {n}")
    ids = [r.region_id for r in regions]
    if len(set(ids)) != n:
        raise GraphError("duplicate region ids")

    pops = np.array([r.population for r in regions])
    xs = np.array([r.x_m for r in regions])
    ys = np.array([r.y_m for r in regions])
    dist = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])

    # raw[v, w] is the flow strength from source v to destination w
    raw = gravity_weight(pops[:, None], pops[None, :], dist, cfg)
    np.fill_diagonal(raw, -1.0)

    # integer rank of each region id in lexicographic order, for tie-breaks
    id_rank = np.empty(n, dtype=np.int64)
    id_rank[np.argsort(np.array(ids))] = np.arange(n)

    keep = n - 1 if cfg.k == "full" else min(cfg.k, n - 1)
    edges = []
    for w in range(n):
        col = raw[:, w]
        order = np.lexsort((id_rank, -col))
        order = order[order != w][:keep]
        kept = col[order]
        total = float(kept.sum())
        if total <= 0:
            raise GraphError(
                f"region {ids[w]}: incoming gravity weights sum to zero"
            )
        for v, rw in zip(order, kept):
            edges.append(Edge(src=ids[int(v)], dst=ids[w],
                              raw_weight=float(rw),
                              norm_weight=float(rw / total)))
    return MobilityGraph(regions=list(regions), edges=edges)


def aggregate_node_features(rows):
    """Mean-pool per-item feature rows into one vector per region.

    rows is an iterable of (region_id, vector). Regions appearing once
    pass through unchanged; repeated regions are averaged. Order of first
    appearance is preserved in the returned dict.
    """
    sums: dict = {}
    counts: dict = {}
    width = None
    for rid, vec in rows:
        v = np.asarray(vec, dtype=np.float64).reshape(-1)
        if width is None:
            width = len(v)
        elif len(v) != width:
            raise DataError(
                f"region {rid}: feature length {len(v)} != {width}"
            )
        if rid in sums:
            sums[rid] = sums[rid] + v
            counts[rid] += 1
        else:
            sums[rid] = v.copy()
            counts[rid] = 1
    if width is None:
        raise DataError("no feature rows to aggregate")
    return {rid: sums[rid] / counts[rid] for rid in sums}
