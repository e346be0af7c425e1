"""
Vietoris-Rips persistence in dimensions 0 and 1.

Simplices enter at their diameter and are ordered by (filtration value,
dimension, lexicographic vertex order). H0 pairs come from a union-find pass
over the ordered edges. H1 pairs come from reducing the coboundary columns of
the edges in reverse filtration order, which pairs the same simplices as the
triangle boundary reduction. Edges that merge two components are cleared: their
columns reduce to zero and are never built.
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from src.errors import InvalidSpec
from src.homology.diagram import PersistenceDiagram, tilt_pairs
from src.homology.point_cloud import PointCloud

logger = logging.getLogger(__name__)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        # elder rule: the component with the smaller root survives
        self.parent[max(ri, rj)] = min(ri, rj)
        return True


def _ordered_edges(dist: np.ndarray, max_scale: float) -> Tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(len(dist), k=1)
    diam = dist[i, j]
    keep = diam <= max_scale
    i, j, diam = i[keep], j[keep], diam[keep]
    order = np.lexsort((j, i, diam))
    return np.column_stack([i[order], j[order]]), diam[order]


class _Triangles:
    """
    Triangles encoded as a*n^2 + b*n + c for sorted vertices a < b < c, so the
    integer order is the lexicographic one.
    """

    def __init__(self, dist: np.ndarray, max_scale: float):
        self.dist = dist
        self.n = len(dist)
        self.max_scale = max_scale
        self.vertices = np.arange(self.n)

    def cofacets(self, a: int, b: int) -> np.ndarray:
        """Sorted codes of the triangles on edge (a, b) that enter by max_scale."""
        c = self.vertices[(self.vertices != a) & (self.vertices != b)]
        diam = np.maximum(self.dist[a, b], np.maximum(self.dist[a, c], self.dist[b, c]))
        c = c[diam <= self.max_scale]
        tri = np.sort(np.column_stack([np.full(len(c), a), np.full(len(c), b), c]), axis=1)
        return np.sort((tri[:, 0] * self.n + tri[:, 1]) * self.n + tri[:, 2])

    def diameters(self, codes: np.ndarray) -> np.ndarray:
        a, rest = np.divmod(codes, self.n * self.n)
        b, c = np.divmod(rest, self.n)
        return np.maximum(np.maximum(self.dist[a, b], self.dist[a, c]), self.dist[b, c])

    def earliest(self, codes: np.ndarray) -> Tuple[int, float]:
        """The first triangle of a non-empty column in filtration order."""
        diam = self.diameters(codes)
        value = diam.min()
        return int(codes[diam == value].min()), float(value)


def _h1_pairs(
    dist: np.ndarray,
    edges: np.ndarray,
    edge_diam: np.ndarray,
    positive: np.ndarray,
    max_scale: float,
) -> Tuple[List[Tuple[float, float]], int]:
    """Reduce the coboundary columns of the cycle-creating edges; returns finite (birth, death) pairs and the unpaired count."""
    triangles = _Triangles(dist, max_scale)
    pivots: Dict[int, np.ndarray] = {}
    pairs: List[Tuple[float, float]] = []
    unpaired = 0
    for e in positive[::-1]:
        a, b = edges[e]
        column = triangles.cofacets(int(a), int(b))
        while column.size:
            low, death = triangles.earliest(column)
            other = pivots.get(low)
            if other is None:
                break
            column = np.setxor1d(column, other, assume_unique=True)
        if not column.size:
            unpaired += 1
            continue
        pivots[low] = column
        birth = float(edge_diam[e])
        if death > birth:
            pairs.append((birth, death))
    return pairs, unpaired


def vietoris_rips_diagram(cloud: PointCloud, dim: int = 1, max_scale: Optional[float] = None) -> PersistenceDiagram:
    """
    Tilted Vietoris-Rips diagram of `cloud` in dimension 0 or 1.

    Zero-persistence pairs are dropped. Features still alive at `max_scale`
    are essential: counted in metadata["essential"] and left out of the
    points. metadata["truncated"] flags a max_scale below the cloud diameter.
    """
    if dim not in (0, 1):
        raise InvalidSpec(f"Only dimensions 0 and 1 are supported, got {dim}")
    pts = np.asarray(cloud.points, dtype=float)
    # canonical vertex order makes the result independent of the input order
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    dist = squareform(pdist(pts)) if len(pts) > 1 else np.zeros((1, 1))
    diameter = float(dist.max())
    if max_scale is None:
        max_scale = diameter if diameter > 0 else 1.0
    if max_scale <= 0:
        raise InvalidSpec(f"max_scale must be positive, got {max_scale}")

    edges, edge_diam = _ordered_edges(dist, max_scale)
    forest = _UnionFind(len(pts))
    h0_pairs: List[Tuple[float, float]] = []
    positive: List[int] = []
    for e, ((i, j), d) in enumerate(zip(edges, edge_diam)):
        if forest.union(int(i), int(j)):
            if d > 0:
                h0_pairs.append((0.0, float(d)))
        else:
            positive.append(e)
    components = len(pts) - (len(edges) - len(positive))
    metadata = {"max_scale": float(max_scale), "truncated": bool(max_scale < diameter)}

    if dim == 0:
        metadata["essential"] = components
        diagram = PersistenceDiagram(tilt_pairs(h0_pairs), homology_dimension=0)
        return PersistenceDiagram(diagram.canonical(), homology_dimension=0, metadata=metadata)

    h1_pairs, unpaired = _h1_pairs(dist, edges, edge_diam, np.array(positive, dtype=np.int64), max_scale)
    metadata["essential"] = unpaired
    logger.debug("Rips H1: %d edges, %d cycles, %d finite pairs", len(edges), len(positive), len(h1_pairs))
    diagram = PersistenceDiagram(tilt_pairs(h1_pairs), homology_dimension=1)
    return PersistenceDiagram(diagram.canonical(), homology_dimension=1, metadata=metadata)
