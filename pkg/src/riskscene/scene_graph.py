"""Per-frame scene graph over agents plus static semantic regions.

Nodes are 2-D center points: agent positions first, then region centroids
(polygon area-weighted). Edges are 0/1, activated by the road-scene grammar:
an edge may exist only when the two node kinds form a pair of the grammar
basis, and multi-instance types link to their nearest partner instance. The
region set may be cropped to a rectangular region of interest; frames with
fewer regions than the window maximum M are padded with zero-coordinate,
edge-free nodes so every frame shares one node count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.types import (
    GrammarBasis,
    REGION_PRIORITY,
    SceneWindow,
    SemanticMap,
)
from .geometry import point_in_polygon, polygon_centroid, polygon_intersects_rect

PADDING_KIND = "padding"

_PRIORITY_RANK = {t: r for r, t in enumerate(REGION_PRIORITY)}


@dataclass
class SceneGraph:
    nodes: np.ndarray  # (N+M, 2); agents first, centroids after, padding zeros
    edges: np.ndarray  # (N+M, N+M) in {0,1}, symmetric, zero diagonal
    node_kinds: list  # kind name per node ("car", "sidewalk", ..., "padding")
    frame_index: int

    @property
    def n_agents(self) -> int:
        return sum(1 for k in self.node_kinds if k not in _REGION_NAMES and k != PADDING_KIND)


_REGION_NAMES = {t.value for t in REGION_PRIORITY}


@dataclass
class RegionNode:
    region_id: str
    kind: object  # SemanticRegionType
    centroid: np.ndarray
    polygon: np.ndarray


def region_nodes(smap: SemanticMap, roi=None):
    """Region instances as (id, type, centroid) nodes.

    roi is (xmin, ymin, xmax, ymax) or None; regions fully outside the
    rectangle are dropped. Centroids are polygon area-weighted centers.
    """
    out = []
    for region in smap.regions:
        if roi is not None and not polygon_intersects_rect(region.polygon, roi):
            continue
        out.append(
            RegionNode(
                region_id=region.region_id,
                kind=region.kind,
                centroid=polygon_centroid(region.polygon),
                polygon=region.polygon,
            )
        )
    return out


def pad_m(per_frame_counts) -> int:
    """Shared region-node count: the maximum over the window's frames."""
    counts = list(per_frame_counts)
    if not counts:
        return 0
    return int(max(counts))


def _occupied_instance(position, regions):
    """Highest-priority region node containing the point, or None."""
    best = None
    best_rank = len(REGION_PRIORITY)
    for idx, node in enumerate(regions):
        rank = _PRIORITY_RANK[node.kind]
        if rank >= best_rank:
            continue
        if point_in_polygon(position, node.polygon):
            best = idx
            best_rank = rank
    return best


def edge_align(basis: GrammarBasis, agent_positions, agent_categories, regions):
    """Activate grammar edges for one frame.

    Region-region: every region links to its nearest instance of each
    partner type named by the basis. Agent-region: an agent links to the
    region it stands in when the (category, type) pair is in the basis,
    falling back to the nearest compatible region when off-map. Agent-agent
    edges stay zero. The result is symmetric with a zero diagonal.
    """
    agent_positions = np.asarray(agent_positions, dtype=np.float64)
    n = len(agent_positions)
    m = len(regions)
    edges = np.zeros((n + m, n + m))

    centroids = np.array([r.centroid for r in regions]).reshape(m, 2) if m else np.zeros((0, 2))
    by_kind = {}
    for idx, node in enumerate(regions):
        by_kind.setdefault(node.kind, []).append(idx)

    for kind_a, idx_a in by_kind.items():
        for kind_b, idx_b in by_kind.items():
            if (kind_a, kind_b) not in basis:
                continue
            for u in idx_a:
                candidates = [v for v in idx_b if v != u]
                if not candidates:
                    continue
                d = np.linalg.norm(centroids[candidates] - centroids[u], axis=1)
                v = candidates[int(np.argmin(d))]
                edges[n + u, n + v] = 1.0
                edges[n + v, n + u] = 1.0

    for i in range(n):
        occupied = _occupied_instance(agent_positions[i], regions)
        if occupied is not None:
            if (agent_categories[i], regions[occupied].kind) in basis:
                edges[i, n + occupied] = 1.0
                edges[n + occupied, i] = 1.0
            continue
        compatible = [
            idx for idx, node in enumerate(regions) if (agent_categories[i], node.kind) in basis
        ]
        if compatible:
            d = np.linalg.norm(centroids[compatible] - agent_positions[i], axis=1)
            v = compatible[int(np.argmin(d))]
            edges[i, n + v] = 1.0
            edges[n + v, i] = 1.0

    return edges


def build_scene_graph(window: SceneWindow, basis: GrammarBasis | None = None, roi=None):
    """Scene graphs over the observation frames with shared M padding."""
    if basis is None:
        basis = window.map.grammar
    positions = window.observed()  # (t_obs, N, 2)
    n = window.n_agents
    categories = window.categories

    per_frame_regions = [region_nodes(window.map, roi) for _ in range(window.t_obs)]
    m = pad_m(len(r) for r in per_frame_regions)

    graphs = []
    for t in range(window.t_obs):
        regions = per_frame_regions[t]
        m_t = len(regions)
        nodes = np.zeros((n + m, 2))
        nodes[:n] = positions[t]
        kinds = [c.value for c in categories]
        for idx, node in enumerate(regions):
            nodes[n + idx] = node.centroid
            kinds.append(node.kind.value)
        kinds.extend([PADDING_KIND] * (m - m_t))

        edges = np.zeros((n + m, n + m))
        edges[: n + m_t, : n + m_t] = edge_align(basis, positions[t], categories, regions)
        graphs.append(SceneGraph(nodes=nodes, edges=edges, node_kinds=kinds, frame_index=t))
    return graphs


def scene_graph_arrays(graphs):
    """Stack per-frame graphs into (T, N+M, 2) nodes and (T, V, V) edges."""
    nodes = np.stack([g.nodes for g in graphs])
    edges = np.stack([g.edges for g in graphs])
    return nodes, edges
