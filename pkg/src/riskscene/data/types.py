"""Core interchange types: agent tracks, semantic maps, scene windows.

Coordinates are global ground-plane positions in meters. Frame indices are
integers; the file header's fps value converts per-frame displacements to
velocities in m/s.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..geometry import point_in_polygon, polygon_is_simple


class AgentCategory(enum.Enum):
    PEDESTRIAN = "pedestrian"
    CAR = "car"
    RIDER = "rider"


class SemanticRegionType(enum.Enum):
    ROAD_SEGMENT = "road_segment"
    DRIVABLE_AREA = "drivable_area"
    ZEBRA_REGION = "zebra_region"
    CARPARK = "carpark"
    SIDEWALK = "sidewalk"
    ROAD_BLOCK = "road_block"
    ROAD_LANES = "road_lanes"
    STOP_LINES = "stop_lines"


# Most behavior-specific label wins when polygons overlap.
REGION_PRIORITY = (
    SemanticRegionType.ZEBRA_REGION,
    SemanticRegionType.STOP_LINES,
    SemanticRegionType.ROAD_LANES,
    SemanticRegionType.ROAD_SEGMENT,
    SemanticRegionType.DRIVABLE_AREA,
    SemanticRegionType.CARPARK,
    SemanticRegionType.SIDEWALK,
    SemanticRegionType.ROAD_BLOCK,
)

_PRIORITY_RANK = {t: r for r, t in enumerate(REGION_PRIORITY)}

# Any node kind name (agents + regions) -> enum member, for grammar parsing.
KIND_BY_NAME = {c.value: c for c in AgentCategory}
KIND_BY_NAME.update({t.value: t for t in SemanticRegionType})


@dataclass
class AgentTrack:
    """One agent's identity, category, and per-frame 2-D positions."""

    agent_id: str
    category: AgentCategory
    frames: np.ndarray  # (L,) int
    positions: np.ndarray  # (L, 2) float64

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.int64)
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.frames.ndim != 1 or self.positions.shape != (len(self.frames), 2):
            raise ValidationError(
                f"track {self.agent_id}: frames/positions shape mismatch "
                f"({self.frames.shape} vs {self.positions.shape})"
            )
        if len(self.frames) and np.any(np.diff(self.frames) <= 0):
            raise ValidationError(f"track {self.agent_id}: frame indices not strictly increasing")
        if not np.all(np.isfinite(self.positions)):
            raise ValidationError(f"track {self.agent_id}: non-finite position")

    def covers(self, first_frame: int, length: int) -> bool:
        """True when the track has every frame in [first_frame, first_frame+length)."""
        wanted = np.arange(first_frame, first_frame + length)
        return bool(np.isin(wanted, self.frames).all())

    def window_positions(self, first_frame: int, length: int) -> np.ndarray:
        idx = np.searchsorted(self.frames, np.arange(first_frame, first_frame + length))
        return self.positions[idx]


@dataclass
class Region:
    region_id: str
    kind: SemanticRegionType
    polygon: np.ndarray  # (V, 2)

    def __post_init__(self):
        self.polygon = np.asarray(self.polygon, dtype=np.float64)
        if self.polygon.ndim != 2 or self.polygon.shape[1] != 2 or len(self.polygon) < 3:
            raise ValidationError(
                f"region {self.region_id}: polygon needs >=3 (x, y) vertices, "
                f"got shape {self.polygon.shape}"
            )
        if not np.all(np.isfinite(self.polygon)):
            raise ValidationError(f"region {self.region_id}: non-finite vertex")
        if not polygon_is_simple(self.polygon):
            raise ValidationError(f"region {self.region_id}: polygon is self-intersecting")


class GrammarBasis:
    """Undirected type-pair set over agent categories and region types.

    The basis is the prior adjacency of the road scene (which kinds of nodes
    may ever be linked); per-frame scene graphs activate a subset of it.
    """

    def __init__(self, pairs):
        canon = set()
        for a, b in pairs:
            a = _as_kind(a)
            b = _as_kind(b)
            canon.add(frozenset((a.value, b.value)) if a != b else frozenset((a.value,)))
        if not canon:
            raise ValidationError("grammar basis is empty")
        self._pairs = frozenset(canon)

    def __contains__(self, pair) -> bool:
        a, b = pair
        a = _as_kind(a)
        b = _as_kind(b)
        key = frozenset((a.value, b.value)) if a != b else frozenset((a.value,))
        return key in self._pairs

    def __len__(self):
        return len(self._pairs)

    def __eq__(self, other):
        return isinstance(other, GrammarBasis) and self._pairs == other._pairs

    def pairs(self):
        """Sorted (name_a, name_b) tuples, for serialization."""
        out = []
        for p in self._pairs:
            names = sorted(p)
            out.append((names[0], names[-1]))
        return sorted(out)

    def region_types(self):
        present = set()
        for a, b in self.pairs():
            for name in (a, b):
                kind = KIND_BY_NAME[name]
                if isinstance(kind, SemanticRegionType):
                    present.add(kind)
        return present


def _as_kind(value):
    if isinstance(value, (AgentCategory, SemanticRegionType)):
        return value
    try:
        return KIND_BY_NAME[str(value)]
    except KeyError:
        raise ValidationError(f"unknown semantic kind {value!r}") from None


@dataclass
class SemanticMap:
    regions: list  # list[Region]
    grammar: GrammarBasis

    def regions_of(self, kind: SemanticRegionType):
        return [r for r in self.regions if r.kind == kind]


def occupied_region(position, smap: SemanticMap):
    """Semantic type occupied at a ground-plane point, or None when off-map.

    Overlapping polygons resolve by REGION_PRIORITY (most behavior-specific
    label wins).
    """
    kind, _ = occupied_region_instance(position, smap)
    return kind


def occupied_region_instance(position, smap: SemanticMap):
    """(type, Region) of the highest-priority polygon containing the point.

    Ties within one priority rank resolve to the region listed first.
    Returns (None, None) when no polygon contains the point.
    """
    best = None
    best_rank = len(REGION_PRIORITY)
    for region in smap.regions:
        rank = _PRIORITY_RANK[region.kind]
        if rank >= best_rank:
            continue
        if point_in_polygon(position, region.polygon):
            best = region
            best_rank = rank
    if best is None:
        return None, None
    return best.kind, best


@dataclass
class SceneWindow:
    """Tracks restricted to one (observation, future) span plus the map."""

    tracks: list  # list[AgentTrack], every track covers the full span
    map: SemanticMap
    t_obs: int
    t_pred: int
    fps: float
    first_frame: int = 0
    _positions: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.t_obs < 1 or self.t_pred < 1:
            raise ValidationError("t_obs and t_pred must be >= 1")
        if len(self.tracks) < 1:
            raise ValidationError("a scene window needs at least one agent")
        length = self.t_obs + self.t_pred
        for tr in self.tracks:
            if not tr.covers(self.first_frame, length):
                raise ValidationError(
                    f"track {tr.agent_id} does not cover window frames "
                    f"[{self.first_frame}, {self.first_frame + length})"
                )

    @property
    def n_agents(self) -> int:
        return len(self.tracks)

    @property
    def categories(self):
        return [tr.category for tr in self.tracks]

    def positions(self) -> np.ndarray:
        """(t_obs + t_pred, N, 2) positions over the window."""
        if self._positions is None:
            length = self.t_obs + self.t_pred
            cols = [tr.window_positions(self.first_frame, length) for tr in self.tracks]
            self._positions = np.stack(cols, axis=1)
        return self._positions

    def observed(self) -> np.ndarray:
        return self.positions()[: self.t_obs]

    def future(self) -> np.ndarray:
        return self.positions()[self.t_obs :]
