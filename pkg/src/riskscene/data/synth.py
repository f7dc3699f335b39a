"""Deterministic synthetic scenes for tests and desk-scale training.

Each agent follows one motion archetype exactly (straight line, arc,
deceleration, or a crossing walk); Gaussian jitter is added afterwards when
``noise > 0``. Identical (spec, seed) pairs produce identical scenes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..errors import ValidationError
from .io import load_grammar
from .types import (
    AgentCategory,
    AgentTrack,
    GrammarBasis,
    Region,
    SceneWindow,
    SemanticMap,
    SemanticRegionType,
    occupied_region,
)

ARCHETYPES = ("constant_velocity", "turn", "stop", "crossing")

_DEFAULT_SPEED = {
    AgentCategory.CAR: 3.0,
    AgentCategory.RIDER: 2.2,
    AgentCategory.PEDESTRIAN: 1.2,
}

# Straight-road template geometry (meters).
ROAD_Y = (0.0, 7.0)
SIDEWALK_Y = (7.0, 10.0)
ZEBRA_X = (28.0, 32.0)


def bundled_grammar(name: str) -> GrammarBasis:
    """Load one of the grammars shipped with the package.

    Known names: 'urban_full', 'highway_simple'.
    """
    ref = resources.files("riskscene.grammars").joinpath(f"{name}.grammar")
    with resources.as_file(ref) as path:
        return load_grammar(path)


@dataclass
class AgentSpec:
    category: AgentCategory
    archetype: str
    speed: float = None

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValidationError(
                f"unknown archetype {self.archetype!r}; expected one of {ARCHETYPES}"
            )
        if self.archetype == "crossing" and self.category != AgentCategory.PEDESTRIAN:
            raise ValidationError("the crossing archetype is pedestrian-only")


@dataclass
class SceneSpec:
    agents: list  # list[AgentSpec]
    t_obs: int = 4
    t_pred: int = 6
    fps: float = 2.0
    noise: float = 0.0
    extra_frames: int = 0
    map_template: str = "straight_road"
    grammar: GrammarBasis = field(default=None)

    def __post_init__(self):
        if len(self.agents) == 0:
            raise ValidationError("scene spec requests zero agents")
        if self.noise < 0:
            raise ValidationError("noise level must be >= 0")
        if self.grammar is None:
            self.grammar = bundled_grammar("urban_full")

    @property
    def n_frames(self):
        return self.t_obs + self.t_pred + self.extra_frames


def parse_agent_list(text: str):
    """Parse 'car:constant_velocity,pedestrian:crossing,...' into AgentSpecs."""
    cats = {c.value: c for c in AgentCategory}
    agents = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ValidationError(f"agent entry {item!r} must be 'category:archetype'")
        cat_s, arch = (p.strip() for p in item.split(":", 1))
        if cat_s not in cats:
            raise ValidationError(f"unknown category {cat_s!r}")
        agents.append(AgentSpec(category=cats[cat_s], archetype=arch))
    return agents


def straight_road_map(length: float, grammar: GrammarBasis) -> SemanticMap:
    """Straight road with sidewalk, a zebra crossing, stop lines and a carpark."""
    y0, y1 = ROAD_Y
    regions = [
        Region("road", SemanticRegionType.ROAD_SEGMENT,
               [(0.0, y0), (length, y0), (length, y1), (0.0, y1)]),
        Region("drive", SemanticRegionType.DRIVABLE_AREA,
               [(0.0, y0 + 0.5), (length, y0 + 0.5), (length, y1 - 0.5), (0.0, y1 - 0.5)]),
        Region("walk", SemanticRegionType.SIDEWALK,
               [(0.0, SIDEWALK_Y[0]), (length, SIDEWALK_Y[0]),
                (length, SIDEWALK_Y[1]), (0.0, SIDEWALK_Y[1])]),
        Region("zebra", SemanticRegionType.ZEBRA_REGION,
               [(ZEBRA_X[0], y0), (ZEBRA_X[1], y0), (ZEBRA_X[1], y1), (ZEBRA_X[0], y1)]),
        Region("stop", SemanticRegionType.STOP_LINES,
               [(26.0, y0), (27.0, y0), (27.0, y1), (26.0, y1)]),
        Region("park", SemanticRegionType.CARPARK,
               [(46.0, -6.0), (56.0, -6.0), (56.0, 0.0), (46.0, 0.0)]),
    ]
    return SemanticMap(regions=regions, grammar=grammar)


def _archetype_path(agent: AgentSpec, index: int, spec: SceneSpec, rng) -> np.ndarray:
    """Exact (n_frames, 2) path for one agent, before noise."""
    n = spec.n_frames
    dt = 1.0 / spec.fps
    speed = agent.speed if agent.speed is not None else _DEFAULT_SPEED[agent.category]
    t = np.arange(n)[:, None] * dt

    if agent.archetype == "crossing":
        x0 = 0.5 * (ZEBRA_X[0] + ZEBRA_X[1]) + rng.uniform(-1.0, 1.0)
        start = np.array([x0, 8.5])
        direction = np.array([0.0, -1.0])
        return start + t * speed * direction

    if agent.category == AgentCategory.PEDESTRIAN:
        start = np.array([5.0 + 6.0 * index + rng.uniform(0.0, 2.0), rng.uniform(7.4, 9.6)])
        direction = np.array([1.0 if index % 2 == 0 else -1.0, 0.0])
    elif agent.category == AgentCategory.RIDER:
        start = np.array([3.0 + 6.0 * index + rng.uniform(0.0, 2.0), 6.2])
        direction = np.array([1.0, 0.0])
    else:  # car
        lane = 2.2 if index % 2 == 0 else 4.8
        start = np.array([3.0 + 7.0 * index + rng.uniform(0.0, 2.0), lane])
        direction = np.array([1.0, 0.0])

    if agent.archetype == "constant_velocity":
        return start + t * speed * direction

    if agent.archetype == "stop":
        # linear deceleration, at rest after the observation horizon
        steps = speed * dt * np.clip(1.0 - np.arange(n) / max(spec.t_obs + 1, 1), 0.0, 1.0)
        dist = np.concatenate(([0.0], np.cumsum(steps[:-1])))
        return start + dist[:, None] * direction

    # gentle arc (left turn around a far center keeps the agent on the road)
    radius = 25.0
    heading = np.arctan2(direction[1], direction[0])
    omega = speed / radius * dt
    angles = heading + omega * np.arange(n)
    center = start + radius * np.array([-np.sin(heading), np.cos(heading)])
    return center + radius * np.stack([np.sin(angles), -np.cos(angles)], axis=1)


def synthesize_tracks(spec: SceneSpec, seed: int, first_frame: int = 0, id_prefix: str = ""):
    """One scene's tracks plus its map; deterministic in (spec, seed)."""
    rng = np.random.default_rng(seed)
    max_travel = max(
        (a.speed if a.speed is not None else _DEFAULT_SPEED[a.category]) for a in spec.agents
    ) * spec.n_frames / spec.fps
    length = max(60.0, 20.0 + 7.0 * len(spec.agents) + max_travel)
    smap = straight_road_map(length, spec.grammar)

    counters = {cat: 0 for cat in AgentCategory}
    tracks = []
    for k, agent in enumerate(spec.agents):
        index = counters[agent.category]
        counters[agent.category] += 1
        path = _archetype_path(agent, index, spec, rng)
        if spec.noise > 0:
            path = path + rng.normal(0.0, spec.noise, size=path.shape)
        track = AgentTrack(
            agent_id=f"{id_prefix}a{k:02d}_{agent.category.value}",
            category=agent.category,
            frames=np.arange(first_frame, first_frame + spec.n_frames),
            positions=path,
        )
        start_region = occupied_region(path[0], smap)
        if start_region is None or (agent.category, start_region) not in spec.grammar:
            raise ValidationError(
                f"agent {track.agent_id} starts in {start_region}, which the grammar "
                f"does not allow for {agent.category.value}"
            )
        tracks.append(track)
    return tracks, smap


def synthesize_scene(spec: SceneSpec, seed: int) -> SceneWindow:
    """Single (observation, future) window; extra_frames is ignored."""
    one = SceneSpec(
        agents=spec.agents,
        t_obs=spec.t_obs,
        t_pred=spec.t_pred,
        fps=spec.fps,
        noise=spec.noise,
        extra_frames=0,
        map_template=spec.map_template,
        grammar=spec.grammar,
    )
    tracks, smap = synthesize_tracks(one, seed)
    return SceneWindow(
        tracks=tracks, map=smap, t_obs=spec.t_obs, t_pred=spec.t_pred, fps=spec.fps
    )


def synthesize_dataset(spec: SceneSpec, seed: int, n_scenes: int):
    """Several frame-disjoint scenes sharing one map (one trajectory log).

    Scenes are separated by a missing frame so stride-1 slicing never builds
    a window across scene boundaries.
    """
    if n_scenes < 1:
        raise ValidationError("n_scenes must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(n_scenes)
    all_tracks = []
    smap = None
    stride = spec.n_frames + 1
    for s in range(n_scenes):
        scene_seed = int(seeds[s].generate_state(1)[0])
        tracks, smap = synthesize_tracks(
            spec, scene_seed, first_frame=s * stride, id_prefix=f"s{s:03d}_"
        )
        all_tracks.extend(tracks)
    return all_tracks, smap


def merge_scenario(t_obs: int = 4, t_pred: int = 6, fps: float = 2.0) -> SceneWindow:
    """Two cars closing in on the same lane at constant speeds.

    The rear car runs 4 m/s, the lead car 2 m/s, starting 12 m apart, so the
    gap shrinks by exactly 1 m per frame at 2 fps and the pair stays inside
    the 12 m interaction radius for the whole window.
    """
    n = t_obs + t_pred
    dt = 1.0 / fps
    t = np.arange(n)[:, None] * dt
    lane_y = 3.5
    rear = np.hstack([0.0 + 4.0 * t, np.full((n, 1), lane_y)])
    lead = np.hstack([12.0 + 2.0 * t, np.full((n, 1), lane_y)])
    grammar = bundled_grammar("urban_full")
    smap = straight_road_map(80.0, grammar)
    tracks = [
        AgentTrack("rear_car", AgentCategory.CAR, np.arange(n), rear),
        AgentTrack("lead_car", AgentCategory.CAR, np.arange(n), lead),
    ]
    return SceneWindow(tracks=tracks, map=smap, t_obs=t_obs, t_pred=t_pred, fps=fps)
