import numpy as np
import pytest

from riskscene.data import (
    AgentCategory,
    AgentSpec,
    AgentTrack,
    GrammarBasis,
    Region,
    SceneSpec,
    SceneWindow,
    SemanticMap,
    SemanticRegionType,
    bundled_grammar,
    slice_windows,
    synthesize_tracks,
)


@pytest.fixture(scope="session")
def urban_grammar():
    return bundled_grammar("urban_full")


@pytest.fixture()
def small_map(urban_grammar):
    """One road, one sidewalk, one zebra overlapping the road."""
    regions = [
        Region("road", SemanticRegionType.ROAD_SEGMENT,
               [(0.0, 0.0), (40.0, 0.0), (40.0, 7.0), (0.0, 7.0)]),
        Region("walk", SemanticRegionType.SIDEWALK,
               [(0.0, 7.0), (40.0, 7.0), (40.0, 10.0), (0.0, 10.0)]),
        Region("zebra", SemanticRegionType.ZEBRA_REGION,
               [(18.0, 0.0), (22.0, 0.0), (22.0, 7.0), (18.0, 7.0)]),
    ]
    return SemanticMap(regions=regions, grammar=urban_grammar)


def straight_track(agent_id, category, start, velocity, n_frames, fps=2.0, first_frame=0):
    t = np.arange(n_frames)[:, None] / fps
    positions = np.asarray(start, dtype=float) + t * np.asarray(velocity, dtype=float)
    return AgentTrack(
        agent_id=agent_id,
        category=category,
        frames=np.arange(first_frame, first_frame + n_frames),
        positions=positions,
    )


@pytest.fixture()
def two_car_window(small_map):
    """Two cars in adjacent lanes, full 10-frame window at 2 fps."""
    tracks = [
        straight_track("carA", AgentCategory.CAR, (2.0, 2.0), (3.0, 0.0), 10),
        straight_track("carB", AgentCategory.CAR, (6.0, 5.0), (2.0, 0.0), 10),
    ]
    return SceneWindow(tracks=tracks, map=small_map, t_obs=4, t_pred=6, fps=2.0)


@pytest.fixture()
def mixed_window(small_map):
    """Two cars on the road plus two pedestrians on the sidewalk."""
    tracks = [
        straight_track("carA", AgentCategory.CAR, (2.0, 2.0), (3.0, 0.0), 10),
        straight_track("carB", AgentCategory.CAR, (8.0, 5.0), (2.0, 0.0), 10),
        straight_track("pedA", AgentCategory.PEDESTRIAN, (4.0, 8.0), (1.0, 0.0), 10),
        straight_track("pedB", AgentCategory.PEDESTRIAN, (9.0, 9.0), (-1.0, 0.0), 10),
    ]
    return SceneWindow(tracks=tracks, map=small_map, t_obs=4, t_pred=6, fps=2.0)


def make_training_windows(seed=3, extra_frames=12, noise=0.0, agents=None):
    if agents is None:
        agents = [
            AgentSpec(AgentCategory.CAR, "constant_velocity"),
            AgentSpec(AgentCategory.CAR, "constant_velocity"),
            AgentSpec(AgentCategory.PEDESTRIAN, "constant_velocity"),
            AgentSpec(AgentCategory.PEDESTRIAN, "crossing"),
        ]
    spec = SceneSpec(agents=agents, noise=noise, extra_frames=extra_frames)
    tracks, smap = synthesize_tracks(spec, seed=seed)
    return slice_windows(tracks, spec.fps, smap, spec.t_obs, spec.t_pred)


SMALL_CLUSTERS = {AgentCategory.PEDESTRIAN: 2, AgentCategory.CAR: 2, AgentCategory.RIDER: 2}
