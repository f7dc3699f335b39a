from .types import (
    AgentCategory,
    AgentTrack,
    GrammarBasis,
    REGION_PRIORITY,
    Region,
    SceneWindow,
    SemanticMap,
    SemanticRegionType,
    occupied_region,
    occupied_region_instance,
)
from .io import (
    load_grammar,
    load_map,
    load_scene,
    load_tracks,
    save_map,
    save_tracks,
    slice_windows,
)
from .synth import (
    ARCHETYPES,
    AgentSpec,
    SceneSpec,
    bundled_grammar,
    merge_scenario,
    parse_agent_list,
    straight_road_map,
    synthesize_dataset,
    synthesize_scene,
    synthesize_tracks,
)

__all__ = [
    "AgentCategory",
    "AgentTrack",
    "GrammarBasis",
    "REGION_PRIORITY",
    "Region",
    "SceneWindow",
    "SemanticMap",
    "SemanticRegionType",
    "occupied_region",
    "occupied_region_instance",
    "load_grammar",
    "load_map",
    "load_scene",
    "load_tracks",
    "save_map",
    "save_tracks",
    "slice_windows",
    "ARCHETYPES",
    "AgentSpec",
    "SceneSpec",
    "bundled_grammar",
    "merge_scenario",
    "parse_agent_list",
    "straight_road_map",
    "synthesize_dataset",
    "synthesize_scene",
    "synthesize_tracks",
]
