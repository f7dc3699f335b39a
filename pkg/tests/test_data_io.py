import numpy as np
import pytest

from riskscene.data import (
    AgentCategory,
    AgentTrack,
    GrammarBasis,
    Region,
    SemanticMap,
    SemanticRegionType,
    load_map,
    load_scene,
    load_tracks,
    occupied_region,
    save_map,
    save_tracks,
    slice_windows,
)
from riskscene.errors import ParseError, ValidationError
from riskscene.geometry import point_in_polygon

from conftest import straight_track


def write_traj(path, rows, fps=2.0):
    lines = [f"#fps={fps}"] + rows
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def rows_for(agent_id, category, frames, speed=1.0):
    return [f"{f},{agent_id},{category},{f * speed},0.0" for f in frames]


class TestWindowSlicing:
    @pytest.mark.parametrize(
        "n_frames,expected",
        [(10, 1), (11, 2), (5, 0)],
    )
    def test_window_counts(self, tmp_path, small_map, n_frames, expected):
        # oracle: enumerate valid start offsets by hand
        span = list(range(1, 1 + n_frames))
        starts = [s for s in span if s + 10 - 1 <= span[-1]]
        assert len(starts) == max(0, n_frames - 10 + 1) == expected

        track = straight_track("a0", AgentCategory.CAR, (1.0, 1.0), (1.0, 0.0),
                               n_frames, first_frame=1)
        windows = slice_windows([track], 2.0, small_map, t_obs=4, t_pred=6)
        assert len(windows) == expected

    def test_partial_agents_are_dropped(self, small_map):
        full = straight_track("full", AgentCategory.CAR, (1.0, 1.0), (1.0, 0.0), 10)
        partial = straight_track("part", AgentCategory.CAR, (1.0, 4.0), (1.0, 0.0), 5)
        windows = slice_windows([full, partial], 2.0, small_map, t_obs=4, t_pred=6)
        assert len(windows) == 1
        assert [t.agent_id for t in windows[0].tracks] == ["full"]

    def test_frame_gap_splits_spans(self, small_map):
        a = straight_track("a", AgentCategory.CAR, (1.0, 1.0), (1.0, 0.0), 10, first_frame=0)
        b = straight_track("b", AgentCategory.CAR, (1.0, 4.0), (1.0, 0.0), 10, first_frame=11)
        windows = slice_windows([a, b], 2.0, small_map, t_obs=4, t_pred=6)
        assert len(windows) == 2
        assert {w.tracks[0].agent_id for w in windows} == {"a", "b"}


class TestTrajectoryFormat:
    def test_round_trip_positions_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        tracks = [
            AgentTrack("x1", AgentCategory.PEDESTRIAN, np.arange(7),
                       rng.uniform(-50, 50, (7, 2))),
            AgentTrack("x2", AgentCategory.RIDER, np.arange(7),
                       rng.uniform(-50, 50, (7, 2))),
        ]
        path = tmp_path / "t.traj"
        save_tracks(tracks, 2.0, path)
        loaded, fps = load_tracks(path)
        assert fps == 2.0
        for orig, back in zip(tracks, loaded):
            assert orig.agent_id == back.agent_id
            assert orig.category == back.category
            assert np.array_equal(orig.positions, back.positions)

    def test_missing_header(self, tmp_path):
        p = tmp_path / "bad.traj"
        p.write_text("0,a,car,0,0\n")
        with pytest.raises(ParseError, match=":1:"):
            load_tracks(p)

    def test_error_names_line_number(self, tmp_path):
        p = tmp_path / "bad.traj"
        write_traj(p, ["0,a,car,0.0,0.0", "1,a,car,zzz,0.0"])
        with pytest.raises(ParseError, match=":3:"):
            load_tracks(p)

    def test_unknown_category(self, tmp_path):
        p = tmp_path / "bad.traj"
        write_traj(p, ["0,a,bus,0.0,0.0"])
        with pytest.raises(ParseError, match="bus"):
            load_tracks(p)

    def test_wrong_field_count(self, tmp_path):
        p = tmp_path / "bad.traj"
        write_traj(p, ["0,a,car,0.0"])
        with pytest.raises(ParseError, match="5"):
            load_tracks(p)


class TestMapFormat:
    def test_round_trip(self, tmp_path, small_map):
        p = tmp_path / "m.map"
        save_map(small_map, p)
        loaded = load_map(p)
        assert len(loaded.regions) == len(small_map.regions)
        for a, b in zip(small_map.regions, loaded.regions):
            assert a.region_id == b.region_id
            assert a.kind == b.kind
            assert np.array_equal(a.polygon, b.polygon)
        assert loaded.grammar == small_map.grammar

    def test_polygon_needs_three_vertices(self, tmp_path):
        p = tmp_path / "m.map"
        p.write_text("r0|road_segment|0 0 1 0\nedge|car|road_segment\n")
        with pytest.raises(ParseError, match=">=3"):
            load_map(p)

    def test_unknown_region_type(self, tmp_path):
        p = tmp_path / "m.map"
        p.write_text("r0|lawn|0 0 1 0 1 1\nedge|car|road_segment\n")
        with pytest.raises(ParseError, match="lawn"):
            load_map(p)

    def test_load_scene_end_to_end(self, tmp_path, small_map):
        traj = tmp_path / "s.traj"
        write_traj(traj, rows_for("a0", "car", range(10)))
        mapp = tmp_path / "s.map"
        save_map(small_map, mapp)
        windows = load_scene(traj, mapp, 4, 6)
        assert len(windows) == 1
        assert windows[0].n_agents == 1


class TestOccupiedRegion:
    def test_sidewalk_centroid(self, small_map):
        assert occupied_region((20.0, 8.5), small_map) == SemanticRegionType.SIDEWALK

    def test_off_map(self, small_map):
        assert occupied_region((-5.0, -5.0), small_map) is None

    def test_overlap_resolves_to_zebra(self, small_map):
        point = (20.0, 3.0)
        # oracle: enumerate every polygon containing the point
        containing = {
            r.kind for r in small_map.regions if point_in_polygon(point, r.polygon)
        }
        assert containing == {SemanticRegionType.ROAD_SEGMENT, SemanticRegionType.ZEBRA_REGION}
        assert occupied_region(point, small_map) == SemanticRegionType.ZEBRA_REGION


class TestTypeValidation:
    def test_track_frames_must_increase(self):
        with pytest.raises(ValidationError, match="increasing"):
            AgentTrack("a", AgentCategory.CAR, [0, 0, 1], np.zeros((3, 2)))

    def test_track_positions_finite(self):
        bad = np.array([[0.0, 0.0], [np.nan, 0.0]])
        with pytest.raises(ValidationError, match="finite"):
            AgentTrack("a", AgentCategory.CAR, [0, 1], bad)

    def test_region_rejects_self_intersection(self):
        with pytest.raises(ValidationError, match="self-intersecting"):
            Region("r", SemanticRegionType.SIDEWALK,
                   [(0, 0), (2, 2), (2, 0), (0, 2)])

    def test_grammar_rejects_unknown_kind(self):
        with pytest.raises(ValidationError, match="unknown"):
            GrammarBasis([("car", "motorway")])

    def test_grammar_membership_is_undirected(self, urban_grammar):
        assert (AgentCategory.PEDESTRIAN, SemanticRegionType.SIDEWALK) in urban_grammar
        assert (SemanticRegionType.SIDEWALK, AgentCategory.PEDESTRIAN) in urban_grammar
