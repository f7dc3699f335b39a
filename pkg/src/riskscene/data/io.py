"""Text interchange formats and window slicing.

Trajectory file (UTF-8, one record per line)::

    #fps=2.0
    frame,agent_id,category,x,y

with frame an integer, category one of pedestrian/car/rider, x/y decimal
meters. Lines starting with '#' after the header are comments.

Map file (pipe-separated)::

    crossing1|zebra_region|28.0 0.0 32.0 0.0 32.0 7.0 28.0 7.0
    edge|pedestrian|zebra_region

Region lines are ``region_id|type|x1 y1 x2 y2 ...`` (>=3 vertices); grammar
lines start with the reserved word ``edge``. Floats are written with repr()
so a save/load round trip is bit-exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError
from .types import (
    AgentCategory,
    AgentTrack,
    GrammarBasis,
    Region,
    SceneWindow,
    SemanticMap,
    SemanticRegionType,
)

_CATEGORY_BY_NAME = {c.value: c for c in AgentCategory}
_REGION_BY_NAME = {t.value: t for t in SemanticRegionType}


def load_tracks(path):
    """Parse a trajectory file into (tracks, fps)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#fps="):
        raise ParseError(path, 1, "expected '#fps=<float>' header")
    try:
        fps = float(lines[0][5:])
    except ValueError:
        raise ParseError(path, 1, f"bad fps value {lines[0][5:]!r}") from None
    if not np.isfinite(fps) or fps <= 0:
        raise ParseError(path, 1, f"fps must be positive, got {fps}")

    raw = {}  # agent_id -> (category, [(frame, x, y)])
    for ln, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(path, ln, f"expected 5 comma-separated fields, got {len(parts)}")
        frame_s, agent_id, category_s, x_s, y_s = (p.strip() for p in parts)
        try:
            frame = int(frame_s)
        except ValueError:
            raise ParseError(path, ln, f"bad frame index {frame_s!r}") from None
        if category_s not in _CATEGORY_BY_NAME:
            raise ParseError(path, ln, f"unknown category {category_s!r}")
        try:
            x, y = float(x_s), float(y_s)
        except ValueError:
            raise ParseError(path, ln, f"bad coordinate pair ({x_s!r}, {y_s!r})") from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ParseError(path, ln, "non-finite coordinate")
        cat = _CATEGORY_BY_NAME[category_s]
        if agent_id in raw and raw[agent_id][0] != cat:
            raise ParseError(path, ln, f"agent {agent_id!r} changes category")
        raw.setdefault(agent_id, (cat, []))[1].append((frame, x, y))

    tracks = []
    for agent_id in sorted(raw):
        cat, rows = raw[agent_id]
        rows.sort(key=lambda r: r[0])
        frames = [r[0] for r in rows]
        if len(set(frames)) != len(frames):
            raise ValidationError(f"agent {agent_id!r} has duplicate frames in {path}")
        tracks.append(
            AgentTrack(
                agent_id=agent_id,
                category=cat,
                frames=np.array(frames, dtype=np.int64),
                positions=np.array([(r[1], r[2]) for r in rows], dtype=np.float64),
            )
        )
    return tracks, fps


def save_tracks(tracks, fps, path):
    path = Path(path)
    out = [f"#fps={fps!r}"]
    rows = []
    for tr in tracks:
        for frame, (x, y) in zip(tr.frames, tr.positions):
            rows.append((int(frame), tr.agent_id, tr.category.value, float(x), float(y)))
    rows.sort(key=lambda r: (r[0], r[1]))
    for frame, agent_id, cat, x, y in rows:
        out.append(f"{frame},{agent_id},{cat},{x!r},{y!r}")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def load_map(path) -> SemanticMap:
    path = Path(path)
    regions = []
    pairs = []
    for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("|")
        if parts[0] == "edge":
            if len(parts) != 3:
                raise ParseError(path, ln, "grammar line must be 'edge|type_a|type_b'")
            try:
                pairs.append((parts[1].strip(), parts[2].strip()))
            except ValidationError as exc:
                raise ParseError(path, ln, str(exc)) from None
            continue
        if len(parts) != 3:
            raise ParseError(path, ln, "region line must be 'region_id|type|x1 y1 x2 y2 ...'")
        region_id, type_s, coord_s = (p.strip() for p in parts)
        if type_s not in _REGION_BY_NAME:
            raise ParseError(path, ln, f"unknown region type {type_s!r}")
        try:
            vals = [float(v) for v in coord_s.split()]
        except ValueError:
            raise ParseError(path, ln, "bad coordinate list") from None
        if len(vals) % 2 != 0:
            raise ParseError(path, ln, "odd number of coordinates")
        if len(vals) < 6:
            raise ParseError(path, ln, f"polygon needs >=3 vertices, got {len(vals) // 2}")
        poly = np.array(vals, dtype=np.float64).reshape(-1, 2)
        try:
            regions.append(Region(region_id, _REGION_BY_NAME[type_s], poly))
        except ValidationError as exc:
            raise ParseError(path, ln, str(exc)) from None
    try:
        grammar = GrammarBasis(pairs)
    except ValidationError as exc:
        raise ParseError(path, 1, str(exc)) from None
    return SemanticMap(regions=regions, grammar=grammar)


def save_map(smap: SemanticMap, path):
    path = Path(path)
    out = []
    for region in smap.regions:
        coords = " ".join(f"{float(v)!r}" for v in region.polygon.ravel())
        out.append(f"{region.region_id}|{region.kind.value}|{coords}")
    for a, b in smap.grammar.pairs():
        out.append(f"edge|{a}|{b}")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def load_grammar(path) -> GrammarBasis:
    """Standalone grammar file: 'edge|a|b' (or bare 'a|b') lines."""
    path = Path(path)
    pairs = []
    for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|")]
        if parts and parts[0] == "edge":
            parts = parts[1:]
        if len(parts) != 2:
            raise ParseError(path, ln, "grammar line must name two kinds")
        pairs.append((parts[0], parts[1]))
    try:
        return GrammarBasis(pairs)
    except ValidationError as exc:
        raise ParseError(path, 1, str(exc)) from None


def _contiguous_spans(frames: np.ndarray):
    """Maximal runs of consecutive frame indices in a sorted unique array."""
    if len(frames) == 0:
        return []
    breaks = np.nonzero(np.diff(frames) > 1)[0]
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(frames) - 1]))
    return [(int(frames[s]), int(frames[e])) for s, e in zip(starts, ends)]


def slice_windows(tracks, fps, smap, t_obs, t_pred):
    """Stride-1 windows over every contiguous frame span of the log.

    Agents not covering a window are dropped from it; windows left with no
    agents are skipped.
    """
    length = t_obs + t_pred
    all_frames = np.unique(np.concatenate([tr.frames for tr in tracks])) if tracks else np.array([])
    windows = []
    for span_start, span_end in _contiguous_spans(all_frames):
        for first in range(span_start, span_end - length + 2):
            covering = [tr for tr in tracks if tr.covers(first, length)]
            if not covering:
                continue
            clipped = []
            for tr in covering:
                clipped.append(
                    AgentTrack(
                        agent_id=tr.agent_id,
                        category=tr.category,
                        frames=np.arange(first, first + length),
                        positions=tr.window_positions(first, length),
                    )
                )
            windows.append(
                SceneWindow(
                    tracks=clipped,
                    map=smap,
                    t_obs=t_obs,
                    t_pred=t_pred,
                    fps=fps,
                    first_frame=first,
                )
            )
    return windows


def load_scene(trajectory_file, map_file, t_obs, t_pred):
    """Load both files and slice (observation, future) windows."""
    tracks, fps = load_tracks(trajectory_file)
    smap = load_map(map_file)
    return slice_windows(tracks, fps, smap, t_obs, t_pred)
