"""Text format for sampled forecasts.

Header lines carry the resolved config hash and the sample count; data lines
are ``window,draw,agent,frame,x,y`` with ``frame`` the 1-based future frame
offset. Floats use repr() so values round-trip bit-exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError


def write_forecasts(path, per_window, config_hash: str, h: int, t_pred: int):
    """per_window: list of (agent_ids, samples) with samples (h, N, T_pred, 2)."""
    path = Path(path)
    lines = [
        f"#config_hash={config_hash}",
        f"#h={h}",
        f"#t_pred={t_pred}",
        "#columns=window,draw,agent,frame,x,y",
    ]
    for w_idx, (agent_ids, samples) in enumerate(per_window):
        n_draws, n_agents, t_len, _ = samples.shape
        for draw in range(n_draws):
            for a_idx in range(n_agents):
                for t in range(t_len):
                    x, y = samples[draw, a_idx, t]
                    lines.append(
                        f"{w_idx},{draw},{agent_ids[a_idx]},{t + 1},{float(x)!r},{float(y)!r}"
                    )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_forecasts(path):
    """Returns (meta, {window_index: {agent_id: (h, T_pred, 2) array}})."""
    path = Path(path)
    meta = {}
    rows = {}
    for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" in line:
                key, value = line[1:].split("=", 1)
                meta[key] = value
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(path, ln, f"expected 6 fields, got {len(parts)}")
        try:
            w_idx = int(parts[0])
            draw = int(parts[1])
            frame = int(parts[3])
            x, y = float(parts[4]), float(parts[5])
        except ValueError:
            raise ParseError(path, ln, "bad numeric field") from None
        rows.setdefault(w_idx, {}).setdefault(parts[2], {})[(draw, frame)] = (x, y)

    try:
        h = int(meta["h"])
        t_pred = int(meta["t_pred"])
    except (KeyError, ValueError):
        raise ParseError(path, 1, "missing or bad '#h=' / '#t_pred=' header") from None

    out = {}
    for w_idx, agents in rows.items():
        out[w_idx] = {}
        for agent_id, cells in agents.items():
            arr = np.zeros((h, t_pred, 2))
            for (draw, frame), (x, y) in cells.items():
                if not (0 <= draw < h and 1 <= frame <= t_pred):
                    raise ParseError(path, 1, f"draw/frame out of range for agent {agent_id!r}")
                arr[draw, frame - 1] = (x, y)
            out[w_idx][agent_id] = arr
    return meta, out
