"""Per-frame collision-risk graph over road agents.

Nodes carry 64-d embeddings built from location, speed and heading (each
attribute embedded together with the mean of its values over the agent's
neighbors within 12 m). Directed edge weights multiply up to five factors:

  * a learned pairwise relation scalar in (0, 1) from both node embeddings,
    optionally extended with the agents' moving-pattern cluster indices,
  * an occupied-semantics indicator (1 iff both agents stand on the same
    canonical region class; zebra and the road-like types count as road),
  * a forward-view indicator (1 iff the partner sits in the subject's
    forward half-plane),
  * the reciprocal time-to-collision along the connecting line,
  * an inclusive 12 m neighborhood gate.

The edge matrix is not required to be symmetric: the forward-view factor
uses the subject's own heading.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .data.types import SceneWindow, SemanticRegionType, occupied_region
from .errors import ConfigError, ValidationError
from .nn import tensor as tz
from .patterns import PatternModel, assign_pattern

NEIGHBOR_RADIUS = 12.0
EDGE_CAP = 1e6
TTC_DENOM_EPS = 1e-6

# Region types treated as one "road" class for the occupied-semantics factor.
ROAD_LIKE = {
    SemanticRegionType.ZEBRA_REGION,
    SemanticRegionType.ROAD_SEGMENT,
    SemanticRegionType.DRIVABLE_AREA,
    SemanticRegionType.ROAD_LANES,
    SemanticRegionType.STOP_LINES,
}

NODE_EMBED_DIM = 64
ATTR_EMBED_DIM = 128
ATTRIBUTE_CHANNELS = ("lx", "ly", "vm", "va")


@dataclass(frozen=True)
class AgentAttributes:
    lx: float
    ly: float
    vm: float  # speed magnitude, m/s
    va: float  # velocity angle, radians in (-pi, pi]; equals the moving angle

    @property
    def alpha(self) -> float:
        return self.va


@dataclass(frozen=True)
class RiskMetricSwitches:
    nrr: bool = True
    mpr: bool = True
    ttc: bool = True
    mdr: bool = True
    osr: bool = True

    def __post_init__(self):
        if not self.nrr:
            raise ValidationError("the node-representation relation is the baseline and stays on")

    def names(self):
        return [n for n in ("nrr", "mpr", "ttc", "mdr", "osr") if getattr(self, n)]

    @classmethod
    def from_names(cls, text: str) -> "RiskMetricSwitches":
        wanted = {t.strip() for t in text.split(",") if t.strip()}
        known = {"nrr", "mpr", "ttc", "mdr", "osr"}
        unknown = wanted - known
        if unknown:
            raise ConfigError(f"unknown risk metrics {sorted(unknown)}; known: {sorted(known)}")
        wanted.add("nrr")
        return cls(**{name: name in wanted for name in known})

    @staticmethod
    def ablation_presets():
        """The five cumulative metric combinations used in ablations."""
        return [
            RiskMetricSwitches(mpr=False, ttc=False, mdr=False, osr=False),
            RiskMetricSwitches(ttc=False, mdr=False, osr=False),
            RiskMetricSwitches(mdr=False, osr=False),
            RiskMetricSwitches(osr=False),
            RiskMetricSwitches(),
        ]


@dataclass
class RiskGraph:
    node_embeddings: np.ndarray  # (N, 64)
    edge_matrix: np.ndarray  # (N, N), nonnegative, zero diagonal
    frame_index: int


# ---------------------------------------------------------------------------
# kinematics and the closed-form risk factors

def window_velocities(positions: np.ndarray, fps: float) -> np.ndarray:
    """Backward-difference velocities (m/s); the first frame uses forward."""
    v = np.empty_like(positions)
    v[1:] = (positions[1:] - positions[:-1]) * fps
    v[0] = (positions[1] - positions[0]) * fps
    return v


def window_attributes(positions: np.ndarray, fps: float):
    """(speed, angle) arrays over a (T, N, 2) position block; zero speed
    maps to angle 0 by convention."""
    v = window_velocities(positions, fps)
    vm = np.linalg.norm(v, axis=-1)
    va = np.where(vm > 0.0, np.arctan2(v[..., 1], v[..., 0]), 0.0)
    return vm, va


def agent_attributes(track, frame: int, fps: float) -> AgentAttributes:
    """Attributes of one agent at one of its frames."""
    pos_idx = int(np.searchsorted(track.frames, frame))
    if pos_idx >= len(track.frames) or track.frames[pos_idx] != frame:
        raise ValidationError(f"track {track.agent_id} has no frame {frame}")
    if pos_idx > 0:
        delta = track.positions[pos_idx] - track.positions[pos_idx - 1]
    else:
        delta = track.positions[1] - track.positions[0]
    v = delta * fps
    vm = float(np.linalg.norm(v))
    va = float(np.arctan2(v[1], v[0])) if vm > 0.0 else 0.0
    return AgentAttributes(lx=float(track.positions[pos_idx][0]),
                           ly=float(track.positions[pos_idx][1]), vm=vm, va=va)


def neighborhood(positions_frame: np.ndarray, i: int, radius: float = NEIGHBOR_RADIUS):
    """Indices of agents within the radius (inclusive), nearest first."""
    d = np.linalg.norm(positions_frame - positions_frame[i], axis=1)
    others = [j for j in range(len(positions_frame)) if j != i and d[j] <= radius]
    return sorted(others, key=lambda j: (d[j], j))


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = (angle + np.pi) % (2.0 * np.pi) - np.pi
    return np.pi if wrapped == -np.pi else float(wrapped)


def ttc_seconds(p_i, p_j, vm_i: float, alpha: float, vm_j: float, beta: float) -> float:
    """Projected seconds until the agents meet along their connecting line.

    Closing speed is the difference of the speed components projected on the
    line from i to j; a closing speed under 1e-6 m/s yields +inf (no
    collision course), coincident positions yield 0.
    """
    p_i = np.asarray(p_i, dtype=np.float64)
    p_j = np.asarray(p_j, dtype=np.float64)
    dist = float(np.linalg.norm(p_j - p_i))
    if dist == 0.0:
        return 0.0
    gamma = float(np.arctan2(p_j[1] - p_i[1], p_j[0] - p_i[0]))
    denom = abs(vm_i * np.cos(abs(alpha - gamma)) - vm_j * np.cos(abs(beta - gamma)))
    if denom < TTC_DENOM_EPS:
        return float("inf")
    return dist / denom


def ttc_risk_factor(ttc: float) -> float:
    """1/|T| with the singularities clamped: inf -> 0, 0 -> EDGE_CAP."""
    if ttc == 0.0:
        return EDGE_CAP
    if np.isinf(ttc):
        return 0.0
    return min(1.0 / ttc, EDGE_CAP)


def mdr(alpha: float, gamma: float) -> int:
    """1 iff the partner direction gamma lies in the subject's forward
    half-plane around its moving angle alpha (inclusive at +-pi/2)."""
    return 1 if abs(wrap_angle(gamma - alpha)) <= np.pi / 2 + 1e-12 else 0


def canonical_region_class(kind):
    if kind is None:
        return None
    return "road" if kind in ROAD_LIKE else kind.value


def osr(kind_i, kind_j) -> int:
    """1 iff both agents occupy the same canonical region class.

    Off-map (None) matches nothing, including another None.
    """
    a = canonical_region_class(kind_i)
    b = canonical_region_class(kind_j)
    if a is None or b is None:
        return 0
    return 1 if a == b else 0


def combine_risk_factors(pattern_relation: float, switches: RiskMetricSwitches,
                         osr_value: float = 1.0, mdr_value: float = 1.0,
                         ttc_factor: float = 1.0) -> float:
    """Product of the enabled factors, capped at EDGE_CAP."""
    e = float(pattern_relation)
    if switches.osr:
        e *= osr_value
    if switches.mdr:
        e *= mdr_value
    if switches.ttc:
        e *= ttc_factor
    return min(e, EDGE_CAP)


# ---------------------------------------------------------------------------
# constant (non-learned) inputs for one window

@dataclass
class RiskInputs:
    """Everything the learnable stack needs for one window's selected frames."""

    att_inputs: np.ndarray  # (T, N, 4, 2): own value + neighbor mean per channel
    gates: np.ndarray  # (T, N, N): product of enabled closed-form factors
    onehots: np.ndarray  # (N, max_k) cluster one-hots (zeros when disabled)
    frame_indices: np.ndarray  # (T,), indices into the window
    positions: np.ndarray = dc_field(default=None)


def _frame_slice(window: SceneWindow, frames: str):
    if frames == "obs":
        return np.arange(window.t_obs)
    if frames == "future":
        return np.arange(window.t_obs, window.t_obs + window.t_pred)
    if frames == "all":
        return np.arange(window.t_obs + window.t_pred)
    raise ValidationError(f"unknown frame selection {frames!r}")


def prepare_risk_inputs(window: SceneWindow, patterns: PatternModel | None,
                        switches: RiskMetricSwitches, frames: str = "obs") -> RiskInputs:
    positions = window.positions()  # (T_total, N, 2)
    vm, va = window_attributes(positions, window.fps)
    sel = _frame_slice(window, frames)
    n = window.n_agents

    # location channels enter the MLPs in a window-local frame (anchored at
    # the mean last-observed position) so input magnitudes stay comparable
    # across scenes; the closed-form factors below use raw coordinates.
    origin = positions[window.t_obs - 1].mean(axis=0)
    att_raw = np.stack(
        [positions[..., 0] - origin[0], positions[..., 1] - origin[1], vm, va], axis=-1
    )  # (T_total, N, 4)

    dists = np.linalg.norm(positions[:, :, None, :] - positions[:, None, :, :], axis=-1)
    neighbor_mask = (dists <= NEIGHBOR_RADIUS) & ~np.eye(n, dtype=bool)[None]

    att_inputs = np.zeros((len(sel), n, 4, 2))
    gates = np.ones((len(sel), n, n))

    # occupied region class per agent per selected frame
    if switches.osr:
        region_kinds = [
            [occupied_region(positions[t, i], window.map) for i in range(n)] for t in sel
        ]

    for out_t, t in enumerate(sel):
        for i in range(n):
            att_inputs[out_t, i, :, 0] = att_raw[t, i]
            nbrs = np.nonzero(neighbor_mask[t, i])[0]
            if len(nbrs):
                att_inputs[out_t, i, :, 1] = att_raw[t, nbrs].mean(axis=0)
            else:
                att_inputs[out_t, i, :, 1] = att_raw[t, i]
        for i in range(n):
            for j in range(n):
                if i == j:
                    gates[out_t, i, j] = 0.0
                    continue
                if dists[t, i, j] > NEIGHBOR_RADIUS:
                    gates[out_t, i, j] = 0.0
                    continue
                g = 1.0
                if switches.osr:
                    g *= osr(region_kinds[out_t][i], region_kinds[out_t][j])
                if g != 0.0 and switches.mdr:
                    gamma = float(
                        np.arctan2(
                            positions[t, j, 1] - positions[t, i, 1],
                            positions[t, j, 0] - positions[t, i, 0],
                        )
                    )
                    g *= mdr(va[t, i], gamma)
                if g != 0.0 and switches.ttc:
                    ttc = ttc_seconds(
                        positions[t, i], positions[t, j],
                        vm[t, i], va[t, i], vm[t, j], va[t, j],
                    )
                    g *= ttc_risk_factor(ttc)
                gates[out_t, i, j] = min(g, EDGE_CAP)

    max_k = patterns.max_k if patterns is not None else 1
    onehots = np.zeros((n, max_k))
    if switches.mpr:
        if patterns is None:
            raise ConfigError("pattern relation enabled but no pattern model supplied")
        obs = window.observed()
        for i, track in enumerate(window.tracks):
            idx = assign_pattern(obs[:, i], track.category, patterns)
            onehots[i, idx] = 1.0

    return RiskInputs(
        att_inputs=att_inputs,
        gates=gates,
        onehots=onehots,
        frame_indices=sel,
        positions=positions[sel],
    )


# ---------------------------------------------------------------------------
# learnable embedding stack

def _mlp_params(store, rng, prefix, widths):
    for li in range(len(widths) - 1):
        fan_in = widths[li]
        store[f"{prefix}/w{li}"] = tz.parameter(
            tz.uniform_init((widths[li], widths[li + 1]), fan_in, rng)
        )
        store[f"{prefix}/b{li}"] = tz.parameter(np.zeros(widths[li + 1]))


class RiskNodeNetwork:
    """Owns the attribute, node and pairwise-relation MLPs of the risk graph.

    Parameters are registered into a shared flat store so the optimizer and
    checkpointing see one namespace.
    """

    def __init__(self, store: dict, rng, onehot_width: int = 6, prefix: str = "risk"):
        self.store = store
        self.prefix = prefix
        self.onehot_width = onehot_width
        for ch in ATTRIBUTE_CHANNELS:
            _mlp_params(store, rng, f"{prefix}/att_{ch}", (2, 64, ATTR_EMBED_DIM, ATTR_EMBED_DIM))
        _mlp_params(store, rng, f"{prefix}/node", (4 * ATTR_EMBED_DIM, 256, 128, NODE_EMBED_DIM))
        pair_in = 2 * NODE_EMBED_DIM + 2 * onehot_width
        _mlp_params(store, rng, f"{prefix}/pair", (pair_in, 256, 128, 1))

    def _p(self, name):
        return self.store[f"{self.prefix}/{name}"]

    def _attribute_mlp(self, channel: str, x):
        h = tz.relu(tz.linear(x, self._p(f"att_{channel}/w0"), self._p(f"att_{channel}/b0")))
        h = tz.relu(tz.linear(h, self._p(f"att_{channel}/w1"), self._p(f"att_{channel}/b1")))
        return tz.relu(tz.linear(h, self._p(f"att_{channel}/w2"), self._p(f"att_{channel}/b2")))

    def _node_mlp(self, x):
        h = tz.relu(tz.linear(x, self._p("node/w0"), self._p("node/b0")))
        h = tz.relu(tz.linear(h, self._p("node/w1"), self._p("node/b1")))
        return tz.linear(h, self._p("node/w2"), self._p("node/b2"))

    def _pair_mlp(self, x):
        h = tz.relu(tz.linear(x, self._p("pair/w0"), self._p("pair/b0")))
        h = tz.relu(tz.linear(h, self._p("pair/w1"), self._p("pair/b1")))
        return tz.sigmoid(tz.linear(h, self._p("pair/w2"), self._p("pair/b2")))

    def node_embeddings(self, att_inputs: np.ndarray):
        """(T, N, 4, 2) constant inputs -> (T, N, 64) embedding tensor."""
        t, n = att_inputs.shape[:2]
        feats = [
            self._attribute_mlp(ch, tz.Tensor(att_inputs[:, :, c, :].reshape(t * n, 2)))
            for c, ch in enumerate(ATTRIBUTE_CHANNELS)
        ]
        stacked = tz.concat(feats, axis=1)  # (T*N, 512)
        return tz.reshape(self._node_mlp(stacked), (t, n, NODE_EMBED_DIM))

    def pair_relation_matrix(self, embeddings, onehots: np.ndarray):
        """(T, N, 64) embeddings -> (T, N, N) learned relation scalars in (0, 1)."""
        t, n, d = embeddings.shape
        w = onehots.shape[1]
        a_i = tz.broadcast_to(tz.reshape(embeddings, (t, n, 1, d)), (t, n, n, d))
        a_j = tz.broadcast_to(tz.reshape(embeddings, (t, 1, n, d)), (t, n, n, d))
        oh_i = tz.Tensor(np.broadcast_to(onehots[None, :, None, :], (t, n, n, w)).copy())
        oh_j = tz.Tensor(np.broadcast_to(onehots[None, None, :, :], (t, n, n, w)).copy())
        x = tz.concat([a_i, a_j, oh_i, oh_j], axis=3)
        x = tz.reshape(x, (t * n * n, 2 * d + 2 * w))
        return tz.reshape(self._pair_mlp(x), (t, n, n))

    # single-sample entry points (the same weights the batched path uses)

    def embed_attribute(self, channel: str, value: float, neighbor_values) -> np.ndarray:
        """128-d embedding of one attribute with its neighbor aggregate."""
        neighbor_values = list(neighbor_values)
        agg = float(np.mean(neighbor_values)) if neighbor_values else float(value)
        out = self._attribute_mlp(channel, tz.Tensor([[float(value), agg]]))
        return out.values[0]

    def node_embedding(self, r_lx, r_ly, r_vm, r_va) -> np.ndarray:
        """Fuse the four 128-d attribute embeddings into a 64-d node vector."""
        x = tz.Tensor(np.concatenate([r_lx, r_ly, r_vm, r_va])[None, :])
        return self._node_mlp(x).values[0]

    def pattern_relation(self, a_i, a_j, c_i: int | None, c_j: int | None) -> float:
        """Learned relation scalar in (0, 1); cluster slots zeroed when None."""
        oh_i = np.zeros(self.onehot_width)
        oh_j = np.zeros(self.onehot_width)
        if c_i is not None:
            oh_i[c_i] = 1.0
        if c_j is not None:
            oh_j[c_j] = 1.0
        x = tz.Tensor(np.concatenate([np.asarray(a_i), np.asarray(a_j), oh_i, oh_j])[None, :])
        return float(self._pair_mlp(x).values[0, 0])


def risk_edge_tensor(network: RiskNodeNetwork, inputs: RiskInputs, switches: RiskMetricSwitches):
    """(embeddings, edges) tensors for one window; differentiable in the
    network parameters. Edge = constant gate product x learned relation."""
    embeddings = network.node_embeddings(inputs.att_inputs)
    onehots = inputs.onehots if switches.mpr else np.zeros_like(inputs.onehots)
    relation = network.pair_relation_matrix(embeddings, onehots)
    edges = tz.mul(relation, tz.Tensor(inputs.gates))
    return embeddings, edges


def build_risk_graph(window: SceneWindow, patterns: PatternModel | None,
                     network: RiskNodeNetwork, switches: RiskMetricSwitches,
                     frames: str = "obs"):
    """Risk graphs for the selected frames with frozen weights."""
    inputs = prepare_risk_inputs(window, patterns, switches, frames)
    embeddings, edges = risk_edge_tensor(network, inputs, switches)
    return [
        RiskGraph(
            node_embeddings=embeddings.values[t],
            edge_matrix=edges.values[t],
            frame_index=int(inputs.frame_indices[t]),
        )
        for t in range(len(inputs.frame_indices))
    ]
