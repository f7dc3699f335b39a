"""Spatial-temporal forecasting network over the risk and scene graphs.

Both graph branches share one architecture: three graph-convolution layers
(degree-normalized adjacency with self-loops, PReLU) followed by a temporal
stack of three residual blocks. The first block remaps the time axis from
the observation to the prediction horizon through a learned linear map; each
block runs temporal conv (k=3) -> batch norm -> PReLU -> dropout plus a 1x1
convolution residual path. The scene-branch output is reduced over the node
axis by a learned 1x1 convolution and fused into the risk branch by an
elementwise product ("dot"), a residual product ("residual"), or skipped
("risk_only"). A small 2-D conv decoder emits five channels per agent and
future frame: mean x/y (identity link), standard deviations (exp link) and
correlation (tanh link) of a bivariate Gaussian, trained by negative
log-likelihood at the ground-truth points.

The per-frame Gaussians parameterize displacements (the step from the
previous frame); sampled steps accumulate from the last observed position
into absolute trajectories. Keeping targets at step scale conditions the
likelihood far better than absolute coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.types import SceneWindow
from .errors import ConfigError, NumericError, ValidationError
from .nn import checkpoint as ckpt
from .nn import tensor as tz
from .nn.optim import Adam, scheduled_lr
from .patterns import PatternModel, patterns_from_arrays, patterns_to_arrays
from .risk_graph import (
    RiskInputs,
    RiskMetricSwitches,
    RiskNodeNetwork,
    prepare_risk_inputs,
    risk_edge_tensor,
)
from .scene_graph import PADDING_KIND, build_scene_graph, scene_graph_arrays

FUSION_MODES = ("dot", "residual", "risk_only")
PARAM_CHANNELS = 5  # mu_x, mu_y, sigma_x, sigma_y, rho
_LOG_2PI = float(np.log(2.0 * np.pi))

GCN_LAYERS = 3
GCN_WIDTH = 64
TCN_CHANNELS = (GCN_WIDTH, 32, 16, PARAM_CHANNELS)
TCN_KERNEL = 3
TCN_DROPOUT = 0.1
DECODER_KERNEL = 3


@dataclass
class ForecastParams:
    """Link-transformed distribution parameters, each (N, T_pred)."""

    mu_x: tz.Tensor
    mu_y: tz.Tensor
    sigma_x: tz.Tensor
    sigma_y: tz.Tensor
    rho: tz.Tensor

    def as_array(self) -> np.ndarray:
        """(N, 5, T_pred) numpy view of the parameters."""
        return np.stack(
            [
                self.mu_x.values,
                self.mu_y.values,
                self.sigma_x.values,
                self.sigma_y.values,
                self.rho.values,
            ],
            axis=1,
        )


@dataclass
class ForecastDistribution:
    params: np.ndarray  # (N, 5, T_pred)
    samples: np.ndarray  # (h, N, T_pred, 2)


@dataclass
class PreparedWindow:
    """Constant per-window inputs, cached across epochs."""

    window: SceneWindow
    risk_inputs: RiskInputs
    scene_nodes: np.ndarray | None  # (T_obs, V, 2), window-local frame
    scene_edges: np.ndarray | None  # (T_obs, V, V)
    truth: np.ndarray  # (N, T_pred, 2), global frame
    truth_steps: np.ndarray  # (N, T_pred, 2) per-frame displacements
    last_observed: np.ndarray  # (N, 2), global frame
    index: int = 0

    @property
    def n_agents(self):
        return self.window.n_agents

    @property
    def n_scene_nodes(self):
        return 0 if self.scene_nodes is None else self.scene_nodes.shape[1]


def prepare_window(window, patterns, switches, fusion: str, roi=None, index: int = 0):
    risk_inputs = prepare_risk_inputs(window, patterns, switches, frames="obs")
    last_observed = window.observed()[-1]  # (N, 2)
    origin = last_observed.mean(axis=0)
    scene_nodes = scene_edges = None
    if fusion != "risk_only":
        graphs = build_scene_graph(window, basis=window.map.grammar, roi=roi)
        scene_nodes, scene_edges = scene_graph_arrays(graphs)
        scene_nodes = scene_nodes - origin  # same local frame as the risk inputs
        for t, graph in enumerate(graphs):
            for v, kind in enumerate(graph.node_kinds):
                if kind == PADDING_KIND:
                    scene_nodes[t, v] = 0.0
    truth = np.transpose(window.future(), (1, 0, 2))  # (N, T_pred, 2)
    truth_steps = np.diff(
        np.concatenate([last_observed[:, None, :], truth], axis=1), axis=1
    )
    return PreparedWindow(
        window=window,
        risk_inputs=risk_inputs,
        scene_nodes=scene_nodes,
        scene_edges=scene_edges,
        truth=truth,
        truth_steps=truth_steps,
        last_observed=last_observed,
        index=index,
    )


# ---------------------------------------------------------------------------
# layers

def normalized_adjacency(edges):
    """D^-1/2 (E + I) D^-1/2 per frame; differentiable in E.

    edges: (T, V, V) tensor with nonnegative entries. Self-loops keep every
    degree >= 1, so the normalization is never singular.
    """
    edges = tz.as_tensor(edges)
    t, v, _ = edges.shape
    ebar = tz.add(edges, tz.Tensor(np.eye(v)[None]))
    deg = tz.tensor_sum(ebar, axis=2)  # (T, V)
    dinv = tz.pow_scalar(deg, -0.5)
    half = tz.mul(ebar, tz.reshape(dinv, (t, v, 1)))
    return tz.mul(half, tz.reshape(dinv, (t, 1, v)))


def gcn_layer(h, adjacency, weight, slope):
    """PReLU(A_hat @ H @ W) applied frame-wise with shared weights."""
    return tz.prelu(tz.matmul(tz.matmul(adjacency, h), weight), slope)


class Forecaster:
    """Parameter owner and forward pass for the full network."""

    def __init__(self, t_obs: int, t_pred: int, onehot_width: int = 6, seed: int = 0):
        self.t_obs = t_obs
        self.t_pred = t_pred
        self.onehot_width = onehot_width
        self.params: dict[str, tz.Tensor] = {}
        self.bn_states: dict[str, tz.BatchNormState] = {}
        self._optimizer: Adam | None = None
        rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, 0]))
        self._init_rng = rng

        self.risk_net = RiskNodeNetwork(self.params, rng, onehot_width=onehot_width)

        self._make("scene/lift/w", (2, GCN_WIDTH), fan_in=2, rng=rng)
        self.params["scene/lift/b"] = tz.parameter(np.zeros(GCN_WIDTH))

        for branch in ("risk", "scene"):
            for layer in range(GCN_LAYERS):
                self._make(f"gcn_{branch}/w{layer}", (GCN_WIDTH, GCN_WIDTH), GCN_WIDTH, rng)
                self.params[f"gcn_{branch}/a{layer}"] = tz.parameter(0.25)
            self._make(f"tcn_{branch}/time", (t_obs, t_pred), t_obs, rng)
            for b in range(3):
                cin, cout = TCN_CHANNELS[b], TCN_CHANNELS[b + 1]
                self._make(f"tcn_{branch}/b{b}/conv_w", (cout, cin, TCN_KERNEL), cin * TCN_KERNEL, rng)
                self.params[f"tcn_{branch}/b{b}/bn_g"] = tz.parameter(np.ones(cout))
                self.params[f"tcn_{branch}/b{b}/bn_b"] = tz.parameter(np.zeros(cout))
                self.params[f"tcn_{branch}/b{b}/prelu"] = tz.parameter(0.25)
                self._make(f"tcn_{branch}/b{b}/res_w", (cout, cin, 1), cin, rng)
                self.bn_states[f"tcn_{branch}/b{b}"] = tz.BatchNormState(cout)

        k = DECODER_KERNEL
        self._make("dec/conv0_w", (1, 1, k, k), k * k, rng)
        self.params["dec/conv0_b"] = tz.parameter(np.zeros(1))
        self._make("dec/conv1_w", (1, 1, k, k), k * k, rng)
        self.params["dec/conv1_b"] = tz.parameter(np.zeros(1))
        self.params["dec/prelu"] = tz.parameter(0.25)
        width = PARAM_CHANNELS * t_pred
        self._make("dec/lin_w", (width, width), width, rng)
        self.params["dec/lin_b"] = tz.parameter(np.zeros(width))

    def _make(self, name, shape, fan_in, rng):
        self.params[name] = tz.parameter(tz.uniform_init(shape, fan_in, rng))

    # lazily shaped node-axis reducer for the scene branch
    def reducer(self, v: int, n: int) -> tz.Tensor:
        name = f"fuse/{v}x{n}/w"
        if name not in self.params:
            self._make(name, (n, v), fan_in=v, rng=self._init_rng)
            if self._optimizer is not None:
                self._optimizer.register(name, self.params[name])
        return self.params[name]

    # ----- branch passes -------------------------------------------------

    def gcn_stack(self, branch: str, h, edges):
        adjacency = normalized_adjacency(edges)
        for layer in range(GCN_LAYERS):
            h = gcn_layer(
                h, adjacency, self.params[f"gcn_{branch}/w{layer}"],
                self.params[f"gcn_{branch}/a{layer}"],
            )
        return h

    def tcn_encode(self, branch: str, h, training: bool, rng):
        """(T_obs, V, d) -> (V, c, T_pred)."""
        x = tz.transpose(h, (1, 2, 0))  # (V, d, T_obs)
        x = tz.matmul(x, self.params[f"tcn_{branch}/time"])  # time-axis remap
        for b in range(3):
            x = self._res_block(f"tcn_{branch}/b{b}", x, training, rng)
        return x

    def _res_block(self, site: str, x, training: bool, rng):
        y = tz.conv1d_temporal(x, self.params[f"{site}/conv_w"])
        y = tz.batch_norm(
            y, self.params[f"{site}/bn_g"], self.params[f"{site}/bn_b"],
            self.bn_states[site], training,
        )
        y = tz.prelu(y, self.params[f"{site}/prelu"])
        y = tz.dropout(y, TCN_DROPOUT, rng, training)
        res = tz.conv1d_temporal(x, self.params[f"{site}/res_w"])
        return tz.add(y, res)

    def fuse(self, g_risk, g_scene, mode: str):
        """Reduce the scene embedding over nodes and combine with the risk one."""
        if mode not in FUSION_MODES:
            raise ConfigError(f"unknown fusion mode {mode!r}; expected one of {FUSION_MODES}")
        if mode == "risk_only":
            return g_risk
        n = g_risk.shape[0]
        v = g_scene.shape[0]
        w = self.reducer(v, n)
        reduced = tz.matmul(w, tz.reshape(g_scene, (v, PARAM_CHANNELS * self.t_pred)))
        reduced = tz.reshape(reduced, (n, PARAM_CHANNELS, self.t_pred))
        if mode == "dot":
            return tz.mul(g_risk, reduced)
        return tz.mul(g_risk, tz.add(reduced, 1.0))

    def decode(self, fused) -> ForecastParams:
        """(N, c, T_pred) -> per-channel link-transformed parameters."""
        n = fused.shape[0]
        x = tz.reshape(fused, (n, 1, PARAM_CHANNELS, self.t_pred))
        x = tz.add(tz.conv2d(x, self.params["dec/conv0_w"]),
                   tz.reshape(self.params["dec/conv0_b"], (1, 1, 1, 1)))
        x = tz.add(tz.conv2d(x, self.params["dec/conv1_w"]),
                   tz.reshape(self.params["dec/conv1_b"], (1, 1, 1, 1)))
        x = tz.prelu(x, self.params["dec/prelu"])
        x = tz.reshape(x, (n, PARAM_CHANNELS * self.t_pred))
        x = tz.linear(x, self.params["dec/lin_w"], self.params["dec/lin_b"])
        x = tz.reshape(x, (n, PARAM_CHANNELS, self.t_pred))

        def channel(c):
            return tz.reshape(tz.narrow(x, 1, c, 1), (n, self.t_pred))

        return ForecastParams(
            mu_x=channel(0),
            mu_y=channel(1),
            sigma_x=tz.exp(channel(2)),
            sigma_y=tz.exp(channel(3)),
            rho=tz.tanh(channel(4)),
        )

    def forward(self, prep: PreparedWindow, switches: RiskMetricSwitches,
                fusion: str, training: bool = False, rng=None) -> ForecastParams:
        if rng is None:
            rng = np.random.default_rng(0)
        h_risk, risk_edges = risk_edge_tensor(self.risk_net, prep.risk_inputs, switches)
        g_risk = self.tcn_encode(
            "risk", self.gcn_stack("risk", h_risk, risk_edges), training, rng
        )
        g_scene = None
        if fusion != "risk_only":
            if prep.scene_nodes is None:
                raise ConfigError("window was prepared without scene graphs")
            t, v, _ = prep.scene_nodes.shape
            lifted = tz.linear(
                tz.Tensor(prep.scene_nodes.reshape(t * v, 2)),
                self.params["scene/lift/w"], self.params["scene/lift/b"],
            )
            h_scene = tz.reshape(lifted, (t, v, GCN_WIDTH))
            h_scene = self.gcn_stack("scene", h_scene, tz.Tensor(prep.scene_edges))
            g_scene = self.tcn_encode("scene", h_scene, training, rng)
        return self.decode(self.fuse(g_risk, g_scene, fusion))

    # ----- persistence ----------------------------------------------------

    def to_arrays(self) -> dict:
        arrays = {f"param/{name}": p.values for name, p in self.params.items()}
        for site, state in self.bn_states.items():
            arrays[f"bn/{site}/mean"] = state.running_mean
            arrays[f"bn/{site}/var"] = state.running_var
        return arrays

    def load_arrays(self, arrays: dict):
        for key, value in arrays.items():
            if key.startswith("param/"):
                name = key[len("param/"):]
                if name not in self.params:
                    if name.startswith("fuse/"):
                        self.params[name] = tz.parameter(value)
                        continue
                    raise ValidationError(f"checkpoint has unknown parameter {name!r}")
                if self.params[name].shape != value.shape:
                    raise ValidationError(
                        f"checkpoint shape {value.shape} does not match parameter "
                        f"{name!r} of shape {self.params[name].shape}"
                    )
                self.params[name].values = np.array(value, dtype=np.float64)
            elif key.startswith("bn/"):
                site, which = key[len("bn/"):].rsplit("/", 1)
                if which == "mean":
                    self.bn_states[site].running_mean = np.array(value)
                else:
                    self.bn_states[site].running_var = np.array(value)


# ---------------------------------------------------------------------------
# loss, sampling, bundle

def bgpd_nll(params: ForecastParams, truth: np.ndarray):
    """Mean negative log-likelihood of truth under the predicted Gaussians.

    truth is (N, T_pred, 2). Returns a scalar tensor; the per-point density
    is the standard bivariate normal with correlation.
    """
    tx = tz.Tensor(truth[:, :, 0])
    ty = tz.Tensor(truth[:, :, 1])
    total, count = _nll_sum(params, tx, ty)
    return tz.mul(total, 1.0 / count)


def _nll_sum(params: ForecastParams, tx, ty):
    zx = tz.div(tz.sub(tx, params.mu_x), params.sigma_x)
    zy = tz.div(tz.sub(ty, params.mu_y), params.sigma_y)
    rho = params.rho
    one_minus_r2 = tz.sub(1.0, tz.mul(rho, rho))
    quad = tz.add(
        tz.add(tz.mul(zx, zx), tz.mul(zy, zy)),
        tz.mul(-2.0, tz.mul(rho, tz.mul(zx, zy))),
    )
    nll = tz.add(
        tz.add(
            tz.add(_LOG_2PI, tz.add(tz.log(params.sigma_x), tz.log(params.sigma_y))),
            tz.mul(0.5, tz.log(one_minus_r2)),
        ),
        tz.div(quad, tz.mul(2.0, one_minus_r2)),
    )
    count = int(np.prod(nll.shape))
    return tz.tensor_sum(nll), count


def sample_trajectories(params: np.ndarray, h: int, seed: int) -> np.ndarray:
    """Draw h trajectory sets from (N, 5, T_pred) Gaussian parameters.

    Sampling goes through the Cholesky factor of each 2x2 covariance, so the
    draws carry the predicted correlation; deterministic per seed.
    """
    if h < 1:
        raise ValidationError("sample count h must be >= 1")
    mu_x, mu_y, sx, sy, rho = (params[:, c, :] for c in range(PARAM_CHANNELS))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((h,) + mu_x.shape + (2,))
    x = mu_x[None] + sx[None] * z[..., 0]
    y = mu_y[None] + sy[None] * (rho[None] * z[..., 0] + np.sqrt(1.0 - rho[None] ** 2) * z[..., 1])
    return np.stack([x, y], axis=-1)


@dataclass
class TrainSettings:
    epochs: int = 50
    lr: float = 1e-3
    lr_decay: float = 0.2
    lr_decay_every: int = 5
    batch_size: int = 1024  # trajectories per optimizer step
    fusion: str = "dot"
    switches: RiskMetricSwitches = None
    seed: int = 0
    roi: tuple | None = None

    def __post_init__(self):
        if self.switches is None:
            self.switches = RiskMetricSwitches()
        if self.fusion not in FUSION_MODES:
            raise ConfigError(f"unknown fusion mode {self.fusion!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be >= 1")


@dataclass
class ModelBundle:
    forecaster: Forecaster
    patterns: PatternModel
    settings: TrainSettings
    meta: dict

    def save(self, path):
        arrays = self.forecaster.to_arrays()
        arrays.update(patterns_to_arrays(self.patterns))
        if self.forecaster._optimizer is not None:
            arrays.update(self.forecaster._optimizer.state_arrays())
        meta = dict(self.meta)
        meta.update(
            {
                "t_obs": self.forecaster.t_obs,
                "t_pred": self.forecaster.t_pred,
                "onehot_width": self.forecaster.onehot_width,
                "fusion": self.settings.fusion,
                "risk_metrics": ",".join(self.settings.switches.names()),
                "lr": self.settings.lr,
                "lr_decay": self.settings.lr_decay,
                "lr_decay_every": self.settings.lr_decay_every,
                "batch_size": self.settings.batch_size,
                "seed": self.settings.seed,
            }
        )
        ckpt.save_checkpoint(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "ModelBundle":
        arrays, meta = ckpt.load_checkpoint(path)
        forecaster = Forecaster(
            t_obs=int(meta["t_obs"]),
            t_pred=int(meta["t_pred"]),
            onehot_width=int(meta["onehot_width"]),
            seed=int(meta.get("seed", 0)),
        )
        forecaster.load_arrays(arrays)
        patterns = patterns_from_arrays(arrays)
        settings = TrainSettings(
            epochs=int(meta.get("epochs_done", 1)),
            lr=float(meta["lr"]),
            lr_decay=float(meta["lr_decay"]),
            lr_decay_every=int(meta["lr_decay_every"]),
            batch_size=int(meta["batch_size"]),
            fusion=meta["fusion"],
            switches=RiskMetricSwitches.from_names(meta["risk_metrics"]),
            seed=int(meta.get("seed", 0)),
        )
        bundle = cls(forecaster=forecaster, patterns=patterns, settings=settings, meta=meta)
        optim_arrays = {k: v for k, v in arrays.items() if k.startswith("optim/")}
        if optim_arrays:
            optimizer = Adam(forecaster.params, lr=settings.lr)
            forecaster._optimizer = optimizer
            optimizer.load_state_arrays(optim_arrays)
        return bundle


def _batches(prepared, batch_size, order):
    """Group window indices so each batch holds ~batch_size trajectories."""
    batches = []
    current, count = [], 0
    for idx in order:
        current.append(idx)
        count += prepared[idx].n_agents
        if count >= batch_size:
            batches.append(current)
            current, count = [], 0
    if current:
        batches.append(current)
    return batches


def train_model(windows, patterns: PatternModel, settings: TrainSettings,
                log_fn=None, resume: ModelBundle | None = None) -> ModelBundle:
    """Fit the network by Adam on the Gaussian NLL.

    The learning rate follows the step schedule (x lr_decay every
    lr_decay_every epochs); per-epoch RNG streams derive from (seed, epoch)
    so a resumed run reproduces the uninterrupted one exactly.
    """
    if not windows:
        raise ValidationError("no training windows")
    prepared = [
        prepare_window(w, patterns, settings.switches, settings.fusion, settings.roi, index=i)
        for i, w in enumerate(windows)
    ]

    if resume is not None:
        forecaster = resume.forecaster
        start_epoch = int(resume.meta.get("epochs_done", 0))
    else:
        forecaster = Forecaster(
            t_obs=windows[0].t_obs,
            t_pred=windows[0].t_pred,
            onehot_width=patterns.max_k,
            seed=settings.seed,
        )
        start_epoch = 0

    if settings.fusion != "risk_only":
        for prep in prepared:
            forecaster.reducer(prep.n_scene_nodes, prep.n_agents)

    if forecaster._optimizer is None:
        forecaster._optimizer = Adam(forecaster.params, lr=settings.lr)
    optimizer = forecaster._optimizer

    loss_history = list(resume.meta.get("loss_history", [])) if resume is not None else []
    for epoch in range(start_epoch, settings.epochs):
        lr = scheduled_lr(settings.lr, epoch, settings.lr_decay, settings.lr_decay_every)
        optimizer.lr = lr
        order_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=[settings.seed, 1_000_000 + epoch])
        )
        drop_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=[settings.seed, 2_000_000 + epoch])
        )
        order = order_rng.permutation(len(prepared))

        epoch_sum = 0.0
        epoch_points = 0
        for batch in _batches(prepared, settings.batch_size, order):
            optimizer.zero_grad()
            tape = tz.Tape()
            with tape:
                total = None
                count = 0
                for idx in batch:
                    prep = prepared[idx]
                    try:
                        params = forecaster.forward(
                            prep, settings.switches, settings.fusion, training=True, rng=drop_rng
                        )
                        win_sum, win_count = _nll_sum(
                            params,
                            tz.Tensor(prep.truth_steps[:, :, 0]),
                            tz.Tensor(prep.truth_steps[:, :, 1]),
                        )
                    except NumericError as exc:
                        raise NumericError(f"window {prep.index}: {exc}") from exc
                    total = win_sum if total is None else tz.add(total, win_sum)
                    count += win_count
                loss = tz.mul(total, 1.0 / count)
            tape.backward(loss)
            optimizer.step()
            epoch_sum += loss.item() * count
            epoch_points += count
        epoch_loss = epoch_sum / epoch_points
        loss_history.append(epoch_loss)
        if log_fn is not None:
            log_fn(epoch, epoch_loss, lr)

    meta = {"epochs_done": settings.epochs, "loss_history": loss_history}
    return ModelBundle(forecaster=forecaster, patterns=patterns, settings=settings, meta=meta)


def predict_window(bundle: ModelBundle, window, h: int, seed: int,
                   switches=None, fusion=None, roi=None) -> ForecastDistribution:
    """Inference for one window: parameters plus h sampled futures.

    The Gaussians parameterize per-frame displacements; sampled steps are
    accumulated from the last observed position, so the returned samples are
    absolute trajectories.
    """
    switches = switches if switches is not None else bundle.settings.switches
    fusion = fusion if fusion is not None else bundle.settings.fusion
    prep = prepare_window(window, bundle.patterns, switches, fusion, roi)
    params = bundle.forecaster.forward(prep, switches, fusion, training=False)
    arr = params.as_array()
    steps = sample_trajectories(arr, h, seed)
    samples = prep.last_observed[None, :, None, :] + np.cumsum(steps, axis=2)
    return ForecastDistribution(params=arr, samples=samples)
