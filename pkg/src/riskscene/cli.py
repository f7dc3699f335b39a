"""Command-line surface: simulate, train, predict, evaluate, risk-matrix, plot.

Every run is reproducible from its config file plus explicit overrides; the
hash of the resolved configuration is embedded in each output artifact.
Exit codes: 0 success, 1 validation error (bad input/config), 2 runtime or
numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, apply_overrides, load_config
from .data import (
    SceneSpec,
    bundled_grammar,
    load_grammar,
    load_scene,
    parse_agent_list,
    save_map,
    save_tracks,
    synthesize_dataset,
)
from .errors import ConfigError, RiskSceneError, ValidationError
from .forecasts import read_forecasts, write_forecasts
from .metrics import MetricReport, evaluate_samples
from .model import Forecaster, ModelBundle, TrainSettings, predict_window, train_model
from .patterns import fit_patterns
from .risk_graph import RiskMetricSwitches, build_risk_graph
from .scene_graph import build_scene_graph
from .smoothing import smooth_samples
from .svg import forecast_svg, heatmap_svg, scene_graph_svg, write_svg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskscene",
        description="Heterogeneous trajectory forecasting over risk and scene graphs",
    )
    parser.add_argument("--version", action="version", version=f"riskscene {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--fusion", choices=["dot", "res", "hrg-only"], default=None)
        p.add_argument("--risk-metrics", dest="risk_metrics", default=None,
                       help="comma list from nrr,mpr,ttc,mdr,osr")
        p.add_argument("--h", dest="h", type=int, default=None, help="sampled futures per agent")
        p.add_argument("--bezier", action="store_const", const=True, default=None,
                       help="smooth sampled trajectories")
        p.add_argument("--out", default=None, help="output directory")
        return p

    sim = common(sub.add_parser("simulate", help="write a deterministic synthetic dataset"))
    sim.add_argument("--force", action="store_true", help="overwrite existing files")

    train = common(sub.add_parser("train", help="fit the forecaster on a dataset"))
    train.add_argument("--resume", default=None, help="checkpoint to continue from")

    common(sub.add_parser("predict", help="sample forecasts from a checkpoint"))
    common(sub.add_parser("evaluate", help="score a forecast file against the data"))
    common(sub.add_parser("risk-matrix", help="emit per-frame risk matrices"))
    common(sub.add_parser("plot", help="render per-frame scene graphs as SVG"))
    return parser


def resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(
        config,
        seed=args.seed,
        fusion=args.fusion,
        risk_metrics=args.risk_metrics,
        h=args.h,
        bezier=args.bezier,
        out=args.out,
    )


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_windows(config: RunConfig):
    windows = load_scene(config.data, config.map, config.t_obs, config.t_pred)
    if not windows:
        raise ValidationError("the dataset yields no complete windows")
    if config.grammar:
        grammar = load_grammar(config.grammar)
        for window in windows:
            window.map.grammar = grammar
    return windows


def _switches(config: RunConfig) -> RiskMetricSwitches:
    return RiskMetricSwitches.from_names(config.risk_metrics)


def cmd_simulate(config: RunConfig, args) -> None:
    for target in (config.data, config.map):
        if Path(target).exists() and not args.force:
            raise ValidationError(f"{target} exists; pass --force to overwrite")
    grammar = load_grammar(config.grammar) if config.grammar else bundled_grammar("urban_full")
    spec = SceneSpec(
        agents=parse_agent_list(config.sim_agents),
        t_obs=config.t_obs,
        t_pred=config.t_pred,
        fps=config.fps,
        noise=config.sim_noise,
        extra_frames=config.sim_extra_frames,
        grammar=grammar,
    )
    tracks, smap = synthesize_dataset(spec, config.seed, config.sim_scenes)
    Path(config.data).parent.mkdir(parents=True, exist_ok=True)
    save_tracks(tracks, config.fps, config.data)
    _append_comment(config.data, f"#config_hash={config.hash()}")
    save_map(smap, config.map)
    _append_comment(config.map, f"# config_hash={config.hash()}")
    print(f"wrote {config.data} ({len(tracks)} tracks) and {config.map}")


def _append_comment(path, line):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")


def cmd_train(config: RunConfig, args) -> None:
    out = _out_dir(config)
    windows = _load_windows(config)
    patterns = fit_patterns(windows, cluster_counts=config.cluster_counts(), seed=config.seed)
    settings = TrainSettings(
        epochs=config.epochs,
        lr=config.lr,
        lr_decay=config.lr_decay,
        lr_decay_every=config.lr_decay_every,
        batch_size=config.batch,
        fusion=config.fusion_mode,
        switches=_switches(config),
        seed=config.seed,
        roi=config.roi_rect(),
    )
    resume = ModelBundle.load(args.resume) if getattr(args, "resume", None) else None
    log_path = out / "train_log.txt"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write(f"#config_hash={config.hash()}\n#columns=epoch,loss,lr\n")

        def log_fn(epoch, loss, lr):
            fh.write(f"{epoch},{loss!r},{lr!r}\n")
            fh.flush()

        bundle = train_model(windows, patterns, settings, log_fn=log_fn, resume=resume)
    bundle.meta["config_hash"] = config.hash()
    Path(config.checkpoint).parent.mkdir(parents=True, exist_ok=True)
    bundle.save(config.checkpoint)
    print(f"trained {settings.epochs} epochs; checkpoint at {config.checkpoint}, log at {log_path}")


def _window_sample_seed(seed: int, w_idx: int) -> int:
    return int(np.random.SeedSequence(entropy=[seed, 3_000_000 + w_idx]).generate_state(1)[0])


def cmd_predict(config: RunConfig, args) -> None:
    out = _out_dir(config)
    windows = _load_windows(config)
    bundle = ModelBundle.load(config.checkpoint)
    switches = _switches(config)
    per_window = []
    for w_idx, window in enumerate(windows):
        dist = predict_window(
            bundle, window, config.h, _window_sample_seed(config.seed, w_idx),
            switches=switches, fusion=config.fusion_mode, roi=config.roi_rect(),
        )
        samples = dist.samples
        if config.bezier:
            samples = smooth_samples(samples, window.observed()[-1])
        per_window.append(([tr.agent_id for tr in window.tracks], samples))
    Path(config.forecast).parent.mkdir(parents=True, exist_ok=True)
    write_forecasts(config.forecast, per_window, config.hash(), config.h, config.t_pred)

    w_idx = min(config.window, len(windows) - 1)
    window = windows[w_idx]
    svg = forecast_svg(
        window.observed(), np.transpose(window.future(), (1, 0, 2)),
        per_window[w_idx][1], window.map,
        comment=f"config_hash={config.hash()} window={w_idx}",
    )
    write_svg(out / f"forecast_w{w_idx}.svg", svg)
    print(f"wrote {config.forecast} and {out / f'forecast_w{w_idx}.svg'}")


def cmd_evaluate(config: RunConfig, args) -> None:
    out = _out_dir(config)
    windows = _load_windows(config)
    meta, per_window = read_forecasts(config.forecast)
    if int(meta["t_pred"]) != config.t_pred:
        raise ValidationError(
            f"forecast horizon {meta['t_pred']} does not match config t_pred {config.t_pred}"
        )
    reports = []
    for w_idx, window in enumerate(windows):
        if w_idx not in per_window:
            raise ValidationError(f"forecast file has no rows for window {w_idx}")
        agents = per_window[w_idx]
        samples = []
        for track in window.tracks:
            if track.agent_id not in agents:
                raise ValidationError(
                    f"forecast file misses agent {track.agent_id!r} in window {w_idx}"
                )
            samples.append(agents[track.agent_id])
        samples = np.stack(samples, axis=1)  # (h, N, T, 2)
        truth = np.transpose(window.future(), (1, 0, 2))
        reports.append(evaluate_samples(samples, truth, window.categories))
    merged = _mean_reports(reports)
    text = _report_text(merged, config.hash())
    (out / "report.txt").write_text(text, encoding="utf-8")
    payload = {"config_hash": config.hash()}
    payload.update(merged.as_dict())
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(text, end="")


def _mean_reports(reports) -> MetricReport:
    """Dataset-level report: agent-weighted means of the per-window metrics."""
    from .data.types import AgentCategory
    from .metrics import MetricValues

    def combine(pairs):
        total = sum(n for _, n in pairs)
        out = MetricValues()
        for name in ("ade", "fde", "made", "mfde", "mr"):
            acc = 0.0
            weight = 0
            for values, n in pairs:
                v = getattr(values, name)
                if not np.isnan(v):
                    acc += v * n
                    weight += n
            if weight:
                setattr(out, name, acc / weight)
        return out

    overall = combine([(r.overall, 1) for r in reports])
    per_category = {}
    for cat in AgentCategory:
        pairs = [(r.per_category[cat], 1) for r in reports if cat in r.per_category]
        if pairs:
            per_category[cat] = combine(pairs)
    return MetricReport(
        overall=overall, per_category=per_category, h=reports[0].h, trials=1
    )


def _report_text(report: MetricReport, config_hash: str) -> str:
    lines = [
        f"# config_hash={config_hash} h={report.h} trials={report.trials}",
        f"{'group':<12} {'ade':>8} {'fde':>8} {'made':>8} {'mfde':>8} {'mr':>6}",
    ]

    def row(name, v):
        return (
            f"{name:<12} {v.ade:8.4f} {v.fde:8.4f} {v.made:8.4f} {v.mfde:8.4f} {v.mr:6.3f}"
        )

    lines.append(row("overall", report.overall))
    for cat, values in sorted(report.per_category.items(), key=lambda kv: kv[0].value):
        lines.append(row(cat.value, values))
    return "\n".join(lines) + "\n"


def cmd_risk_matrix(config: RunConfig, args) -> None:
    out = _out_dir(config)
    windows = _load_windows(config)
    if not (0 <= config.window < len(windows)):
        raise ValidationError(f"window index {config.window} out of range (0..{len(windows) - 1})")
    window = windows[config.window]

    if Path(config.checkpoint).exists():
        bundle = ModelBundle.load(config.checkpoint)
        network = bundle.forecaster.risk_net
        patterns = bundle.patterns
    else:
        patterns = fit_patterns(windows, cluster_counts=config.cluster_counts(), seed=config.seed)
        forecaster = Forecaster(config.t_obs, config.t_pred,
                                onehot_width=patterns.max_k, seed=config.seed)
        network = forecaster.risk_net

    presets = RiskMetricSwitches.ablation_presets()
    preset_names = ["+".join(p.names()) for p in presets]
    per_preset = []
    for preset in presets:
        graphs = build_risk_graph(window, patterns, network, preset, frames="future")
        per_preset.append(np.stack([g.edge_matrix for g in graphs]))  # (T_pred, N, N)

    n = window.n_agents
    ids = [tr.agent_id for tr in window.tracks]
    lines = [f"#config_hash={config.hash()}", f"#presets={'|'.join(preset_names)}"]
    frame_labels = [str(t + 1) for t in range(window.t_pred)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            grid = np.stack(
                [per_preset[p][:, i, j] for p in range(len(presets))]
            )  # (presets, T_pred)
            lines.append(f"pair {ids[i]} {ids[j]}")
            for p in range(len(presets)):
                lines.append(" ".join(f"{v:.6g}" for v in grid[p]))
            svg = heatmap_svg(
                grid, preset_names, frame_labels,
                comment=f"config_hash={config.hash()} pair={ids[i]}->{ids[j]}",
            )
            write_svg(out / f"risk_w{config.window}_{ids[i]}_{ids[j]}.svg", svg)
    (out / f"risk_w{config.window}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote risk matrices for window {config.window} to {out}")


def cmd_plot(config: RunConfig, args) -> None:
    out = _out_dir(config)
    windows = _load_windows(config)
    if not (0 <= config.window < len(windows)):
        raise ValidationError(f"window index {config.window} out of range (0..{len(windows) - 1})")
    window = windows[config.window]
    graphs = build_scene_graph(window, roi=config.roi_rect())
    for graph in graphs:
        svg = scene_graph_svg(
            graph, window.map,
            comment=f"config_hash={config.hash()} frame={graph.frame_index}",
        )
        write_svg(out / f"scene_w{config.window}_f{graph.frame_index}.svg", svg)
    print(f"wrote {len(graphs)} scene-graph frames to {out}")


_HANDLERS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "risk-matrix": cmd_risk_matrix,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        _HANDLERS[args.command](config, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RiskSceneError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected failures also map to exit 2
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
