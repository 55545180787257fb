"""Command-line entry point.

Every configuration key can be given on the command line as ``--key value``
(for example ``--sigma 0,0.0009,0.09`` or ``--car.obstacle.x_min 11``);
flags override values read from ``--config``.

Exit codes: 0 success, 1 configuration error, 2 runtime fault.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..behavior_cloning import CloningAborted, clone_behavior
from ..case_base import CaseBase
from ..mc_valuation import mc_evaluate
from ..parameters import collect_trajectories, estimate_eta, estimate_theta
from ..policy_improvement import improve
from . import pipeline
from .config import ConfigError, ExperimentConfig, apply_setting, load_config, make_environment

COMMANDS = {
    "estimate": "estimate theta and eta from teacher demonstrations",
    "clone": "clone the teacher into a case-base",
    "evaluate": "Monte Carlo valuation of a saved case-base",
    "improve": "run safe policy improvement on a saved case-base",
    "run": "full clone -> evaluate -> improve pipeline for one sigma",
    "sweep": "pipeline over every (sigma, replica) cell plus summary",
    "export": "write the known space of a saved case-base as CSV",
}


def _parser():
    p = argparse.ArgumentParser(prog="pisrl", description=__doc__.split("\n")[0], allow_abbrev=False)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in COMMANDS.items():
        sp = sub.add_parser(name, help=text, description=text, allow_abbrev=False)
        sp.add_argument("--config", type=Path, help="key = value configuration file")
        sp.add_argument("--replica", type=int, default=0, help="replica index for single-run commands")
        if name in ("evaluate", "improve", "export"):
            sp.add_argument("--base", type=Path, help="case-base file to read")
        if name == "export":
            sp.add_argument("--output", type=Path, help="CSV destination")
    return p


def _overrides(extra):
    """Turn leftover ``--key value`` / ``--key=value`` tokens into pairs."""
    pairs = []
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigError(f"{tok}: expected --key value")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise ConfigError(f"{key}: missing value")
        pairs.append((key, value))
    return pairs


def build_config(args, extra) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for key, value in _overrides(extra):
        apply_setting(cfg, key, value)
    return cfg.validate()


def _out(cfg, args):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_estimate(cfg, args):
    env, teacher = make_environment(cfg)
    rng = pipeline.replica_streams(cfg.seed, args.replica)["estimate"]
    trajs = collect_trajectories(env, teacher, cfg.estimate_episodes, rng)
    theta = estimate_theta(trajs[0])
    eta = estimate_eta(trajs, theta)
    print(f"theta = {theta!r}")
    print(f"eta = {eta}")
    pinned = cfg.resolved("theta")
    if pinned != "auto":
        print(f"eta_at_configured_theta = {estimate_eta(trajs, float(pinned))}")


def cmd_clone(cfg, args):
    out = _out(cfg, args)
    env, teacher = make_environment(cfg)
    rngs = pipeline.replica_streams(cfg.seed, args.replica)
    theta, eta = pipeline.resolve_parameters(cfg, env, teacher, rngs["estimate"])
    failure = None
    try:
        base, report = clone_behavior(
            env, teacher, theta, eta, rngs["clone"],
            max_episodes=cfg.clone_max_episodes, window=cfg.clone_window,
            stop_fraction=cfg.clone_stop_fraction,
        )
    except CloningAborted as exc:
        failure, report = exc, exc.report
    pipeline.write_csv(out / "clone.csv", pipeline.METRIC_COLUMNS, [
        pipeline._row("clone", k, e.steps, e.reward, e.failure, e.teacher_steps, e.base_size)
        for k, e in enumerate(report.episodes)
    ])
    if failure is not None:
        pipeline._mark_failed(out, "clone", failure)
        raise pipeline.PhaseError(str(failure)) from failure
    base.save(out / pipeline.CASEBASE_FILES["clone"])
    print(f"cloned {len(base)} cases in {report.episodes_run} episodes -> {out}")


def _load_base(args, default: Path) -> CaseBase:
    path = args.base or default
    try:
        return CaseBase.load(path)
    except FileNotFoundError:
        raise ConfigError(f"base: no case-base file at {path}") from None


def cmd_evaluate(cfg, args):
    out = _out(cfg, args)
    base = _load_base(args, out / pipeline.CASEBASE_FILES["clone"])
    env, teacher = make_environment(cfg)
    rng = pipeline.replica_streams(cfg.seed, args.replica)["mc"]
    stats = mc_evaluate(base, env, teacher, cfg.gamma, cfg.mc_episodes, rng)
    pipeline.write_csv(out / "evaluate.csv", pipeline.METRIC_COLUMNS, [
        pipeline._row("evaluate", k, e.steps, e.reward, e.failure, e.teacher_steps, e.base_size)
        for k, e in enumerate(stats)
    ])
    base.save(out / pipeline.CASEBASE_FILES["evaluate"])
    print(f"valued {len(base)} cases over {len(stats)} episodes -> {out}")


def cmd_improve(cfg, args):
    out = _out(cfg, args)
    base = _load_base(args, out / pipeline.CASEBASE_FILES["evaluate"])
    env, teacher = make_environment(cfg)
    rngs = pipeline.replica_streams(cfg.seed, args.replica)
    base, eps = improve(base, env, teacher, pipeline.improvement_config(cfg, cfg.sigma[0]),
                        rngs["improve_explore"], env_rng=rngs["improve_env"])
    pipeline.write_csv(out / "improve.csv", pipeline.METRIC_COLUMNS, [
        pipeline._row("improve", m.episode, m.steps, m.reward, m.failure, m.teacher_steps,
                      m.base_size, m.replacements, m.insertions, int(m.accepted))
        for m in eps
    ])
    base.save(out / pipeline.CASEBASE_FILES["improve"])
    fails = sum(m.failure for m in eps)
    print(f"sigma={cfg.sigma[0]:g}: {len(eps)} episodes, {fails} failures, {len(base)} cases -> {out}")


def cmd_run(cfg, args):
    metrics = pipeline.run_pipeline(cfg, args.replica)
    s = metrics.summary
    print(
        f"sigma={s['sigma']:g} clone_reward={s['clone_mean_reward']:.4f} "
        f"improve_reward={s['improve_mean_reward']:.4f} failures={s['improve_failures']} "
        f"cases={s['final_base_size']} -> {cfg.out}"
    )


def cmd_sweep(cfg, args):
    table = pipeline.sweep(cfg)
    print("sigma,mean_failures,mean_reward,mean_final_reward,pareto")
    for row in table:
        print(f"{row['sigma']:g},{row['mean_failures']:g},{row['mean_reward']:.4f},"
              f"{row['mean_final_reward']:.4f},{row['pareto']}")


def cmd_export(cfg, args):
    out = Path(cfg.out)
    base = _load_base(args, out / pipeline.CASEBASE_FILES["improve"])
    dest = args.output or out / "known_space.csv"
    dest.parent.mkdir(parents=True, exist_ok=True)
    pipeline.export_known_space(base, dest)
    print(f"exported {len(base)} cases -> {dest}")


HANDLERS = {
    "estimate": cmd_estimate,
    "clone": cmd_clone,
    "evaluate": cmd_evaluate,
    "improve": cmd_improve,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "export": cmd_export,
}


def main(argv=None) -> int:
    args, extra = _parser().parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args, extra)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # any phase fault maps to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
