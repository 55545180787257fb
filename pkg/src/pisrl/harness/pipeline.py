"""Seeded orchestration of the clone -> evaluate -> improve pipeline."""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..behavior_cloning import CaseBasePolicy, CloningAborted, clone_behavior, evaluate_policy
from ..case_base import CaseBase
from ..mc_valuation import mc_evaluate
from ..parameters import collect_trajectories, estimate_eta, estimate_theta
from ..policy_improvement import ImprovementConfig, improve
from .config import ExperimentConfig, make_environment

log = logging.getLogger(__name__)

METRIC_COLUMNS = [
    "phase", "episode", "steps", "cumulative_reward", "failure", "teacher_steps",
    "base_size", "replacements", "insertions", "accepted",
]
SUMMARY_COLUMNS = [
    "sigma", "replica", "seed", "theta", "eta", "clone_episodes", "teacher_mean_reward",
    "clone_mean_reward", "improve_mean_reward", "improve_final_reward", "improve_failures",
    "total_failures", "final_base_size",
]
SWEEP_COLUMNS = [
    "sigma", "runs", "mean_failures", "std_failures", "mean_reward", "std_reward",
    "mean_final_reward", "std_final_reward", "pareto",
]
# share of the improvement episodes averaged for the "final" reward
FINAL_FRACTION = 0.1

STREAMS = ("estimate", "clone", "baseline", "mc", "improve_env", "improve_explore")
CASEBASE_FILES = {
    "clone": "casebase_clone.txt",
    "evaluate": "casebase_evaluate.txt",
    "improve": "casebase_improve.txt",
}


class PhaseError(RuntimeError):
    """A pipeline phase failed; a marker file was left in the output directory."""


def replica_streams(master_seed: int, replica: int) -> dict[str, np.random.Generator]:
    """Independent generators per phase, derived from ``master_seed + replica``."""
    children = np.random.SeedSequence(master_seed + replica).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


@dataclass
class RunMetrics:
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def phase_rows(self, phase):
        return [r for r in self.rows if r["phase"] == phase]

    @property
    def failures(self) -> int:
        return sum(int(r["failure"]) for r in self.rows)


def _row(phase, ep, steps, reward, failure, teacher_steps, base_size, repl="", ins="", accepted=""):
    return {
        "phase": phase, "episode": ep, "steps": steps, "cumulative_reward": reward,
        "failure": int(failure), "teacher_steps": teacher_steps, "base_size": base_size,
        "replacements": repl, "insertions": ins, "accepted": accepted,
    }


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def resolve_parameters(cfg: ExperimentConfig, env, teacher, rng) -> tuple[float, int]:
    """Fix theta and eta, running the teacher when either is ``auto``."""
    theta, eta = cfg.resolved("theta"), cfg.resolved("eta")
    if theta == "auto" or eta == "auto":
        trajs = collect_trajectories(env, teacher, cfg.estimate_episodes, rng)
        if theta == "auto":
            theta = estimate_theta(trajs[0])
        if eta == "auto":
            eta = estimate_eta(trajs, theta)
    return float(theta), int(eta)


@dataclass
class PreparedBase:
    """Output of the sigma-independent phases for one replica."""

    base: CaseBase
    theta: float
    eta: int
    rows: list
    teacher_mean: float
    clone_mean: float
    clone_episodes: int
    clone_base: CaseBase


def prepare(cfg: ExperimentConfig, replica: int = 0) -> PreparedBase:
    """Clone the teacher, measure both policies, then value the cases."""
    env, teacher = make_environment(cfg)
    rngs = replica_streams(cfg.seed, replica)
    theta, eta = resolve_parameters(cfg, env, teacher, rngs["estimate"])
    base, report = clone_behavior(
        env, teacher, theta, eta, rngs["clone"],
        max_episodes=cfg.clone_max_episodes,
        window=cfg.clone_window,
        stop_fraction=cfg.clone_stop_fraction,
    )
    rows = [
        _row("clone", k, e.steps, e.reward, e.failure, e.teacher_steps, e.base_size)
        for k, e in enumerate(report.episodes)
    ]
    clone_base = base.copy()
    teacher_mean = clone_mean = math.nan
    if cfg.eval_episodes:
        # both policies face the same noise sequence (common random numbers)
        eval_seed = int(rngs["baseline"].integers(2**63))
        t_stats = evaluate_policy(env, teacher, cfg.eval_episodes, np.random.default_rng(eval_seed))
        c_stats = evaluate_policy(env, CaseBasePolicy(base, teacher), cfg.eval_episodes, np.random.default_rng(eval_seed))
        rows += [_row("teacher_eval", k, e.steps, e.reward, e.failure, e.teacher_steps, len(base))
                 for k, e in enumerate(t_stats)]
        rows += [_row("clone_eval", k, e.steps, e.reward, e.failure, e.teacher_steps, len(base))
                 for k, e in enumerate(c_stats)]
        teacher_mean = statistics.fmean(e.reward for e in t_stats)
        clone_mean = statistics.fmean(e.reward for e in c_stats)
    mc_stats = mc_evaluate(base, env, teacher, cfg.gamma, cfg.mc_episodes, rngs["mc"])
    rows += [_row("evaluate", k, e.steps, e.reward, e.failure, e.teacher_steps, e.base_size)
             for k, e in enumerate(mc_stats)]
    return PreparedBase(base, theta, eta, rows, teacher_mean, clone_mean, report.episodes_run, clone_base)


def improvement_config(cfg: ExperimentConfig, sigma: float, clone_mean: float = math.nan) -> ImprovementConfig:
    if cfg.initial_max_reward == "literal":
        init = None
    elif cfg.initial_max_reward == "clone":
        init = None if math.isnan(clone_mean) else clone_mean
    else:
        init = float(cfg.initial_max_reward)
    return ImprovementConfig(
        sigma=sigma,
        episodes=cfg.improve_episodes,
        gamma=cfg.gamma,
        alpha=cfg.alpha,
        Theta=None if cfg.Theta == "auto" else float(cfg.Theta),
        Theta_fraction=cfg.Theta_fraction,
        initial_max_reward=init,
    )


def run_improvement(cfg, sigma, replica, base, clone_mean=math.nan):
    env, teacher = make_environment(cfg)
    rngs = replica_streams(cfg.seed, replica)
    base, eps = improve(
        base, env, teacher, improvement_config(cfg, sigma, clone_mean),
        rngs["improve_explore"], env_rng=rngs["improve_env"],
    )
    rows = [
        _row("improve", m.episode, m.steps, m.reward, m.failure, m.teacher_steps, m.base_size,
             m.replacements, m.insertions, int(m.accepted))
        for m in eps
    ]
    return base, rows


def _summarise(cfg, sigma, replica, prep: PreparedBase, improve_rows, base) -> dict:
    rewards = [r["cumulative_reward"] for r in improve_rows]
    tail = max(1, int(round(len(rewards) * FINAL_FRACTION)))
    all_rows = prep.rows + improve_rows
    return {
        "sigma": float(sigma),
        "replica": replica,
        "seed": cfg.seed + replica,
        "theta": prep.theta,
        "eta": prep.eta,
        "clone_episodes": prep.clone_episodes,
        "teacher_mean_reward": prep.teacher_mean,
        "clone_mean_reward": prep.clone_mean,
        "improve_mean_reward": statistics.fmean(rewards),
        "improve_final_reward": statistics.fmean(rewards[-tail:]),
        "improve_failures": sum(r["failure"] for r in improve_rows),
        "total_failures": sum(r["failure"] for r in all_rows),
        "final_base_size": len(base),
    }


def _mark_failed(out: Path, phase: str, exc: Exception):
    out.mkdir(parents=True, exist_ok=True)
    (out / "PARTIAL").write_text(f"phase {phase} failed: {exc}\n", encoding="utf-8")


def run_pipeline(cfg: ExperimentConfig, replica: int = 0, sigma: float | None = None,
                 out_dir=None, prepared: PreparedBase | None = None) -> RunMetrics:
    """Execute every phase for one (sigma, replica) cell and write its outputs.

    Writes ``clone.csv``, ``baseline.csv``, ``evaluate.csv``, ``improve.csv``,
    ``summary.csv`` and one case-base file per phase into ``out_dir``.
    ``prepared`` lets a sweep reuse the sigma-independent phases.
    """
    sigma = cfg.sigma[0] if sigma is None else sigma
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "PARTIAL").unlink(missing_ok=True)
    phase = "clone"
    try:
        prep = prepared if prepared is not None else prepare(cfg, replica)
        prep.clone_base.save(out / CASEBASE_FILES["clone"])
        prep.base.save(out / CASEBASE_FILES["evaluate"])
        phase = "improve"
        base, improve_rows = run_improvement(cfg, sigma, replica, prep.base.copy(), prep.clone_mean)
        base.save(out / CASEBASE_FILES["improve"])
    except CloningAborted as exc:
        write_csv(out / "clone.csv", METRIC_COLUMNS,
                  [_row("clone", k, e.steps, e.reward, e.failure, e.teacher_steps, e.base_size)
                   for k, e in enumerate(exc.report.episodes)])
        _mark_failed(out, phase, exc)
        raise PhaseError(str(exc)) from exc
    except Exception as exc:
        _mark_failed(out, phase, exc)
        raise PhaseError(f"phase {phase} failed: {exc}") from exc

    by_phase = {"clone": [], "baseline": [], "evaluate": []}
    for r in prep.rows:
        by_phase["baseline" if r["phase"].endswith("_eval") else r["phase"]].append(r)
    for name, rows in by_phase.items():
        write_csv(out / f"{name}.csv", METRIC_COLUMNS, rows)
    write_csv(out / "improve.csv", METRIC_COLUMNS, improve_rows)
    summary = _summarise(cfg, sigma, replica, prep, improve_rows, base)
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, [summary])
    return RunMetrics(prep.rows + improve_rows, summary)


def _sigma_tag(sigma: float) -> str:
    return f"sigma_{sigma:g}"


def _replica_cells(args):
    cfg, replica, out = args
    prep = prepare(cfg, replica)
    results = []
    for sigma in cfg.sigma:
        cell_out = out / _sigma_tag(sigma) / f"replica_{replica}"
        snapshot = PreparedBase(prep.base.copy(), prep.theta, prep.eta, prep.rows, prep.teacher_mean,
                                prep.clone_mean, prep.clone_episodes, prep.clone_base)
        results.append(run_pipeline(cfg, replica, sigma, cell_out, snapshot).summary)
    return results


def pareto_front(points) -> list[int]:
    """Indices of the (failures, reward) points no other point strictly dominates."""
    pts = [(float(f), float(r)) for f, r in points]
    front = []
    for i, (fi, ri) in enumerate(pts):
        dominated = any(
            fj <= fi and rj >= ri and (fj < fi or rj > ri)
            for j, (fj, rj) in enumerate(pts) if j != i
        )
        if not dominated:
            front.append(i)
    return front


def _std(xs):
    return statistics.stdev(xs) if len(xs) > 1 else 0.0


def sweep(cfg: ExperimentConfig, out_dir=None) -> list[dict]:
    """Run every (sigma, replica) cell and aggregate per sigma.

    The clone and valuation phases do not depend on sigma, so they run once
    per replica and are shared by that replica's sigma cells. Writes
    ``summary.csv`` (one row per cell) and ``sweep_summary.csv``.
    """
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, r, out) for r in range(cfg.replicas)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_replica = list(pool.map(_replica_cells, jobs))
    else:
        per_replica = [_replica_cells(j) for j in jobs]
    cells = [s for sigma_idx in range(len(cfg.sigma)) for rep in per_replica for s in [rep[sigma_idx]]]
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, cells)
    table = []
    for sigma in cfg.sigma:
        mine = [c for c in cells if c["sigma"] == float(sigma)]
        fails = [float(c["improve_failures"]) for c in mine]
        means = [c["improve_mean_reward"] for c in mine]
        finals = [c["improve_final_reward"] for c in mine]
        table.append({
            "sigma": float(sigma),
            "runs": len(mine),
            "mean_failures": statistics.fmean(fails),
            "std_failures": _std(fails),
            "mean_reward": statistics.fmean(means),
            "std_reward": _std(means),
            "mean_final_reward": statistics.fmean(finals),
            "std_final_reward": _std(finals),
        })
    front = set(pareto_front([(row["mean_failures"], row["mean_reward"]) for row in table]))
    for i, row in enumerate(table):
        row["pareto"] = int(i in front)
    write_csv(out / "sweep_summary.csv", SWEEP_COLUMNS, table)
    return table


def export_known_space(base: CaseBase, out):
    """CSV of every case state with its value and use count."""
    columns = [f"s{j}" for j in range(base.n)] + ["value", "use_count"]
    rows = []
    for c in base:
        row = {f"s{j}": float(x) for j, x in enumerate(c.state)}
        row["value"] = c.value
        row["use_count"] = c.use_count
        rows.append(row)
    write_csv(out, columns, rows)
