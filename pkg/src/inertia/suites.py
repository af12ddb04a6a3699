"""Desk-scale experiment suites with reproducible artifact files.

Every suite writes plot-ready CSV tables plus a manifest that is
sufficient to re-run it byte-for-byte. Suites default to the scripted
inertial agent; pass agent="chat:<url>,model=..." in overrides to drive a
real endpoint.
"""

from __future__ import annotations

import csv
import json
import os
import random
from collections import Counter

import numpy as np

from inertia import __version__
from inertia.agent import (
    episode_seed,
    mean_sem,
    parse_agent_spec,
    run_batch,
    run_episode,
)
from inertia.attention import copy_pattern_record, report as attention_report
from inertia.cost import clip_window_speedup, simulate_ops
from inertia.envs import EnvSpec, make_env
from inertia.envs.maze import DIRECTIONS, MazeEnv, render_observation
from inertia.errors import ConfigError
from inertia.policies import parse_policy_spec

ALL_ENVS = ("maze", "frozenlake", "2048", "hangman", "rushhour", "textcraft")
CASE_STUDY_POLICIES = ("long", "window-6", "clip-12to1")

SUITE_DEFAULTS: dict[str, dict] = {
    "main_grid": {
        "envs": ",".join(ALL_ENVS),
        "policies": "long,window-6,clip-12to1,sum-12to1",
        "episodes": 8,
        "agent": "scripted:p_max=0.9,rate=0.3",
    },
    "ablation_H": {
        "envs": "maze,frozenlake",
        "policies": "clip-2to1,clip-3to1,clip-6to1,clip-12to1",
        "episodes": 16,
        "agent": "scripted:p_max=0.9,rate=0.3",
    },
    "ablation_L": {
        "envs": "maze,frozenlake",
        "policies": "clip-12to1,clip-12to3,clip-12to6,clip-12to11",
        "episodes": 16,
        "agent": "scripted:p_max=0.9,rate=0.3",
    },
    "clip_vs_window": {
        "envs": "maze",
        "policies": "clip-6to1,window-3,clip-10to1,window-5,clip-12to1,window-6,clip-14to1,window-7",
        "episodes": 16,
        "agent": "scripted:p_max=0.9,rate=0.3",
    },
    "scaling": {
        "envs": "maze",
        "policies": "long,window-6,clip-12to1",
        "episodes": 16,
        "multipliers": "0.25,0.5,1.0,1.5",
        "agent": "scripted:p_max=0.9,rate=0.3",
    },
    "init_context_case_study": {
        "episodes": 64,
        "policies": ",".join(CASE_STUDY_POLICIES),
        "agent": "scripted:p_max=0.9,rate=0.3",
    },
    "attention_trend": {"turns": 12, "response_len": 8},
    "cost_bench": {"policies": "long,window-6,clip-12to1", "turns": 240},
}


def run_suite(suite: str, seed: int, out_dir: str, overrides: dict | None = None, jobs: int = 1) -> dict:
    """Run one named suite; returns the manifest (also written to disk)."""
    if suite not in SUITE_DEFAULTS:
        raise ConfigError(f"unknown suite {suite!r}; known: {sorted(SUITE_DEFAULTS)}")
    os.makedirs(out_dir, exist_ok=True)
    config = dict(SUITE_DEFAULTS[suite])
    config.update(overrides or {})
    runner = {
        "main_grid": _grid_suite,
        "ablation_H": _grid_suite,
        "ablation_L": _grid_suite,
        "clip_vs_window": _grid_suite,
        "scaling": _scaling_suite,
        "init_context_case_study": _case_study_suite,
        "attention_trend": _attention_trend_suite,
        "cost_bench": _cost_bench_suite,
    }[suite]
    files = runner(suite, seed, out_dir, config, jobs)
    manifest = {
        "suite": suite,
        "seed": seed,
        "overrides": dict(overrides or {}),
        "config": config,
        "version": __version__,
        "files": files,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


def run_suite_from_manifest(manifest_path: str, out_dir: str | None = None, jobs: int = 1) -> dict:
    """Re-run a suite from its manifest alone."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    target = out_dir or os.path.dirname(manifest_path) or "."
    return run_suite(manifest["suite"], manifest["seed"], target, manifest["overrides"], jobs)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v:.6f}" if isinstance(v, float) else v for v in row]
            )


def _grid_suite(suite: str, seed: int, out_dir: str, config: dict, jobs: int) -> list[str]:
    envs = str(config["envs"]).split(",")
    policies = str(config["policies"]).split(",")
    agent = parse_agent_spec(str(config["agent"]))
    results = run_batch(
        envs,
        policies,
        agent,
        episodes=int(config["episodes"]),
        seed=seed,
        jobs=jobs,
    )
    rows = [[r.env, r.policy, r.episodes, r.mean, r.sem, r.aborted] for r in results]
    name = f"{suite}.csv"
    _write_csv(os.path.join(out_dir, name), ["env", "policy", "episodes", "mean", "sem", "aborted"], rows)
    return [name]


def _scaling_suite(suite: str, seed: int, out_dir: str, config: dict, jobs: int) -> list[str]:
    envs = str(config["envs"]).split(",")
    policies = str(config["policies"]).split(",")
    agent = parse_agent_spec(str(config["agent"]))
    multipliers = [float(m) for m in str(config["multipliers"]).split(",")]
    rows = []
    for mult in multipliers:
        results = run_batch(
            envs, policies, agent, episodes=int(config["episodes"]),
            step_multiplier=mult, seed=seed, jobs=jobs,
        )
        for r in results:
            rows.append([mult, r.env, r.policy, r.episodes, r.mean, r.sem, r.aborted])
    name = "scaling.csv"
    _write_csv(
        os.path.join(out_dir, name),
        ["multiplier", "env", "policy", "episodes", "mean", "sem", "aborted"],
        rows,
    )
    return [name]


# -- context-influence case study ---------------------------------------------


def make_init_transcripts(env: MazeEnv, seed: int) -> dict[str, tuple[tuple[str, str], ...]]:
    """Two four-round warm-up transcripts for a fixed maze start.

    good: a valid trajectory that walks into the start cell (an on-path
    example worth imitating); bad: an oscillating left/right loop that
    ends where it began (a wasteful pattern that inertia perpetuates).
    Observations are rendered from the real maze so both are consistent.
    """
    rng = random.Random(f"init:{seed}")
    inverse = {"up": "down", "down": "up", "left": "right", "right": "left"}
    # walk 4 cells away from the start without immediate backtracking
    path = [env.pos]
    walk: list[str] = []
    for _ in range(4):
        options = [
            (name, (path[-1][0] + dr, path[-1][1] + dc))
            for name, (dr, dc) in sorted(DIRECTIONS.items())
            if (path[-1][0] + dr, path[-1][1] + dc) in env.passages[path[-1]]
        ]
        fresh = [(n, c) for n, c in options if c not in path] or options
        name, cell = rng.choice(fresh)
        walk.append(name)
        path.append(cell)
    # reverse it: a trajectory from path[-1] back into the start
    good_cells = list(reversed(path))
    good_actions = [inverse[a] for a in reversed(walk)]
    good = tuple(
        (render_observation(env.passages, good_cells[i], env.goal), good_actions[i])
        for i in range(4)
    )

    bad_actions = ["right", "left", "right", "left"]
    pos = env.pos
    bad = []
    for action in bad_actions:
        obs = render_observation(env.passages, pos, env.goal)
        dr, dc = DIRECTIONS[action]
        nxt = (pos[0] + dr, pos[1] + dc)
        if nxt in env.passages[pos]:
            pos = nxt
        bad.append((obs, action))
    return {"good": good, "bad": tuple(bad)}


def replay_positions(env_spec: EnvSpec, actions: list[str]) -> list[tuple[int, int]]:
    """Positions occupied after each recorded action (deterministic replay)."""
    env = make_env(env_spec)
    env.reset()
    positions = []
    for action in actions:
        if env.done:
            break
        env.step(action)
        positions.append(env.pos)
    return positions


def _case_study_suite(suite: str, seed: int, out_dir: str, config: dict, jobs: int) -> list[str]:
    agent = parse_agent_spec(str(config["agent"]))
    policies = str(config["policies"]).split(",")
    episodes = int(config["episodes"])
    env_seed = episode_seed(seed, "maze-case-study", 0)
    env_spec = EnvSpec("maze", seed=env_seed)
    probe = make_env(env_spec)
    transcripts = make_init_transcripts(probe, seed)

    score_rows = []
    heat_rows = []
    for init_name in ("good", "bad"):
        for policy in policies:
            rewards = []
            visits: Counter = Counter()
            total_steps = 0
            for i in range(episodes):
                record = run_episode(
                    env_spec,
                    policy,
                    agent,
                    seed=episode_seed(seed, f"case:{init_name}:{i}", i),
                    init_rounds=transcripts[init_name],
                )
                rewards.append(record.final_reward)
                positions = replay_positions(env_spec, [s.action for s in record.steps])
                visits.update(positions)
                total_steps += len(positions)
            mean, sem = mean_sem(rewards)
            score_rows.append([init_name, policy, episodes, mean, sem])
            for (r, c), count in sorted(visits.items()):
                heat_rows.append([init_name, policy, r, c, 100.0 * count / total_steps])

    files = ["case_study_scores.csv", "case_study_heatmap.csv"]
    _write_csv(
        os.path.join(out_dir, files[0]),
        ["init", "policy", "episodes", "mean", "sem"],
        score_rows,
    )
    _write_csv(
        os.path.join(out_dir, files[1]),
        ["init", "policy", "row", "col", "visit_pct"],
        heat_rows,
    )
    return files


def _attention_trend_suite(suite: str, seed: int, out_dir: str, config: dict, jobs: int) -> list[str]:
    turns = int(config["turns"])
    response_len = int(config["response_len"])
    rng = np.random.default_rng(seed)
    rows = []
    for turn in range(1, turns + 1):
        strength = min(0.85, 0.1 + 0.06 * (turn - 1))
        rec = copy_pattern_record(
            rng,
            copy_strength=strength if turn > 1 else 0.0,
            n_prev_rounds=turn - 1,
            response_len=response_len,
            turn=turn,
        )
        rep = attention_report(rec)
        rows.append(
            [turn, rep.sink, rep.system, rep.user, rep.prev_assistant,
             rep.cur_assistant, rep.diagonal_ratio, rep.n_output_tokens]
        )
    name = "attention_trend.csv"
    _write_csv(
        os.path.join(out_dir, name),
        ["turn", "sink", "system", "user", "prev_assistant", "cur_assistant",
         "diagonal_ratio", "n_output_tokens"],
        rows,
    )
    return [name]


def _cost_bench_suite(suite: str, seed: int, out_dir: str, config: dict, jobs: int) -> list[str]:
    policies = str(config["policies"]).split(",")
    turns = int(config["turns"])
    series_rows = []
    summary_rows = []
    for policy in policies:
        cfg = parse_policy_spec(policy)
        for reuse in (True, False):
            rep = simulate_ops(cfg, turns, reuse=reuse)
            cumulative = 0.0
            for step, cost in enumerate(rep.series, start=1):
                cumulative += cost
                series_rows.append([policy, "on" if reuse else "off", step, cost, cumulative])
            summary_rows.append([policy, "on" if reuse else "off", rep.average])
    summary_rows.append(["clip-12to1-vs-window-6-closed-form", "on", clip_window_speedup(6)])
    files = ["cost_series.csv", "cost_summary.csv"]
    _write_csv(os.path.join(out_dir, files[0]),
               ["policy", "reuse", "step", "cost", "cumulative"], series_rows)
    _write_csv(os.path.join(out_dir, files[1]),
               ["policy", "reuse", "average"], summary_rows)
    return files
