"""Golden environment fixtures: action grammars plus sample transcripts.

Run ``python -m inertia.envs.fixtures`` to regenerate
docs/environment_fixtures.md; a test pins the committed file to the
generated text so observation formats cannot drift silently.
"""

from __future__ import annotations

import random

from inertia.envs import ENVIRONMENTS, EnvSpec, make_env

FIXTURE_SEED = 7
FIXTURE_STEPS = 3


def golden_transcript(env_id: str) -> str:
    spec = EnvSpec(env_id, seed=FIXTURE_SEED)
    env = make_env(spec)
    rng = random.Random(0)
    lines = [
        f"## {env_id}",
        "",
        f"Default step limit: {env.default_max_steps}",
        "",
        "### System instructions",
        "",
        "```",
        env.instructions,
        "```",
        "",
        "### Goal",
        "",
        "```",
        env.goal_text,
        "```",
        "",
        f"### Golden transcript (seed {FIXTURE_SEED})",
        "",
        "```",
        f"<- {env.reset()}",
    ]
    for _ in range(FIXTURE_STEPS):
        if env.done:
            break
        action = env.optimal_hint() or env.heuristic_action(rng)
        result = env.step(action)
        lines.append(f"-> {action}")
        lines.append(f"<- {result.observation}")
        if result.done:
            lines.append(f"[done: termination={result.termination} reward={result.reward}]")
    lines.extend(["```", ""])
    return "\n".join(lines)


def render_fixtures() -> str:
    parts = [
        "# Environment fixtures",
        "",
        "Observation formats and action grammars, pinned by test. Environment",
        'spec strings look like "<env>:<seed>[:knob=value,...]"; the knob',
        "`max_steps=<n>` overrides the default step limit.",
        "",
    ]
    for env_id in sorted(ENVIRONMENTS):
        parts.append(golden_transcript(env_id))
    return "\n".join(parts)


if __name__ == "__main__":
    import pathlib

    target = pathlib.Path(__file__).resolve().parents[3] / "docs" / "environment_fixtures.md"
    target.parent.mkdir(exist_ok=True)
    target.write_text(render_fixtures(), encoding="utf-8")
    print(f"wrote {target}")
