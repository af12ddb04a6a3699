"""Golden fixtures: the committed docs stay in sync with the envs."""

import pathlib

from inertia.envs.fixtures import render_fixtures

DOC = pathlib.Path(__file__).resolve().parents[1] / "docs" / "environment_fixtures.md"


def test_fixtures_document_matches_generators():
    assert DOC.exists(), "run: python -m inertia.envs.fixtures"
    assert DOC.read_text(encoding="utf-8") == render_fixtures()


def test_fixtures_cover_every_environment():
    text = DOC.read_text(encoding="utf-8")
    for env_id in ("maze", "frozenlake", "2048", "hangman", "rushhour", "textcraft"):
        assert f"## {env_id}" in text
