"""Scripted/endpoint agents, the episode loop, and batch statistics."""

import json
import math
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from inertia.agent import (
    AgentBinding,
    InertiaModel,
    chat_act,
    episode_seed,
    extract_action,
    mean_sem,
    parse_agent_spec,
    run_batch,
    run_episode,
    scripted_act,
)
from inertia.conversation import Conversation, assemble_prompt
from inertia.envs import make_env
from inertia.errors import ConfigError, ProtocolError, TransportError


class TestInertiaModel:
    def test_probability_closed_form(self):
        model = InertiaModel(p_max=0.9, rate=0.3)
        assert model.imitation_prob(6) == pytest.approx(0.9 * (1 - math.exp(-1.8)))
        assert model.imitation_prob(6) == pytest.approx(0.751, abs=1e-3)

    def test_monotone_in_visible_rounds(self):
        model = InertiaModel(p_max=0.7, rate=0.5)
        probs = [model.imitation_prob(n) for n in range(30)]
        assert probs[0] == 0.0
        assert all(b >= a for a, b in zip(probs, probs[1:]))

    def test_empirical_imitation_frequency_tracks_p(self):
        model = InertiaModel(p_max=0.8, rate=0.4)
        env = make_env("maze:1")
        env.reset()
        conv = Conversation.new("s", "g")
        for i in range(1, 7):
            conv = conv.append_round(f"o{i}", f"a{i}")
        rng = random.Random(0)
        freq = {}
        for n in (1, 3, 6):
            messages = assemble_prompt(conv, set(range(7 - n, 7)))
            hits = sum(
                scripted_act(messages, model, env, rng, turn=7)[1] for _ in range(2000)
            )
            freq[n] = hits / 2000
        assert freq[1] < freq[3] < freq[6]
        for n in (1, 3, 6):
            assert freq[n] == pytest.approx(model.imitation_prob(n), abs=0.04)

    def test_validation(self):
        with pytest.raises(ConfigError):
            InertiaModel(p_max=1.2)
        with pytest.raises(ConfigError):
            InertiaModel(rate=0.0)
        with pytest.raises(ConfigError):
            InertiaModel(base_policy="alchemy")


class TestScriptedAct:
    def test_p_zero_always_base_policy(self):
        env = make_env("maze:2")
        env.reset()
        conv = Conversation.new("s", "g").append_round("o", "up")
        messages = assemble_prompt(conv, {1})
        model = InertiaModel(p_max=0.0)
        rng = random.Random(0)
        for _ in range(50):
            action, imitated = scripted_act(messages, model, env, rng, turn=2)
            assert not imitated
            assert action == env.optimal_hint()

    def test_forced_copy_single_visible_action(self):
        env = make_env("maze:2")
        env.reset()
        conv = Conversation.new("s", "g").append_round("o", "move up")
        messages = assemble_prompt(conv, {1})
        model = InertiaModel(p_max=1.0, rate=1e9)
        action, imitated = scripted_act(messages, model, env, random.Random(0), turn=2)
        assert imitated and action == "move up"

    def test_copy_targets_matching_offset(self):
        env = make_env("maze:2")
        env.reset()
        conv = Conversation.new("s", "g")
        for i, act in enumerate(["right", "left", "right", "left"], start=1):
            conv = conv.append_round(f"o{i}", act)
        messages = assemble_prompt(conv, {1, 2, 3, 4})
        model = InertiaModel(p_max=1.0, rate=1e9)
        # turn 5 matches offset (5-1) % 4 = 0 -> the oldest visible action
        action, _ = scripted_act(messages, model, env, random.Random(0), turn=5)
        assert action == "right"
        action, _ = scripted_act(messages, model, env, random.Random(0), turn=6)
        assert action == "left"


class TestExtraction:
    def test_bracket_grammar(self):
        assert extract_action("I choose [W]", "hangman") == "[W]"
        assert extract_action("thinking... [up] it is", "2048") == "[up]"
        assert extract_action("[A-] then maybe [X+]", "rushhour") == "[X+]"

    def test_direction_grammar(self):
        assert extract_action("Let's go UP now", "maze") == "up"
        assert extract_action("down, no wait, left", "frozenlake") == "left"

    def test_craft_grammar(self):
        text = "I will first check.\ninventory\nThen craft later."
        assert extract_action(text, "textcraft") == "inventory"
        text = "Plan:\nget oak plank\n"
        assert extract_action(text, "textcraft") == "get oak plank"

    def test_fallback_raw(self):
        assert extract_action("  gibberish  ", "maze") == "gibberish"


class _StubHandler(BaseHTTPRequestHandler):
    completion = "I choose [W]"
    status = 200
    body_override = None
    requests_seen: list = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        type(self).requests_seen.append((self.path, payload))
        self.send_response(type(self).status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        if type(self).body_override is not None:
            self.wfile.write(type(self).body_override)
            return
        body = {
            "choices": [{"message": {"role": "assistant", "content": type(self).completion}}]
        }
        self.wfile.write(json.dumps(body).encode())

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.completion = "I choose [W]"
    _StubHandler.status = 200
    _StubHandler.body_override = None
    _StubHandler.requests_seen = []
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def _messages():
    conv = Conversation.new("system text", "goal text").begin_round("obs")
    return assemble_prompt(conv, set())


class TestChatAct:
    def test_echoes_fixed_completion(self, stub_server):
        binding = AgentBinding(kind="chat_endpoint", base_url=stub_server, model="stub")
        _StubHandler.completion = "verbatim answer"
        assert chat_act(_messages(), binding) == "verbatim answer"

    def test_extracts_bracketed_action(self, stub_server):
        binding = AgentBinding(kind="chat_endpoint", base_url=stub_server, model="stub")
        assert chat_act(_messages(), binding, env_id="hangman") == "[W]"

    def test_request_shape(self, stub_server):
        binding = AgentBinding(kind="chat_endpoint", base_url=stub_server, model="m1",
                               temperature=0.8)
        chat_act(_messages(), binding)
        path, payload = _StubHandler.requests_seen[-1]
        assert path == "/chat/completions"
        assert payload["model"] == "m1" and payload["temperature"] == 0.8
        assert payload["messages"][0]["role"] == "system"
        assert all(set(m) == {"role", "content"} for m in payload["messages"])

    def test_http_error_is_transport_error(self, stub_server):
        binding = AgentBinding(kind="chat_endpoint", base_url=stub_server, model="stub")
        _StubHandler.status = 404
        with pytest.raises(TransportError):
            chat_act(_messages(), binding)

    def test_malformed_body_is_protocol_error(self, stub_server):
        binding = AgentBinding(kind="chat_endpoint", base_url=stub_server, model="stub")
        _StubHandler.body_override = b'{"unexpected": true}'
        with pytest.raises(ProtocolError):
            chat_act(_messages(), binding)

    def test_unreachable_endpoint(self):
        binding = AgentBinding(
            kind="chat_endpoint", base_url="http://127.0.0.1:9", model="stub", timeout=0.5
        )
        with pytest.raises(TransportError):
            chat_act(_messages(), binding)


class TestEpisodes:
    def test_control_arm_equals_pure_planner(self):
        agent = AgentBinding(kind="scripted", inertia=InertiaModel(p_max=0.0))
        record = run_episode("maze:7", "long", agent, seed=1)
        assert record.final_reward == 1.0
        assert record.termination == "goal"
        assert not any(step.imitated for step in record.steps)

    def test_clip_2to1_visible_counts(self):
        agent = AgentBinding(kind="scripted", inertia=InertiaModel(p_max=0.0))
        record = run_episode("maze:7", "clip-2to1", agent, seed=1)
        assert all(step.visible_rounds == 1 for step in record.steps)

    def test_episode_deterministic(self):
        agent = AgentBinding(kind="scripted")
        a = run_episode("frozenlake:3", "clip-12to1", agent, seed=9)
        b = run_episode("frozenlake:3", "clip-12to1", agent, seed=9)
        assert a == b

    def test_mask_and_trim_agree(self):
        agent = AgentBinding(kind="scripted")
        for policy in ("long", "window-3", "clip-5to1", "sum-4to1"):
            trim = run_episode("maze:11", policy, agent, seed=4, context_mode="trim")
            mask = run_episode("maze:11", policy, agent, seed=4, context_mode="mask")
            assert [s.action for s in trim.steps] == [s.action for s in mask.steps]

    def test_transport_error_aborts_episode(self):
        binding = AgentBinding(
            kind="chat_endpoint", base_url="http://127.0.0.1:9", model="stub", timeout=0.5
        )
        with pytest.raises(TransportError):
            run_episode("maze:1", "long", binding, seed=0)

    def test_init_rounds_preseed_conversation(self):
        agent = AgentBinding(kind="scripted", inertia=InertiaModel(p_max=1.0, rate=1e9))
        init = (("obs a", "left"), ("obs b", "right"))
        record = run_episode("maze:7", "long", agent, seed=2, init_rounds=init)
        # first generated turn is round 3; forced imitation copies from the
        # warm-up actions, proving they are in context
        assert record.steps[0].turn == 3
        assert record.steps[0].action in ("left", "right")

    def test_episode_record_serializes(self):
        agent = AgentBinding(kind="scripted")
        record = run_episode("hangman:5", "window-6", agent, seed=3)
        parsed = json.loads(record.to_json())
        assert parsed["env"].startswith("hangman")
        assert len(parsed["steps"]) == len(record.steps)


class TestBatch:
    def test_table_shape_and_determinism(self):
        agent = AgentBinding(kind="scripted")
        kwargs = dict(episodes=3, seed=5, step_multiplier=0.25)
        table1 = run_batch(["maze:0", "hangman:0"], ["long", "window-2"], agent, **kwargs)
        table2 = run_batch(["maze:0", "hangman:0"], ["long", "window-2"], agent, **kwargs)
        assert table1 == table2
        assert len(table1) == 4
        assert {r.env for r in table1} == {"maze", "hangman"}

    def test_multiplier_scales_step_limit(self):
        agent = AgentBinding(kind="scripted", inertia=InertiaModel(p_max=1.0, rate=1e9,
                                                                   base_policy="random"))
        # forced imitation of a wall bump loops forever: episodes end at limit
        spec = "maze:3:max_steps=15"
        record_quarter = run_episode(spec, "long", agent, seed=0)
        assert len(record_quarter.steps) <= 15

    def test_parallel_matches_serial(self):
        agent = AgentBinding(kind="scripted")
        serial = run_batch(["maze:0"], ["clip-3to1"], agent, episodes=4, seed=1, jobs=1)
        parallel = run_batch(["maze:0"], ["clip-3to1"], agent, episodes=4, seed=1, jobs=4)
        assert serial == parallel

    def test_paired_seeds_shared_across_policies(self):
        assert episode_seed(1, "maze:0", 0) == episode_seed(1, "maze:0", 0)
        assert episode_seed(1, "maze:0", 0) != episode_seed(1, "maze:0", 1)
        assert episode_seed(1, "maze:0", 0) != episode_seed(2, "maze:0", 0)
        assert episode_seed(1, "maze:0", 0) != episode_seed(1, "maze:7", 0)

    def test_distinct_base_env_seeds_give_distinct_episode_seeds(self):
        s7 = {episode_seed(0, "maze:7", i) for i in range(8)}
        s9 = {episode_seed(0, "maze:9", i) for i in range(8)}
        assert s7.isdisjoint(s9)

    def test_mean_sem(self):
        mean, sem = mean_sem([1.0, 0.0, 1.0, 0.0])
        assert mean == 0.5
        assert sem == pytest.approx(math.sqrt((4 / 3) * 0.25 / 4))
        assert mean_sem([]) == (0.0, 0.0)


class TestAgentSpecs:
    def test_scripted_spec(self):
        binding = parse_agent_spec("scripted:p_max=0.5,rate=0.7,base=random")
        assert binding.inertia.p_max == 0.5
        assert binding.inertia.base_policy == "random"

    def test_chat_spec(self):
        binding = parse_agent_spec("chat:http://localhost:8000/v1,model=small-chat,temperature=0.8")
        assert binding.kind == "chat_endpoint"
        assert binding.base_url == "http://localhost:8000/v1"
        assert binding.model == "small-chat"
        assert binding.temperature == 0.8

    def test_default_temperature(self):
        assert parse_agent_spec("chat:http://x").temperature == 0.8

    def test_bad_spec(self):
        with pytest.raises(ConfigError):
            parse_agent_spec("wizard")
