"""Context-policy visibility, trimming recurrence, and spec grammar."""

import pytest
from hypothesis import given, settings, strategies as st

from inertia.conversation import Conversation
from inertia.errors import ConfigError
from inertia.policies import (
    PolicyConfig,
    PolicyState,
    TruncatingSummarizer,
    build_mask,
    format_policy_spec,
    parse_policy_spec,
    update_after_round,
    visible_rounds,
)


def drive(cfg: PolicyConfig, turns: int, summarizer=None, conv=None):
    """Visible sets for turns 1..n, updating state after each round."""
    state = PolicyState()
    sets = []
    for t in range(1, turns + 1):
        sets.append(visible_rounds(cfg, state, t))
        state = update_after_round(cfg, state, t, summarizer, conv)
    return sets, state


class TestVisibility:
    def test_long_sees_everything(self):
        sets, _ = drive(parse_policy_spec("long"), 7)
        assert sets[-1] == tuple(range(1, 8))

    def test_window_most_recent(self):
        cfg = parse_policy_spec("window-6")
        sets, _ = drive(cfg, 9)
        assert sets[-1] == (4, 5, 6, 7, 8, 9)

    def test_clip_3to1_size_cycle(self):
        sets, _ = drive(parse_policy_spec("clip-3to1"), 6)
        assert [len(s) for s in sets] == [1, 2, 1, 2, 1, 2]

    def test_visible_always_has_current_round(self):
        for spec in ("long", "window-4", "clip-5to2", "clip-7to1"):
            sets, _ = drive(parse_policy_spec(spec), 30)
            for t, vis in enumerate(sets, start=1):
                assert t in vis
                assert max(vis) == t

    def test_retain_zero_clears_even_current_round(self):
        sets, _ = drive(parse_policy_spec("clip-2to0"), 6)
        assert [len(s) for s in sets] == [1, 0, 1, 0, 1, 0]


class TestUpdate:
    def test_clip_12to1_first_clear_after_round_12(self):
        cfg = parse_policy_spec("clip-12to1")
        state = PolicyState()
        for t in range(1, 12):
            state = update_after_round(cfg, state, t)
            assert state.retained == tuple(range(1, t + 1))
        state = update_after_round(cfg, state, 12)
        assert state.retained == (12,)

    def test_clip_12to0_clears_to_empty(self):
        cfg = parse_policy_spec("clip-12to0")
        state = PolicyState()
        for t in range(1, 13):
            state = update_after_round(cfg, state, t)
        assert state.retained == ()

    def test_clip_2to1_retained_always_one(self):
        cfg = parse_policy_spec("clip-2to1")
        state = PolicyState()
        for t in range(1, 20):
            state = update_after_round(cfg, state, t)
            assert state.retained == (t,)

    def test_retained_below_threshold(self):
        cfg = parse_policy_spec("clip-5to2")
        state = PolicyState()
        for t in range(1, 50):
            state = update_after_round(cfg, state, t)
            assert len(state.retained) < 5
            assert list(state.retained) == sorted(state.retained)

    def test_summary_requires_summarizer(self):
        cfg = parse_policy_spec("sum-3to1")
        state = PolicyState()
        state = update_after_round(cfg, state, 1)
        state = update_after_round(cfg, state, 2)
        with pytest.raises(ConfigError):
            update_after_round(cfg, state, 3)  # clearing turn, no summarizer

    def test_summary_compresses_pre_clear_context(self):
        cfg = parse_policy_spec("sum-3to1")
        conv = Conversation.new("s", "g")
        state = PolicyState()
        for t in range(1, 4):
            conv = conv.append_round(f"o{t}", f"a{t}")
            state = update_after_round(cfg, state, t, TruncatingSummarizer(), conv)
        assert len(state.summaries) == 1
        assert "a1" in state.summaries[0] and "a3" in state.summaries[0]
        assert state.retained == (3,)


class TestMask:
    def test_window_1(self):
        cfg = parse_policy_spec("window-1")
        assert build_mask(cfg, PolicyState(), 3) == [False, False, True]

    def test_long_all_true(self):
        cfg = parse_policy_spec("long")
        assert build_mask(cfg, PolicyState(), 5) == [True] * 5

    def test_clip_3to1_turn_4(self):
        cfg = parse_policy_spec("clip-3to1")
        state = PolicyState()
        for t in range(1, 4):
            state = update_after_round(cfg, state, t)
        assert build_mask(cfg, state, 4) == [False, False, True, True]


class TestSpecGrammar:
    @pytest.mark.parametrize(
        "text,kind",
        [("long", "long"), ("window-6", "window"), ("clip-12to1", "clip"), ("sum-12to1", "summary")],
    )
    def test_round_trip(self, text, kind):
        cfg = parse_policy_spec(text)
        assert cfg.kind == kind
        assert format_policy_spec(cfg) == text

    @pytest.mark.parametrize("bad", ["", "window", "clip-1to2", "clip-0to0", "window-0", "sum-2"])
    def test_rejects_bad_specs(self, bad):
        with pytest.raises(ConfigError):
            parse_policy_spec(bad)

    def test_retain_below_threshold_enforced(self):
        with pytest.raises(ConfigError):
            PolicyConfig("clip", clear_threshold=3, retain_recent=3)


@st.composite
def clip_params(draw):
    threshold = draw(st.integers(min_value=2, max_value=20))
    retain = draw(st.integers(min_value=0, max_value=threshold - 1))
    return retain, threshold


class TestCycleProperties:
    @given(clip_params())
    @settings(max_examples=60, deadline=None)
    def test_sizes_cycle_retain_to_threshold_minus_one(self, params):
        retain, threshold = params
        cfg = PolicyConfig("clip", clear_threshold=threshold, retain_recent=retain)
        period = threshold - retain
        sets, _ = drive(cfg, threshold + 4 * period)
        sizes = [len(s) for s in sets]
        # first clearing lands at turn == threshold, then the visible size
        # cycles retain, retain+1, ..., threshold-1
        cycle = sizes[threshold - 1 : threshold - 1 + period]
        assert cycle == list(range(retain, threshold))
        for i in range(threshold - 1, len(sizes)):
            assert sizes[i] == cycle[(i - (threshold - 1)) % period]

    @given(st.integers(min_value=1, max_value=12))
    @settings(max_examples=12, deadline=None)
    def test_window_equals_degenerate_clip(self, w):
        window = PolicyConfig("window", window_size=w)
        clip = PolicyConfig("clip", clear_threshold=w + 1, retain_recent=w)
        win_sets, _ = drive(window, 200)
        clip_sets, _ = drive(clip, 200)
        assert win_sets == clip_sets

    @given(clip_params())
    @settings(max_examples=30, deadline=None)
    def test_visible_never_future(self, params):
        retain, threshold = params
        cfg = PolicyConfig("clip", clear_threshold=threshold, retain_recent=retain)
        sets, _ = drive(cfg, 50)
        for t, vis in enumerate(sets, start=1):
            assert all(1 <= i <= t for i in vis)
            if retain >= 1:
                assert t in vis

    @given(clip_params())
    @settings(max_examples=30, deadline=None)
    def test_visible_matches_next_retained(self, params):
        # the set visible at turn t is exactly the trimmed context after t
        retain, threshold = params
        cfg = PolicyConfig("clip", clear_threshold=threshold, retain_recent=retain)
        state = PolicyState()
        for t in range(1, 40):
            vis = visible_rounds(cfg, state, t)
            state = update_after_round(cfg, state, t)
            assert vis == state.retained
