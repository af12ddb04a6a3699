"""Fixtures: a tiny local checkpoint and a three-round transcript.

The sandbox has no model-hub access, so tests build a small randomly
initialized GPT-2-style checkpoint on disk; it exercises the exact same
loading, forward-pass, and export paths as a published checkpoint.
"""

import json
import os

import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

CORPUS = (
    "system user assistant : goal observation maze grid move one cell in four "
    "directions up down left right reach the at position walls adjacent none "
    "current you are navigating a ( ) , . 0 1 2 3 4 5 6 7 8 9 Observation"
)


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("checkpoint")
    vocab = {"<unk>": 0}
    for word in CORPUS.split():
        vocab.setdefault(word, len(vocab))
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    fast = PreTrainedTokenizerFast(tokenizer_object=tokenizer, unk_token="<unk>")
    fast.save_pretrained(path)
    torch.manual_seed(7)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=512,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=0,
        eos_token_id=0,
    )
    GPT2LMHeadModel(config).save_pretrained(path)
    return str(path)


@pytest.fixture()
def three_round_transcript(tmp_path):
    """Transcript in the documented wire format: one JSON message per line."""
    lines = [
        {"role": "system", "tag": "system_prompt", "round_index": 0,
         "content": "You are navigating a maze grid. Move one cell in four directions."},
        {"role": "user", "tag": "goal", "round_index": 0,
         "content": "Reach the goal at position ( 4 , 2 )."},
    ]
    observations = [
        "Current position ( 1 , 2 ). Walls adjacent : left",
        "Current position ( 2 , 2 ). Walls adjacent : none",
        "Current position ( 3 , 2 ). Walls adjacent : right",
    ]
    actions = ["down", "down", "down"]
    for i, (obs, act) in enumerate(zip(observations, actions), start=1):
        lines.append({"role": "user", "tag": "observation_header",
                      "round_index": i, "content": "Observation:\n"})
        lines.append({"role": "user", "tag": "observation_body",
                      "round_index": i, "content": obs})
        lines.append({"role": "assistant", "tag": "action",
                      "round_index": i, "content": act})
    path = tmp_path / "transcript.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line) + "\n")
    return str(path)
