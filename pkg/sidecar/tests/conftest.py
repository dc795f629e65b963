"""Shared fixtures: tiny random-weight checkpoints and a live service.

The conformance suite needs a real HTTP server backed by real transformers
models, but not by *pretrained* ones — shapes and protocol behavior are
weight-independent. So these fixtures build a miniature BERT (32-dim, two
layers, hand-written wordpiece vocab) from a fixed seed, save it to disk,
and serve it with uvicorn on an ephemeral port.
"""

import os

os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")

import threading
import time
from contextlib import contextmanager

import pytest
import torch
import uvicorn
from transformers import BertConfig, BertForMaskedLM, BertModel, BertTokenizer

from parc_sidecar import SidecarConfig, create_app

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "film", "was", "absolutely", "tonight",
    "great", "terrible", "service", "checks", "are",
    "to", "write", "hello", "world", "completely",
    "different", "text", "no", "mask", "here",
    "one", "and", "two", "a", "man",
    "is", "playing", "guitar", "someone", "plays",
    "weather", "cold", "today", "paris", "capital",
    "of", "france", "dog", ".", ",",
    "##s", "##ing", "##ed",
]

HIDDEN = 32
MAX_LEN = 64


def _write_tokenizer(directory):
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file), model_max_length=MAX_LEN)
    tokenizer.save_pretrained(directory)


def _bert_config():
    return BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=HIDDEN,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=MAX_LEN,
    )


@pytest.fixture(scope="session")
def tiny_mlm_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("tiny-mlm")
    torch.manual_seed(1234)
    BertForMaskedLM(_bert_config()).save_pretrained(directory)
    _write_tokenizer(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_embedder_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("tiny-embedder")
    torch.manual_seed(5678)
    BertModel(_bert_config()).save_pretrained(directory)
    _write_tokenizer(directory)
    return directory


@contextmanager
def _serve(app):
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 30.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("service did not start within 30s")
        if not thread.is_alive():
            raise RuntimeError("service thread died during startup")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10)


@pytest.fixture(scope="session")
def serve_app():
    return _serve


@pytest.fixture(scope="session")
def tiny_config(tiny_mlm_dir, tiny_embedder_dir):
    return SidecarConfig(
        embedder=str(tiny_embedder_dir),
        mlm=str(tiny_mlm_dir),
        port=0,
        max_batch=8,
    )


@pytest.fixture(scope="session")
def tiny_app(tiny_config):
    return create_app(tiny_config)


@pytest.fixture(scope="session")
def service_url(tiny_app):
    with _serve(tiny_app) as url:
        yield url
