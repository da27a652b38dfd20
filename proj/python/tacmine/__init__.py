"""Tactic mining for multivariate event sequences."""

import json

from . import _core
from ._core import TacmineError

__all__ = [
    "TacmineError",
    "Api",
    "generate_dataset",
    "normalize_dataset",
    "mine",
    "score",
    "tactic_distance",
    "parse_suggestion",
    "benchmark",
]


def _dump(obj):
    if obj is None:
        return ""
    return obj if isinstance(obj, str) else json.dumps(obj)


def generate_dataset(params=None):
    """Returns {"dataset": ..., "ground_truth": ...}."""
    return json.loads(_core.generate_dataset(_dump(params or {})))


def normalize_dataset(dataset):
    return json.loads(_core.normalize_dataset(_dump(dataset)))


def mine(dataset, params=None, miner=None):
    return json.loads(_core.mine(_dump(dataset), _dump(params), _dump(miner)))


def score(dataset, tactics, params=None):
    return json.loads(_core.score(_dump(dataset), _dump(tactics), _dump(params)))


def tactic_distance(schema, a, b):
    return _core.tactic_distance(_dump(schema), _dump(a), _dump(b))


def parse_suggestion(text, schema, tactics, selected=()):
    return json.loads(_core.parse_suggestion(text, _dump(schema), _dump(tactics), list(selected)))


def benchmark(config):
    return json.loads(_core.benchmark(_dump(config)))


class Api:
    """In-process service router; same requests and responses as the HTTP server."""

    def __init__(self, config=None):
        self._api = _core.Api(_dump(config or {}))

    def request(self, method, path, body=None):
        status, text = self._api.handle(method, path, _dump(body))
        return status, json.loads(text)

    def wait_for_jobs(self):
        self._api.wait_for_jobs()
