"""Preference summarization, benchmark evaluation and tidying simulation."""

import json

from ._tidybot import (
    ConfigError,
    Error,
    ParseError,
    ValidationError,
    cache_key,
    category_extraction_prompt,
    cosine_similarity,
    normalize_for_match,
    parse_object_list,
    parse_placements,
    parse_primitive_choices,
    parse_summary,
    plan_grid,
    primitive_selection_prompt,
    primitive_summarization_prompt,
    receptacle_selection_prompt,
    receptacle_summarization_prompt,
    taxonomy_distance,
    validate_dataset,
)
from . import _tidybot

__all__ = [
    "ConfigError",
    "Error",
    "ParseError",
    "ValidationError",
    "cache_key",
    "category_extraction_prompt",
    "cosine_similarity",
    "evaluate",
    "normalize_for_match",
    "parse_object_list",
    "parse_placements",
    "parse_primitive_choices",
    "parse_summary",
    "plan_grid",
    "primitive_selection_prompt",
    "primitive_summarization_prompt",
    "receptacle_selection_prompt",
    "receptacle_summarization_prompt",
    "simulate",
    "sweep",
    "taxonomy_distance",
    "validate_dataset",
]


def _paths(**kwargs):
    return {k: (None if v is None else str(v)) for k, v in kwargs.items()}


def evaluate(dataset, method="summarization", task="receptacle", workers=1, replay=None, endpoint=None,
             cache=None, model="text-davinci-003", taxonomy=None, synonyms=None, mapping=None, embeddings=None,
             human_summaries=None):
    """Run a benchmark and return the report as a dict."""
    opts = _paths(replay=replay, cache=cache, taxonomy=taxonomy, synonyms=synonyms, mapping=mapping,
                  embeddings=embeddings, human_summaries=human_summaries)
    text = _tidybot.evaluate(str(dataset), method=method, task=task, workers=workers, endpoint=endpoint,
                             model=model, **opts)
    return json.loads(text)


def simulate(scene, config, seed=0, rules="oracle", replay=None, model="text-davinci-003"):
    """Run one episode; returns (log dict, list of trace dicts)."""
    log, trace = _tidybot.simulate(str(scene), str(config), seed=seed, rules=str(rules),
                                   replay=None if replay is None else str(replay), model=model)
    return json.loads(log), [json.loads(line) for line in trace.splitlines() if line]


def sweep(scenes, config, seeds=300, seed=0, workers=1):
    """Run seeded episodes with ground-truth rules and return the sweep result as a dict."""
    return json.loads(_tidybot.sweep([str(s) for s in scenes], str(config), seeds=seeds, seed=seed,
                                     workers=workers))
