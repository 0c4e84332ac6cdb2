"""Federated graph learning simulator with personalized propagation."""

import json

from ._adafgl import (
    ConfigError,
    Graph,
    Task,
    community_split,
    compute_hcs,
    edge_homophily,
    load_graph,
    load_task,
    make_masks,
    metrics,
    node_homophily,
    save_graph,
    save_task,
    sbm_generate,
    set_quiet,
    structure_noniid_split,
)
from ._adafgl import default_config as _default_config
from ._adafgl import train as _train

__all__ = [
    "ConfigError",
    "Graph",
    "Task",
    "community_split",
    "compute_hcs",
    "default_config",
    "edge_homophily",
    "load_graph",
    "load_task",
    "make_masks",
    "metrics",
    "node_homophily",
    "save_graph",
    "save_task",
    "sbm_generate",
    "set_quiet",
    "structure_noniid_split",
    "train",
]


def default_config():
    return json.loads(_default_config())


def train(config=None, **overrides):
    """Run an experiment from a config dict. Keyword overrides are merged on top."""
    cfg = dict(config or {})
    cfg.update(overrides)
    return _train(json.dumps(cfg))
