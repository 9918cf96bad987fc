"""Payment channel network routing: topology generation, virtual coordinates,
MDT and line-walk routing, anonymity formulas and the experiment runner."""

import json

from . import _core
from ._core import (
    Error,
    Graph,
    Mdt,
    ProtocolError,
    anonymity_mdt,
    anonymity_pe,
    assign_coordinates,
    build_mdt,
    decode_message,
    encode_message,
    entropy_ratio,
    largest_component,
    path_avoid_prob,
    read_topology_csv,
    route_mdt,
    route_pe,
    svd_spectrum,
    write_topology_csv,
)

__all__ = [
    "Error",
    "Graph",
    "Mdt",
    "ProtocolError",
    "anonymity_mdt",
    "anonymity_pe",
    "assign_coordinates",
    "build_mdt",
    "decode_message",
    "encode_message",
    "entropy_ratio",
    "generate",
    "largest_component",
    "path_avoid_prob",
    "read_topology_csv",
    "route_mdt",
    "route_pe",
    "run_experiment",
    "svd_spectrum",
    "write_topology_csv",
]


def generate(model="waxman", n=100, *, seed, capacity=None, **params):
    """Synthetic topology. `params` are the generator keys (alpha, beta,
    mean_degree, m, rows, cols); `capacity` is a dict such as
    {"kind": "lognormal", "median": 50000, "sigma": 0.5}."""
    cfg = {"model": model, "n": n, "seed": seed, **params}
    if capacity is not None:
        cfg["capacity_dist"] = capacity
    return _core._generate(json.dumps(cfg))


def run_experiment(config):
    """Runs every seed of an experiment config (a dict in the JSON config
    schema) and returns one metrics dict per run."""
    return _core._run_experiment(json.dumps(config))

