"""Curvature-penalized minimal paths on orientation-lifted grids."""

import json

from ._elastica import (
    ElasticaError,
    Metric,
    agsi_solve,
    bench,
    edge_response,
    eval_elastica,
    fast_march,
    oriented_flux,
    read_image,
    speed_function,
    trace,
    write_png,
)
from ._elastica import run as _run

__all__ = [
    "ElasticaError",
    "Metric",
    "agsi_solve",
    "bench",
    "edge_response",
    "eval_elastica",
    "fast_march",
    "oriented_flux",
    "read_image",
    "run",
    "speed_function",
    "trace",
    "write_png",
]


def run(config, image, seeds):
    """Run contour, group, tubular, trace or solve on an image.

    ``config`` and ``seeds`` may be dicts or JSON strings; the result is a dict
    with the same content the command-line tool writes.
    """
    if not isinstance(config, str):
        config = json.dumps(config)
    if not isinstance(seeds, str):
        seeds = json.dumps(seeds)
    return json.loads(_run(config, image, seeds))
