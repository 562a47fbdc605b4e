"""Python access to the d2im core: fixtures, fitting, extraction, metrics and transfer."""

import json as _json

from ._core import (
    Camera,
    Error,
    Field,
    FitConfig,
    ParseError,
    TriMesh,
    UsageError,
    chamfer,
    default_config,
    evaluate,
    extract,
    fit,
    fixture,
    fixture_names,
    marching_cubes,
    normalize_config,
    run,
    signed_distance,
    transfer,
)


def run_config(verb, config=None, **sections):
    """Run a CLI verb with a config given as a dict; returns (exit_code, log, errors)."""
    merged = dict(config or {})
    merged.update(sections)
    return run(verb, _json.dumps(merged))


__all__ = [
    "Camera", "Error", "Field", "FitConfig", "ParseError", "TriMesh", "UsageError",
    "chamfer", "default_config", "evaluate", "extract", "fit", "fixture", "fixture_names",
    "marching_cubes", "normalize_config", "run", "run_config", "signed_distance", "transfer",
]
