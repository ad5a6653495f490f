"""Python bindings for the insclr C++ core."""

from ._insclr import (
    InsclrError,
    RunConfig,
    average_precision,
    candidate_pool,
    default_config,
    evaluate,
    generate_dataset,
    parse_config,
    run_command,
    run_experiment,
)

__all__ = [
    "InsclrError",
    "RunConfig",
    "average_precision",
    "candidate_pool",
    "default_config",
    "evaluate",
    "generate_dataset",
    "parse_config",
    "run_command",
    "run_experiment",
]
