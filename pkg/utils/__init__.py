from . import (  # noqa: F401
    cli,
    data_loader,
    distributions,
    empirics,
    equilibrium,
    error_handler,
    exporter,
    identification,
    logging_manager,
    numerics,
    oracle,
    parallel,
    simulator,
    verification,
)

__all__ = [
    "cli",
    "data_loader",
    "distributions",
    "empirics",
    "equilibrium",
    "error_handler",
    "exporter",
    "identification",
    "logging_manager",
    "numerics",
    "oracle",
    "parallel",
    "simulator",
    "verification",
]
