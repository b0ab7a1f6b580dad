"""Minimum-energy speed-scaling scheduling toolkit.

Library for non-preemptive speed-scaling scheduling: exact single-processor
oracles, an interval-indexed LP relaxation with a constant-factor rounding
pipeline, a multiprocessor scheduler built on greedy independent sets, and a
3-dimensional-matching hardness reduction, plus a FastAPI service and a CLI.
"""

__version__ = "0.1.0"

from .instances import (  # noqa: F401
    Assignment,
    HeterogeneousInstance,
    HetJob,
    HetProcessor,
    Instance,
    Job,
    Schedule,
    energy_of_job,
    energy_of_schedule,
    rescale_energy,
    validate_schedule,
)
from .serialize import (  # noqa: F401
    instance_digest,
    parse_instance,
    parse_schedule,
    serialize_instance,
    serialize_schedule,
)
