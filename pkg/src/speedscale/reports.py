"""Run reports: machine-readable records of every command execution.

Every ratio in a report is the quotient of two energies that also appear in
the report, and ratios are reproducible: identical inputs and seeds give
byte-identical reports apart from the wall-time field.
"""

from __future__ import annotations

import time

from . import __version__
from .serialize import instance_digest


def make_report(
    command: str,
    instance=None,
    parameters: dict | None = None,
    energies: dict | None = None,
    bounds: dict | None = None,
    wall_time_s: float | None = None,
) -> dict:
    report = {
        "command": command,
        "version": __version__,
        "parameters": parameters or {},
    }
    if instance is not None:
        report["instance_digest"] = instance_digest(instance)
    if energies:
        report["energies"] = energies
    if bounds:
        report["bounds"] = bounds
    report["wall_time_s"] = wall_time_s if wall_time_s is not None else 0.0
    return report


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
