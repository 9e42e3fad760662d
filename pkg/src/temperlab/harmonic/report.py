"""Verification reports and quadrature settings."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

RULES = ("max<=", "min>=", "spread<=")


@dataclass(frozen=True)
class QuadratureConfig:
    node_count: int = 2048
    truncation: float = 40.0
    mc_samples: int = 1_000_000
    seed: int = 0
    t_points: int = 32

    def __post_init__(self):
        if self.node_count < 8:
            raise ValueError("node_count must be at least 8")
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")
        if self.t_points < 3:
            raise ValueError("t_points must be at least 3")

    def to_json(self) -> dict:
        return {
            "node_count": self.node_count,
            "truncation": self.truncation,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "t_points": self.t_points,
        }


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one numerical check.

    ``passed`` is derived from the observed range, the rule and the
    tolerance (plus ``slack``, used for Monte-Carlo standard errors); a
    report with ``parts`` passes only if every part passes as well.
    """

    check: str
    rule: str
    tolerance: float
    observed_min: float
    observed_max: float
    parameters: dict = field(default_factory=dict)
    slack: float = 0.0
    seed: int | None = None
    samples: int | None = None
    series: tuple = ()
    series_labels: tuple = ("t", "value")
    details: dict = field(default_factory=dict)
    parts: tuple = ()

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}")

    @property
    def own_pass(self) -> bool:
        lo, hi = self.observed_min, self.observed_max
        if any(isinstance(x, float) and math.isnan(x) for x in (lo, hi)):
            return False
        if self.rule == "max<=":
            return hi <= self.tolerance + self.slack
        if self.rule == "min>=":
            return lo >= self.tolerance - self.slack
        if lo <= 0:
            return False
        return hi / lo <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.own_pass and all(p.passed for p in self.parts)

    def to_json(self) -> dict:
        out = {
            "check": self.check,
            "rule": self.rule,
            "tolerance": self.tolerance,
            "observed_min": self.observed_min,
            "observed_max": self.observed_max,
            "slack": self.slack,
            "passed": self.passed,
            "parameters": self.parameters,
            "seed": self.seed,
            "samples": self.samples,
            "details": self.details,
        }
        if self.series:
            out["series"] = {
                "labels": list(self.series_labels),
                "rows": [list(r) for r in self.series],
            }
        if self.parts:
            out["parts"] = [p.to_json() for p in self.parts]
        return out


def to_csv(report: VerificationReport) -> str:
    """Series of a report (and its parts) as CSV text, one block per report."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for rep in (report,) + tuple(report.parts):
        if not rep.series:
            continue
        writer.writerow(["check"] + list(rep.series_labels))
        for row in rep.series:
            writer.writerow([rep.check] + [repr(float(x)) for x in row])
    return buf.getvalue()
