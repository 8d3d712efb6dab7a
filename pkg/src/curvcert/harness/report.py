"""Suite orchestration and the JSON / CSV report formats.

Report schema ``curvcert.report/1``::

    {"schema": "curvcert.report/1",
     "provenance": {"seed": int, "config_hash": sha256 of the canonical config},
     "verdict": "pass" | "fail",
     "checks": [{"name", "title", "basis", "status", "measured", "tolerances",
                 "time_limit", "error"}, ...],
     "timing": {check name: seconds}}

Everything except ``timing`` is deterministic for a fixed config and seed.
CSV output has one row per sampled point recorded by scan checks.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

from ..errors import UsageError
from .checks import ACCEPTANCE, CHECKS, TOLERANCES, CheckRecord, run_check

SCHEMA = "curvcert.report/1"


@dataclass
class SuiteReport:
    records: list[CheckRecord]
    seed: int
    config_hash: str
    schema: str = SCHEMA
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.records)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def body(self) -> dict:
        return {"schema": self.schema, "provenance": {"seed": self.seed, "config_hash": self.config_hash},
                "verdict": self.verdict, "checks": [r.body() for r in self.records]}

    def to_dict(self) -> dict:
        return {**self.body(), "timing": {r.name: round(r.runtime, 3) for r in self.records}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        rows = [row for r in self.records for row in r.rows]
        buf = io.StringIO()
        if rows:
            keys = sorted({k for row in rows for k in row})
            w = csv.DictWriter(buf, fieldnames=keys)
            w.writeheader()
            w.writerows(rows)
        return buf.getvalue()

    def lines(self) -> list[str]:
        out = []
        for r in self.records:
            extra = f" ({r.error})" if r.error else ""
            out.append(f"[{r.status.upper()}] {r.name}: {r.title} [{r.runtime:.2f}s]{extra}")
        out.append(f"verdict: {self.verdict}")
        return out


def default_config() -> dict:
    return {"checks": list(ACCEPTANCE), "seed": 0, "tolerances": {}}


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def run_suite(config: dict | None = None) -> SuiteReport:
    """Run the named checks in order with a fixed seed; the verdict is their conjunction."""
    config = default_config() if config is None else dict(config)
    checks = list(config.get("checks", []))
    seed = int(config.get("seed", 0))
    tolerances = dict(config.get("tolerances", {}))
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}")
    bad_tol = [k for k in tolerances if k not in TOLERANCES]
    if bad_tol:
        raise UsageError(f"unknown tolerance(s): {', '.join(bad_tol)}")
    canonical = {"checks": checks, "seed": seed, "tolerances": tolerances}
    records = [run_check(name, tolerances, seed) for name in checks]
    return SuiteReport(records, seed, config_hash(canonical))
