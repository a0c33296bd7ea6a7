"""Committed empirical-constant baselines.

The inequalities exercised by the harnesses carry implicit constants, so the
workbench stores one committed constant per (configuration, metric) pair and
asserts non-regression.  The store is a flat JSON object mapping
"<config-hash>/<metric>" to a float; "<config-hash>/_config" keeps the
canonical parameter string for humans.  Existing keys are never overwritten
without force; forced overwrites append an audit line.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

from .errors import MissingBaseline

AUDIT_KEY = "_audit"


def packaged_baseline_path():
    return resources.files("opcalc").joinpath("data/constants.json")


@dataclass
class BaselineStore:
    data: dict = field(default_factory=dict)
    path: object = None

    @classmethod
    def load(cls, path=None) -> "BaselineStore":
        if path is None:
            src = packaged_baseline_path()
            text = src.read_text() if src.is_file() else "{}"
            return cls(data=json.loads(text), path=None)
        path = os.fspath(path)
        if os.path.exists(path):
            with open(path) as fh:
                return cls(data=json.load(fh), path=path)
        return cls(data={}, path=path)

    def save(self, path=None):
        target = os.fspath(path) if path is not None else self.path
        if target is None:
            raise ValueError("no path to save the baseline store to")
        os.makedirs(os.path.dirname(os.path.abspath(target)), exist_ok=True)
        with open(target, "w") as fh:
            json.dump(self.data, fh, indent=1, sort_keys=True)
            fh.write("\n")

    def get(self, config_hash: str, metric: str) -> float:
        key = f"{config_hash}/{metric}"
        if key not in self.data:
            raise MissingBaseline(
                f"no baseline for {key}; run `opcalc baseline <config>` to capture it"
            )
        return float(self.data[key])

    def has(self, config_hash: str, metric: str) -> bool:
        return f"{config_hash}/{metric}" in self.data

    def set(self, config_hash: str, metric: str, value: float, force: bool = False,
            label: str = ""):
        key = f"{config_hash}/{metric}"
        if key in self.data and not force:
            raise FileExistsError(
                f"baseline {key} already present (value {self.data[key]!r}); use --force to overwrite"
            )
        if key in self.data and force:
            audit = self.data.setdefault(AUDIT_KEY, [])
            audit.append(f"overwrote {key}: {self.data[key]!r} -> {value!r}")
        self.data[key] = float(value)
        if label:
            self.data[f"{config_hash}/_config"] = label
