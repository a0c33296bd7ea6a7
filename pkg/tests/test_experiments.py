import math

import numpy as np
import pytest

from opcalc.baselines import BaselineStore
from opcalc.config import ExperimentConfig
from opcalc.errors import MissingBaseline
from opcalc.experiments import (besov_equivalence_configs, capture_besov_equivalence,
                                parallel_map, run_besov_equivalence, run_experiment,
                                run_meyer, run_moi, run_verify_core)


def test_verify_core_battery():
    cfg = ExperimentConfig(kind="verify-core", seed=7)
    res = run_verify_core(cfg, BaselineStore())
    assert len(res.assertions) >= 40
    assert res.passed, [a.name for a in res.assertions if not a.passed]


def test_verify_core_deterministic():
    cfg = ExperimentConfig(kind="verify-core", seed=13)
    r1 = run_verify_core(cfg, BaselineStore())
    r2 = run_verify_core(cfg, BaselineStore())
    assert [(a.name, a.value) for a in r1.assertions] == [(a.name, a.value) for a in r2.assertions]


def test_moi_experiment_slope_bounds():
    cfg = ExperimentConfig(kind="moi", seed=5, ensemble=8, expr="exp(x)")
    res = run_moi(cfg, BaselineStore())
    assert res.passed
    slope = res.tables["binned_slope"][0]["slope"]
    assert -1.3 <= slope <= -0.7


def test_meyer_experiment():
    cfg = ExperimentConfig(kind="meyer", seed=5, ensemble=4, band=3, n_modes=16, theta_num=1)
    res = run_meyer(cfg, BaselineStore())
    assert res.passed
    assert all(row["K32"] <= 1e-8 for row in res.tables["residuals"])


def test_besov_equivalence_against_committed_baseline():
    # smallest committed configuration; reruns must land inside the bands
    cfg = next(c for c in besov_equivalence_configs()
               if c.n_modes == 8 and c.s == 1.5 and c.p == 2.0 and c.q == 2.0)
    store = BaselineStore.load()
    res = run_besov_equivalence(cfg, store)
    assert res.passed, [a.name for a in res.assertions if not a.passed]
    rows = res.tables["norms"]
    assert set(rows[0].keys()) == {"config-hash", "element-seed", "norm-form",
                                   "value", "ratio", "baseline", "pass"}
    assert len(rows) == 3 * cfg.ensemble
    assert all(r["pass"] for r in rows)


def test_besov_equivalence_missing_baseline():
    cfg = ExperimentConfig(kind="besov-equivalence", seed=99, ensemble=2, band=2,
                           n_modes=8, s=1.5, p=2, q=2, n_der=1)
    with pytest.raises(MissingBaseline):
        run_besov_equivalence(cfg, BaselineStore(data={}))


def test_capture_then_run_roundtrip(tmp_path):
    cfg = ExperimentConfig(kind="besov-equivalence", seed=42, ensemble=3, band=2,
                           n_modes=8, s=1.5, p=2, q=2, n_der=1)
    store = BaselineStore(data={}, path=str(tmp_path / "c.json"))
    capture_besov_equivalence(cfg, store)
    res = run_besov_equivalence(cfg, store)
    assert res.passed


def test_run_experiment_dispatch():
    cfg = ExperimentConfig(kind="verify-core", seed=3)
    res = run_experiment(cfg, BaselineStore())
    assert res.kind == "verify-core"
    assert res.config_hash == cfg.config_hash


def test_parallel_map_order_preserved():
    items = list(range(20))
    assert parallel_map(lambda v: v * v, items, jobs=1) == [v * v for v in items]
