"""Run a scenario and emit its per-round CSV and summary."""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .scenarios import execute

OUT_DIR_ENV = "LOCCTL_OUT_DIR"


def default_out_dir():
    return Path(os.environ.get(OUT_DIR_ENV, "locctl-out"))


@dataclass
class RunRecord:
    config_hash: str
    scenario: str
    seed: int
    columns: list
    rows: np.ndarray  # float matrix, one row per round
    summary: dict = field(default_factory=dict)

    def __len__(self):
        return self.rows.shape[0]

    @property
    def passed(self):
        return bool(self.summary.get("passed", True))

    def csv_text(self):
        lines = [",".join(self.columns)]
        feas = self.columns.index("feasible")
        for row in self.rows:
            cells = [repr(float(v)) if i != feas else str(int(v)) for i, v in enumerate(row)]
            cells[0] = str(int(row[0]))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def summary_json(self):
        # wall time is left out so files are byte-identical across reruns
        s = {k: v for k, v in self.summary.items() if k != "wall_time"}
        return json.dumps(s, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.scenario}-seed{self.seed}"
        (out / f"{stem}.csv").write_text(self.csv_text(), encoding="utf-8")
        (out / f"{stem}.json").write_text(self.summary_json(), encoding="utf-8")
        return out / f"{stem}.csv"


def _columns(prefix, k):
    return [f"{prefix}{i}" for i in range(k)]


def _bulky(v):
    return isinstance(v, (list, tuple, np.ndarray)) and np.size(v) >= 100


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def run_scenario(config: ScenarioConfig, seed=None, out_dir=None, write=False):
    """Run one (config, seed) pair. Deterministic in the seed."""
    seed = config.seeds[0] if seed is None else int(seed)
    t0 = time.perf_counter()
    oc = execute(config, seed)
    wall = time.perf_counter() - t0
    T = len(oc.losses)
    d, m = oc.states.shape[1], oc.actions.shape[1]
    cols = (["t"] + _columns("target", d) + _columns("action", m) + _columns("state", d)
            + ["w_norm", "loss", "cum_regret", "residual", "feasible"])
    cum = np.cumsum(oc.losses - oc.comparator)
    rows = np.column_stack([np.arange(1, T + 1), oc.targets, oc.actions, oc.states, oc.w_norms, oc.losses, cum,
                            oc.residuals, oc.feasible.astype(float)]) if T else np.zeros((0, len(cols)))
    ratio = None
    if oc.bound is not None and oc.bound > 0:
        ratio = oc.regret / oc.bound
    checks = {k: bool(v) for k, v in oc.checks.items()}
    summary = {
        "scenario": config.scenario, "seed": seed, "T": T, "config_hash": config.config_hash(),
        "final_regret": oc.regret, "bound": oc.bound, "bound_ratio": ratio, "wall_time": wall,
        "checks": checks, "passed": all(checks.values()), "digest": oc.digest,
        "meta": {k: v for k, v in oc.meta.items() if not _bulky(v)},
    }
    rec = RunRecord(config.config_hash(), config.scenario, seed, cols, rows, _plain(summary))
    if write or out_dir is not None:
        rec.write(out_dir if out_dir is not None else (config.output or default_out_dir()))
    return rec


def run_all(config: ScenarioConfig, out_dir=None, write=False):
    return [run_scenario(config, s, out_dir, write) for s in config.seeds]
