"""Run driver: initialise from a ``RunConfig``, step to ``t_end``, monitor and write output."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .app.config import RunConfig, serialize_config
from .app.io import SnapshotFrame, write_diagnostics_csv, write_snapshot
from .diagnostics import DiagnosticsSeries
from .errors import StateCorruptionError, UsageError
from .grid import lp_norm
from .solver import State, StepStats, check_state, recover_state_temperature, step

StepHook = Callable[[int, float, float, State, StepStats], None]


@dataclass
class RunResult:
    state: State
    series: DiagnosticsSeries
    t: float
    steps: int
    output_dir: Optional[Path] = None


def run(config: RunConfig, on_step: Optional[StepHook] = None, workers: Optional[int] = None):
    """Advance the configured problem from ``t = 0`` to ``t_end``.

    Diagnostics are recorded at step 0, every ``diag_every`` steps and after
    the last step.  ``on_step(step, t, dt, state, stats)`` is called after
    every accepted step.  With ``output_dir`` set, ``diagnostics.csv``, the
    resolved ``config.txt``, periodic snapshots (``snapshot_every``) and
    ``final.nsfac`` are written there; on a solver failure the last valid
    state goes to ``failure.nsfac`` before the error propagates.

    ``workers`` overrides the configured worker count; results do not depend
    on it.
    """
    g = config.grid()
    model = config.model(workers)
    ctl = config.step_control()
    out = Path(config.output_dir) if config.output_dir else None

    state = config.initial_state(model)
    check_state(state, model, stage="initial")
    state.theta = recover_state_temperature(state, model, stage="initial")

    series = DiagnosticsSeries(theta_bar=config.theta_bar)
    series.record(0, 0.0, 0.0, state, g, model, 0.0)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(serialize_config(config), encoding="utf-8")

    t, n, dt, produced = 0.0, 0, 0.0, 0.0
    try:
        while t < ctl.t_end and (config.max_steps is None or n < config.max_steps):
            new, dt, stats = step(state, g, model, t, ctl)
            if dt <= 0:
                break
            remaining = ctl.t_end - t
            t = ctl.t_end if dt == remaining else t + dt
            n += 1
            state = new
            produced += stats.production * dt
            if on_step is not None:
                on_step(n, t, dt, state, stats)
            if n % config.diag_every == 0:
                series.record(n, t, dt, state, g, model, produced)
            if out is not None and config.snapshot_every and n % config.snapshot_every == 0:
                write_snapshot(SnapshotFrame.from_state(state, g, t), out / f"snapshot_{n:06d}.nsfac")
    except StateCorruptionError:
        if out is not None:
            write_snapshot(SnapshotFrame.from_state(state, g, t), out / "failure.nsfac")
            write_diagnostics_csv(series.records, out / "diagnostics.csv")
        raise

    if series[-1].step != n:
        series.record(n, t, dt, state, g, model, produced)
    if out is not None:
        write_diagnostics_csv(series.records, out / "diagnostics.csv")
        write_snapshot(SnapshotFrame.from_state(state, g, t), out / "final.nsfac")
    return RunResult(state, series, t, n, out)


# --- regularisation sweep ----------------------------------------------------


@dataclass
class SweepRow:
    value: float
    epsilon: float
    delta: float
    dist_rho: float
    dist_chi: float

    @property
    def distance(self):
        return math.hypot(self.dist_rho, self.dist_chi)


def regularization_sweep(config: RunConfig, param: str, values, workers: Optional[int] = None):
    """Final-state L2 distance of ``(rho, chi)`` to the unregularised run, per parameter value.

    ``param = "delta"`` sets ``epsilon = delta**2`` alongside; ``param = "epsilon"``
    varies the parabolic term alone.  Output files are not written.
    """
    if param not in ("delta", "epsilon"):
        raise UsageError(f"unknown sweep parameter {param!r} (expected 'delta' or 'epsilon')")
    base_cfg = config.replace(epsilon=0.0, delta=0.0, output_dir=None)
    g = base_cfg.grid()
    base = run(base_cfg, workers=workers).state
    rows = []
    for v in values:
        v = float(v)
        eps, delta = (v * v, v) if param == "delta" else (v, 0.0)
        state = run(base_cfg.replace(epsilon=eps, delta=delta), workers=workers).state
        rows.append(SweepRow(v, eps, delta, lp_norm(state.rho - base.rho, g, 2),
                             lp_norm(state.chi - base.chi, g, 2)))
    return rows
