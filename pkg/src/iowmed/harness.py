"""Power and type-I error sweeps over simulated scenarios.

Every replicate's seed is derived from ``(master_seed, cell_index,
replicate_index)``, so the output does not depend on the number of workers
or on the order in which replicates finish.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .exceptions import IowmedError, InvalidParameterError
from .mediation import OutcomeFamily
from .pipeline import analyze
from .reduction import ReductionStrategy
from .seeding import derive_seed
from .simulate import SimScenario, generate

logger = logging.getLogger(__name__)

HEADER = ("n", "p", "t", "effect", "family", "strategy", "alpha", "rejection_rate", "n_sims_completed", "n_failures")
UNRELIABLE_FAILURE_SHARE = 0.2
P_RULES = {"equal_n": 1, "double_n": 2}


@dataclass(frozen=True)
class SweepConfig:
    n_grid: tuple = (50, 70, 100, 150, 300, 500)
    p_rules: tuple = ("equal_n", "double_n")
    effect_grid: tuple = (0.5, 1.0, 5.0)
    t_grid: tuple = (1, 5, 10)
    families: tuple = (OutcomeFamily.CONTINUOUS, OutcomeFamily.DICHOTOMOUS)
    strategies: tuple = (ReductionStrategy.UMAP,)
    n_sims: int = 200
    B: int = 200
    alpha_grid: tuple = (0.05, 0.01)
    master_seed: int = 0
    n_components: int = 2
    null_scenario: bool = False

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(OutcomeFamily.parse(f) for f in self.families))
        object.__setattr__(self, "strategies", tuple(ReductionStrategy.parse(s) for s in self.strategies))
        for name in ("n_grid", "p_rules", "effect_grid", "t_grid", "families", "strategies", "alpha_grid"):
            if not getattr(self, name):
                raise InvalidParameterError(f"{name} must not be empty")
        unknown = set(self.p_rules) - set(P_RULES)
        if unknown:
            raise InvalidParameterError(f"unknown p rule(s): {sorted(unknown)}")
        if self.n_sims < 1 or self.B < 1:
            raise InvalidParameterError("n_sims and B must be positive")
        if not all(0 < a < 1 for a in self.alpha_grid):
            raise InvalidParameterError("alphas must lie in (0, 1)")

    def cells(self):
        """Grid cells in a fixed enumeration order; the position is the cell index."""
        out = []
        for n, rule, effect, t, family, strategy in itertools.product(
            self.n_grid, self.p_rules, self.effect_grid, self.t_grid, self.families, self.strategies
        ):
            out.append(Cell(int(n), int(n) * P_RULES[rule], int(t), float(effect), family, strategy))
        return out


def smoke_config(**overrides):
    """Corner grid with 50 simulations per cell."""
    base = SweepConfig(n_grid=(50, 100), p_rules=("equal_n",), effect_grid=(0.5, 5.0), t_grid=(1, 10), n_sims=50)
    return replace(base, **overrides)


def type1_config(**overrides):
    """Null-scenario grid: n and p as in the power study, 1000 simulations."""
    base = SweepConfig(effect_grid=(1.0,), t_grid=(5,), n_sims=1000, null_scenario=True)
    return replace(base, **overrides)


PRESETS = {
    "full": SweepConfig,
    "smoke": smoke_config,
    "type1": type1_config,
    "type1-smoke": lambda **kw: type1_config(**{"n_grid": (100,), "p_rules": ("equal_n",), "n_sims": 200, **kw}),
}


@dataclass(frozen=True)
class Cell:
    n: int
    p: int
    t: int
    effect: float
    family: OutcomeFamily
    strategy: ReductionStrategy

    def sort_key(self):
        return (self.n, self.p, self.t, self.effect, self.family.value, self.strategy.value)


@dataclass
class PowerRow:
    cell: Cell
    alpha: float
    rejections: int
    n_sims_completed: int
    n_failures: int

    @property
    def rejection_rate(self):
        if self.n_sims_completed == 0:
            return math.nan
        return self.rejections / self.n_sims_completed

    @property
    def unreliable(self):
        total = self.n_sims_completed + self.n_failures
        return total > 0 and self.n_failures / total > UNRELIABLE_FAILURE_SHARE


def run_replicate(cell: Cell, seed: int, B: int, n_components: int, null_scenario: bool):
    """One simulate -> analyse run; returns the p-value or ``None`` on failure."""
    scenario = SimScenario(
        n=cell.n,
        p=cell.p,
        t=cell.t,
        mediator_outcome_effect=cell.effect,
        family=cell.family,
        null_scenario=null_scenario,
        seed=seed,
    )
    try:
        data = generate(scenario)
        result, _ = analyze(
            data.counts, data.exposure, data.outcome, cell.family,
            strategy=cell.strategy, n_components=n_components, B=B, seed=seed,
        )
    except IowmedError as exc:
        logger.debug("replicate seed=%d failed: %s", seed, exc)
        return None
    return result.p_value


def _run_task(task):
    cell, seed, B, n_components, null_scenario = task
    return run_replicate(cell, seed, B, n_components, null_scenario)


def run_power_sweep(cfg: SweepConfig, workers=1):
    """Rejection rates for every (cell, alpha) pair, in grid order."""
    cells = cfg.cells()
    tasks = [
        (cell, derive_seed(cfg.master_seed, ci, r), cfg.B, cfg.n_components, cfg.null_scenario)
        for ci, cell in enumerate(cells)
        for r in range(cfg.n_sims)
    ]
    logger.info("running %d replicates over %d cells with %d worker(s)", len(tasks), len(cells), workers)
    if workers <= 1:
        pvalues = []
        for i, task in enumerate(tasks):
            pvalues.append(_run_task(task))
            if (i + 1) % cfg.n_sims == 0:
                logger.info("cell %d/%d done", (i + 1) // cfg.n_sims, len(cells))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pvalues = list(pool.map(_run_task, tasks, chunksize=max(1, cfg.n_sims // (4 * workers))))

    rows = []
    for ci, cell in enumerate(cells):
        ps = pvalues[ci * cfg.n_sims : (ci + 1) * cfg.n_sims]
        done = [p for p in ps if p is not None]
        failures = len(ps) - len(done)
        for alpha in cfg.alpha_grid:
            row = PowerRow(cell, float(alpha), sum(p <= alpha for p in done), len(done), failures)
            rows.append(row)
        if failures == len(ps):
            logger.warning("cell %s: every replicate failed", cell)
        elif rows[-1].unreliable:
            logger.warning("cell %s unreliable: %d of %d replicates failed", cell, failures, len(ps))
    return rows


def run_type1_sweep(cfg: SweepConfig, workers=1):
    return run_power_sweep(replace(cfg, null_scenario=True), workers)


def _fmt(x):
    return repr(float(x))


def format_results(rows):
    """Long-format CSV text, sorted by the cell descriptors then alpha."""
    if not rows:
        raise InvalidParameterError("no rows to emit")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in sorted(rows, key=lambda r: (r.cell.sort_key(), r.alpha)):
        c = row.cell
        writer.writerow(
            [c.n, c.p, c.t, _fmt(c.effect), c.family.value, c.strategy.value, _fmt(row.alpha),
             _fmt(row.rejection_rate), row.n_sims_completed, row.n_failures]
        )
    return buf.getvalue()


def emit_results(rows, destination):
    """Write :func:`format_results` output to a path (``-`` for stdout) or a text stream."""
    text = format_results(rows)
    if hasattr(destination, "write"):
        destination.write(text)
    elif str(destination) == "-":
        sys.stdout.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")
    return text


def parse_results(text):
    """Inverse of :func:`format_results`; returns a list of :class:`PowerRow`."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != HEADER:
        raise InvalidParameterError(f"unexpected header {header}")
    rows = []
    for rec in reader:
        n, p, t, effect, family, strategy, alpha, rate, done, failures = rec
        done, rate = int(done), float(rate)
        rejections = 0 if done == 0 else round(rate * done)
        cell = Cell(int(n), int(p), int(t), float(effect), OutcomeFamily(family), ReductionStrategy(strategy))
        rows.append(PowerRow(cell, float(alpha), rejections, done, int(failures)))
    return rows
