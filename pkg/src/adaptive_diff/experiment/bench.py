"""
Closed-loop benchmark: every (method, seed) pair is an independent run whose
plant-output RMSE is scored against the noise-free BD reference loop.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..aise import Aise
from ..baselines import BackwardDifference, FilteredDifference, MovingAverage, butterworth_design
from ..control_sim import (
    ClosedLoopTrace,
    PidController,
    generate_noise,
    rmse,
    simulate_closed_loop,
    zoh_discretize,
)
from .config import ExperimentConfig
from .io import DIFF_HEADER, REPORT_HEADER, TRACE_HEADER, SignalTable, write_csv

THREADS_ENV = "ADAPTIVE_DIFF_THREADS"
SUMMARY_HEADER = ("method", "mean", "min", "max", "runs", "failed")
FAILURE_HEADER = ("method", "seed", "error")


def make_derivative_source(method: str, cfg: ExperimentConfig, Ts: float | None = None):
    """Fresh streaming differentiator exposing ``step(value)``."""
    Ts = cfg.Ts if Ts is None else Ts
    if method == "bd":
        return BackwardDifference(Ts)
    if method == "bdMa":
        return FilteredDifference(Ts, MovingAverage(cfg["ma.window"]))
    if method == "bdBw":
        return FilteredDifference(Ts, butterworth_design(cfg["bw.order"], cfg["bw.cutoff"] * math.pi))
    if method in ("aise", "aiseVrfEr"):
        return Aise(cfg.aise(method, Ts))
    raise ValueError(f"unknown method {method!r}")


@dataclass
class AiseTrace:
    """Per-step AISE internals: forgetting factor, max eigenvalue of P, theta."""

    lam: list = field(default_factory=list)
    eig_max_P: list = field(default_factory=list)
    theta: list = field(default_factory=list)

    def __call__(self, diag) -> None:
        self.lam.append(diag.lam)
        self.eig_max_P.append(diag.eig_max_P)
        self.theta.append(diag.theta)

    def rows(self, Ts: float):
        for k, (lam, eig, th) in enumerate(zip(self.lam, self.eig_max_P, self.theta)):
            yield (k, k * Ts, lam, eig, *th)


def simulate_pid(
    cfg: ExperimentConfig, method: str, seed: int = 0, noisy: bool = True, recorder=None
) -> ClosedLoopTrace:
    """One closed-loop run with the configured plant, gains and command."""
    plant = zoh_discretize(cfg.plant())
    pid = PidController(cfg.pid(method))
    noise = generate_noise(cfg.noise(seed), cfg.N) if noisy else None
    trace = simulate_closed_loop(
        plant, pid, make_derivative_source(method, cfg), noise, cfg["sim.r"], cfg.N, cfg.Ts,
        on_step=recorder,
    )
    trace.meta.update(method=method, seed=seed, noisy=noisy)
    return trace


def reference_output(cfg: ExperimentConfig) -> np.ndarray:
    return simulate_pid(cfg, "bd", noisy=False).y


@dataclass(frozen=True)
class RunResult:
    method: str
    seed: int
    rmse: float
    error: str | None = None
    diagnostics: AiseTrace | None = None


def _run_one(cfg: ExperimentConfig, method: str, seed: int, y_ref: np.ndarray, keep_diag: bool) -> RunResult:
    try:
        rec = AiseTrace() if keep_diag and method.startswith("aise") else None
        trace = simulate_pid(cfg, method, seed, recorder=rec)
        return RunResult(method, seed, rmse(trace.y, y_ref), diagnostics=rec)
    except Exception as exc:  # one failed run must not stop the others
        return RunResult(method, seed, math.nan, error=f"{type(exc).__name__}: {exc}")


def _run_star(args) -> RunResult:
    return _run_one(*args)


def default_workers() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


@dataclass
class BenchReport:
    runs: list[RunResult]
    Ts: float

    def rows(self):
        for r in self.runs:
            yield (r.method, r.seed, r.rmse)

    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.runs))

    def summary(self) -> dict[str, dict]:
        out = {}
        for m in self.methods():
            ok = [r.rmse for r in self.runs if r.method == m and r.error is None]
            failed = sum(1 for r in self.runs if r.method == m and r.error is not None)
            out[m] = {
                "mean": statistics.fmean(ok) if ok else math.nan,
                "min": min(ok) if ok else math.nan,
                "max": max(ok) if ok else math.nan,
                "runs": len(ok),
                "failed": failed,
            }
        return out

    def failures(self) -> list[RunResult]:
        return [r for r in self.runs if r.error is not None]

    def write(self, outdir) -> list[Path]:
        """Write report, summary, failures and AISE diagnostics CSVs."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = [outdir / "report.csv", outdir / "summary.csv"]
        write_csv(written[0], REPORT_HEADER, self.rows())
        write_csv(
            written[1],
            SUMMARY_HEADER,
            ((m, s["mean"], s["min"], s["max"], s["runs"], s["failed"]) for m, s in self.summary().items()),
        )
        if self.failures():
            written.append(outdir / "failures.csv")
            write_csv(written[-1], FAILURE_HEADER, ((r.method, r.seed, r.error) for r in self.failures()))
        for r in self.runs:
            if r.diagnostics is None:
                continue
            l_theta = len(r.diagnostics.theta[0]) if r.diagnostics.theta else 0
            header = ("k", "t", "lambda", "eigmaxP", *(f"theta{i}" for i in range(l_theta)))
            path = outdir / f"diag_{r.method}_seed{r.seed}.csv"
            write_csv(path, header, r.diagnostics.rows(self.Ts))
            written.append(path)
        return written


def run_benchmark(
    cfg: ExperimentConfig,
    methods=None,
    seeds=None,
    workers: int | None = None,
    diag_seeds=None,
) -> BenchReport:
    """Simulate every method x seed and score against the noise-free BD loop.

    Parameters
    ----------
    methods : sequence of str, optional
        Defaults to ``run.methods`` from the config.
    seeds : int or sequence of int, optional
        An int ``n`` means seeds ``0..n-1``; defaults to ``run.seeds``.
    workers : int, optional
        Process count; 1 runs in-process.  Results never depend on it.
    diag_seeds : sequence of int, optional
        Seeds whose AISE internals are kept; defaults to the first seed.
    """
    methods = tuple(cfg.methods if methods is None else methods)
    seeds = cfg.seeds if seeds is None else seeds
    seeds = tuple(range(seeds)) if isinstance(seeds, int) else tuple(seeds)
    if not methods or not seeds:
        raise ValueError("need at least one method and one seed")
    diag_seeds = set(seeds[:1] if diag_seeds is None else diag_seeds)
    y_ref = reference_output(cfg)
    jobs = [(cfg, m, s, y_ref, s in diag_seeds) for m in methods for s in seeds]
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or len(jobs) == 1:
        results = [_run_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_star, jobs))
    order = {m: i for i, m in enumerate(methods)}
    results.sort(key=lambda r: (order[r.method], r.seed))
    return BenchReport(results, cfg.Ts)


def write_trace(path, trace: ClosedLoopTrace) -> None:
    write_csv(path, TRACE_HEADER, trace.rows())


def differentiate_table(cfg: ExperimentConfig, table: SignalTable, method: str) -> list[tuple]:
    """Rows ``(t, y, dhat, lambda, eigmaxP)``; baselines report NaN internals."""
    source = make_derivative_source(method, cfg, table.Ts)
    rows = []
    for t, y in zip(table.t, table.y):
        out = source.step(float(y))
        if hasattr(out, "d_hat"):
            rows.append((t, y, out.d_hat, out.lam, out.eig_max_P))
        else:
            rows.append((t, y, out, math.nan, math.nan))
    return rows


def write_diff(path, rows) -> None:
    write_csv(path, DIFF_HEADER, rows)
