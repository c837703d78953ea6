"""Experiment harnesses: phase portraits, noise sweeps, single solves.

All experiment randomness flows from one base seed: each trial's seed is
a SHA-256 hash of (base_seed, m, k, n, trial_index), so any cell can be
reproduced in isolation and results do not depend on execution order or
worker count.  Outputs are plain CSV plus a JSON manifest from which
every CSV number can be recomputed; an optional self-contained SVG
renders the phase portrait without pulling in a plotting stack.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .admm import AdmmConfig, SolveReport, error_metrics, solve
from .measure import (MeasurementSet, ProblemInstance, SubspaceMode, add_noise,
                      forward_measure, gen_instance)

SUCCESS_THRESHOLD = 1e-2
STABILITY_CONSTANT = 44.0**2
BOUND_MARGIN = 1e-3


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    m_values: list[int] = field(default_factory=lambda: [64])
    kn_pairs: list[tuple[int, int]] = field(default_factory=lambda: [(2, 2)])
    trials: int = 20
    noise_levels: list[float] = field(default_factory=lambda: [0.0])
    noise_shape: str = "uniform"        # "uniform": eps*U[-1,1]; "constant": eps
    subspace_mode: SubspaceMode = SubspaceMode.GAUSSIAN_ROWS
    base_seed: int = 0
    solver: AdmmConfig = field(default_factory=AdmmConfig)
    out_dir: str | None = None
    threads: int = 1
    deterministic: bool = True
    emit_svg: bool = True

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.m_values or not self.kn_pairs:
            raise ConfigError("grid must be nonempty")
        for m in self.m_values:
            if m < 1:
                raise ConfigError(f"m must be positive, got {m}")
            for k, n in self.kn_pairs:
                if not (1 <= k <= m and 1 <= n <= m):
                    raise ConfigError(
                        f"cell m={m}, k={k}, n={n} violates 1 <= k, n <= m")
        if self.noise_shape not in ("uniform", "constant"):
            raise ConfigError(f"unknown noise shape {self.noise_shape!r}")
        for eps in self.noise_levels:
            if eps < 0:
                raise ConfigError("noise levels must be nonnegative")
            if eps > 1 and self.noise_shape == "uniform":
                raise ConfigError("uniform noise level > 1 can drive y below 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            self.solver.validate()
        except ValueError as exc:
            raise ConfigError(f"solver config: {exc}") from exc

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["subspace_mode"] = self.subspace_mode.value
        doc["kn_pairs"] = [list(p) for p in self.kn_pairs]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        if "subspace_mode" in kwargs:
            try:
                kwargs["subspace_mode"] = SubspaceMode(kwargs["subspace_mode"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if "kn_pairs" in kwargs:
            kwargs["kn_pairs"] = [tuple(int(x) for x in p)
                                  for p in kwargs["kn_pairs"]]
        if "solver" in kwargs and isinstance(kwargs["solver"], dict):
            solver_known = {f.name for f in AdmmConfig.__dataclass_fields__.values()}
            bad = set(kwargs["solver"]) - solver_known
            if bad:
                raise ConfigError(f"unknown solver keys: {sorted(bad)}")
            kwargs["solver"] = AdmmConfig(**kwargs["solver"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc.msg} "
                              f"(line {exc.lineno})") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config root must be an object")
        return cls.from_dict(doc)


def preset_config(name: str) -> ExperimentConfig:
    """Built-in grids: 'desk' finishes in hours, 'full' mirrors the large study."""
    if name == "desk":
        return ExperimentConfig(
            m_values=[32, 64, 128, 256],
            kn_pairs=[(s // 2, s // 2) for s in range(4, 65, 4)],
            trials=20)
    if name == "full":
        return ExperimentConfig(
            m_values=[32, 64, 128, 256, 512],
            kn_pairs=[(s // 2, s // 2) for s in range(4, 65, 4)],
            trials=100)
    raise ConfigError(f"unknown preset {name!r}")


def preset_noise_config(name: str) -> ExperimentConfig:
    """Noise-sweep grids at fixed dims well inside the success region."""
    if name == "desk":
        return ExperimentConfig(m_values=[128], kn_pairs=[(4, 4)], trials=10,
                                noise_levels=[0.0, 0.01, 0.05, 0.1])
    if name == "full":
        return ExperimentConfig(m_values=[128], kn_pairs=[(4, 4)], trials=50,
                                noise_levels=[0.0, 0.01, 0.02, 0.05, 0.1, 0.2])
    raise ConfigError(f"unknown preset {name!r}")


@dataclass
class CellResult:
    m: int
    k: int
    n: int
    trials: int
    success_count: int
    mean_err: float
    median_err: float
    mean_lifted_err: float
    mean_iters: float
    wall_ms: float

    def __post_init__(self):
        if not (0 <= self.success_count <= self.trials):
            raise ValueError("success_count out of range")


def trial_seed(base_seed: int, m: int, k: int, n: int, trial: int,
               tag: str = "") -> int:
    """Order-independent 63-bit seed for one trial (stable across runs)."""
    msg = f"{base_seed}:{m}:{k}:{n}:{trial}:{tag}".encode()
    return int.from_bytes(hashlib.sha256(msg).digest()[:8], "big") >> 1


def make_noise(m: int, eps: float, shape: str, seed: int) -> np.ndarray:
    if eps == 0.0:
        return np.zeros(m)
    if shape == "constant":
        return np.full(m, eps)
    rng = np.random.default_rng(seed)
    return eps * rng.uniform(-1.0, 1.0, size=m)


def _run_trial(task: dict) -> dict:
    """One seeded instance through the solver; returns a plain-dict outcome."""
    t0 = time.perf_counter()
    inst = gen_instance(task["m"], task["k"], task["n"],
                        SubspaceMode(task["mode"]), task["seed"])
    meas = forward_measure(inst)
    xi = make_noise(task["m"], task["eps"], task["noise_shape"],
                    task["noise_seed"])
    if task["eps"] > 0.0:
        meas = add_noise(meas, xi)
    solver = AdmmConfig(**task["solver"])
    report = solve(meas, inst.b_stack(), inst.c_stack(), solver, instance=inst)
    err = report.errors
    return {
        "m": task["m"], "k": task["k"], "n": task["n"], "trial": task["trial"],
        "eps": task["eps"], "seed": task["seed"],
        "noise_seed": task["noise_seed"],
        "xi_inf": float(np.max(np.abs(xi))) if task["eps"] > 0 else 0.0,
        "converged": report.converged,
        "iterations": report.iterations,
        "objective": report.objective,
        "err_h": err.err_h, "err_m": err.err_m,
        "max_err": max(err.err_h, err.err_m),
        "lifted_error": err.lifted_error,
        "success": bool(err.success),
        "trace_hat": float(report.H_hat.trace() + report.M_hat.trace()),
        "trace_ref": float(2.0 * np.linalg.norm(inst.h_true)
                           * np.linalg.norm(inst.m_true)),
        "wall_ms": (time.perf_counter() - t0) * 1e3,
    }


def _execute(tasks: list[dict], threads: int) -> list[dict]:
    if threads <= 1 or len(tasks) <= 1:
        return [_run_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_trial, tasks, chunksize=1))


def _make_tasks(cfg: ExperimentConfig, m: int, k: int, n: int,
                eps: float) -> list[dict]:
    tasks = []
    for trial in range(cfg.trials):
        seed = trial_seed(cfg.base_seed, m, k, n, trial)
        solver = replace(cfg.solver,
                         init_seed=trial_seed(cfg.base_seed, m, k, n, trial, "init"))
        tasks.append({
            "m": m, "k": k, "n": n, "trial": trial, "eps": eps,
            "mode": cfg.subspace_mode.value, "seed": seed,
            "noise_seed": trial_seed(cfg.base_seed, m, k, n, trial, "noise"),
            "noise_shape": cfg.noise_shape,
            "solver": asdict(solver),
        })
    return tasks


def _aggregate_cell(m: int, k: int, n: int, outcomes: list[dict]) -> CellResult:
    errs = np.asarray([o["max_err"] for o in outcomes])
    return CellResult(
        m=m, k=k, n=n, trials=len(outcomes),
        success_count=sum(o["success"] for o in outcomes),
        mean_err=float(np.mean(errs)),
        median_err=float(np.median(errs)),
        mean_lifted_err=float(np.mean([o["lifted_error"] for o in outcomes])),
        mean_iters=float(np.mean([o["iterations"] for o in outcomes])),
        wall_ms=float(sum(o["wall_ms"] for o in outcomes)),
    )


def _csv_wall(cfg: ExperimentConfig, wall_ms: float) -> float:
    # Timing is excluded from deterministic outputs so reruns are
    # byte-identical; the measured value always lands in the manifest.
    return 0.0 if cfg.deterministic else round(wall_ms, 3)


def run_phase(cfg: ExperimentConfig) -> list[CellResult]:
    """Success-rate grid over (m, k+n); writes CSVs/manifest when out_dir set.

    Each cell runs ``cfg.trials`` independent seeded instances at the first
    configured noise level (0 by default).  Per-trial failures to converge
    are recorded in the manifest, never raised.
    """
    cfg.validate()
    eps = cfg.noise_levels[0] if cfg.noise_levels else 0.0
    cells: list[CellResult] = []
    manifest_cells = []
    for m in cfg.m_values:
        for k, n in cfg.kn_pairs:
            outcomes = _execute(_make_tasks(cfg, m, k, n, eps), cfg.threads)
            cells.append(_aggregate_cell(m, k, n, outcomes))
            manifest_cells.append({"m": m, "k": k, "n": n, "trials": outcomes})
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_phase_csv(out / "phase.csv", cfg, cells)
        _write_grid_csv(out / "phase_grid.csv", cfg, cells)
        _write_manifest(out / "manifest.json", cfg, kind="phase",
                        cells=manifest_cells)
        if cfg.emit_svg:
            (out / "phase.svg").write_text(render_phase_svg(cfg, cells))
    return cells


def run_noise_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Recovery error vs. noise level at fixed dims, with bound auditing.

    Uses the first m and first (k, n) of the grid.  Noise levels must be
    sorted ascending and start at 0.  Per trial, checks the stability
    inequality lifted_error <= 44^2 * ||xi||_inf (+ small margin) with the
    realized noise magnitude; violations are counted, not raised.
    """
    cfg.validate()
    levels = list(cfg.noise_levels)
    if levels != sorted(levels) or (levels and levels[0] != 0.0):
        raise ConfigError("noise levels must be ascending and start at 0")
    m, (k, n) = cfg.m_values[0], cfg.kn_pairs[0]
    rows = []
    manifest_levels = []
    for eps in levels:
        outcomes = _execute(_make_tasks(cfg, m, k, n, eps), cfg.threads)
        lifted = np.asarray([o["lifted_error"] for o in outcomes])
        bounds = np.asarray([STABILITY_CONSTANT * o["xi_inf"] + BOUND_MARGIN
                             for o in outcomes])
        violations = int(np.sum(lifted > bounds))
        rows.append({"eps": eps, "trials": len(outcomes),
                     "mean_lifted_err": float(np.mean(lifted)),
                     "max_lifted_err": float(np.max(lifted)),
                     "bound_violations": violations})
        manifest_levels.append({"eps": eps, "trials": outcomes})
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_noise_csv(out / "noise.csv", rows)
        _write_manifest(out / "manifest.json", cfg, kind="noise",
                        levels=manifest_levels)
    return rows


def run_single(inst: ProblemInstance, solver: AdmmConfig | None = None,
               eps: float = 0.0, noise_shape: str = "uniform",
               noise_seed: int = 0,
               out_dir: str | Path | None = None) -> SolveReport:
    """Solve one instance; optionally write report JSON and a text summary."""
    meas = forward_measure(inst)
    if eps > 0.0:
        meas = add_noise(meas, make_noise(inst.m, eps, noise_shape, noise_seed))
    report = solve(meas, inst.b_stack(), inst.c_stack(),
                   solver or AdmmConfig(), instance=inst)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.save(out / "report.json")
        (out / "summary.txt").write_text(summarize_report(inst, report))
    return report


def summarize_report(inst: ProblemInstance, report: SolveReport) -> str:
    err = report.errors
    lines = [
        f"instance: m={inst.m} k={inst.k} n={inst.n} "
        f"mode={inst.mode.value} seed={inst.seed}",
        f"converged: {report.converged} after {report.iterations} iterations "
        f"(rho_final={report.rho_final:g})",
        f"objective Tr(H)+Tr(M): {report.objective:.12g}",
        f"eigen ratios (lam2/lam1): H={report.eigen_ratio_h:.3e} "
        f"M={report.eigen_ratio_m:.3e}",
    ]
    if err is not None:
        lines += [
            f"signal errors: h={err.err_h:.3e} m={err.err_m:.3e} "
            f"(success={err.success})",
            f"lifted error (normalized squared): {err.lifted_error:.3e}",
        ]
    return "\n".join(lines) + "\n"


# -- output writers ---------------------------------------------------------

def _write_phase_csv(path: Path, cfg: ExperimentConfig,
                     cells: list[CellResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "k", "n", "trials", "successes", "mean_err",
                    "median_err", "mean_iters", "wall_ms"])
        for c in cells:
            w.writerow([c.m, c.k, c.n, c.trials, c.success_count,
                        repr(c.mean_err), repr(c.median_err),
                        repr(c.mean_iters), repr(_csv_wall(cfg, c.wall_ms))])


def _write_grid_csv(path: Path, cfg: ExperimentConfig,
                    cells: list[CellResult]) -> None:
    """Success-rate matrix: one row per m, one column per k+n value."""
    kn_values = [k + n for k, n in cfg.kn_pairs]
    rate = {(c.m, c.k + c.n): c.success_count / c.trials for c in cells}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m"] + [str(s) for s in kn_values])
        for m in cfg.m_values:
            w.writerow([m] + [repr(rate.get((m, s), float("nan")))
                              for s in kn_values])


def _write_noise_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "trials", "mean_lifted_err", "max_lifted_err",
                    "bound_violations"])
        for r in rows:
            w.writerow([repr(float(r["eps"])), r["trials"],
                        repr(r["mean_lifted_err"]), repr(r["max_lifted_err"]),
                        r["bound_violations"]])


def _write_manifest(path: Path, cfg: ExperimentConfig, kind: str,
                    **payload) -> None:
    doc = {"format": "blindphase-manifest", "version": 1, "kind": kind,
           "success_threshold": SUCCESS_THRESHOLD,
           "stability_constant": STABILITY_CONSTANT,
           "bound_margin": BOUND_MARGIN,
           "config": cfg.to_dict()}
    doc.update(payload)
    path.write_text(json.dumps(doc, indent=1))


def render_phase_svg(cfg: ExperimentConfig, cells: list[CellResult],
                     cell_px: int = 28) -> str:
    """Grayscale success-rate heatmap (black = every trial succeeded)."""
    kn_values = [k + n for k, n in cfg.kn_pairs]
    ms = list(cfg.m_values)
    rate = {(c.m, c.k + c.n): c.success_count / c.trials for c in cells}
    left, top = 64, 28
    width = left + cell_px * len(kn_values) + 16
    height = top + cell_px * len(ms) + 44
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="monospace" font-size="11">',
        f'<text x="{left}" y="16">success rate over (m, k+n); '
        f'black = 100%</text>',
    ]
    for i, m in enumerate(ms):
        y = top + i * cell_px
        parts.append(f'<text x="8" y="{y + cell_px // 2 + 4}">m={m}</text>')
        for j, s in enumerate(kn_values):
            r = rate.get((m, s))
            if r is None:
                continue
            level = int(round(255 * (1.0 - r)))
            x = left + j * cell_px
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" '
                f'fill="rgb({level},{level},{level})" stroke="#888"/>')
    for j, s in enumerate(kn_values):
        x = left + j * cell_px + cell_px // 2 - 6
        parts.append(
            f'<text x="{x}" y="{top + len(ms) * cell_px + 16}">{s}</text>')
    parts.append(f'<text x="{left}" y="{top + len(ms) * cell_px + 34}">'
                 f'k+n</text>')
    parts.append("</svg>")
    return "\n".join(parts)
