"""Command-line front end.

Subcommands
-----------
gen          draw a problem instance and write it as JSON
solve        solve one instance (from file or generated on the spot)
phase        success-rate portrait over a grid of (m, k+n)
noise-sweep  recovery error versus noise level with bound auditing

Exit status is 0 on completion and 2 on any configuration problem
(malformed config file, invalid dims, unwritable output directory).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .admm import AdmmConfig
from .bench import ConfigError, ExperimentConfig
from .measure import (SubspaceMode, gen_instance, load_instance, save_instance)

_MODES = [m.value for m in SubspaceMode]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None,
                   help="JSON experiment config file")
    p.add_argument("--preset", choices=["desk", "full"], default=None,
                   help="built-in experiment grid")
    p.add_argument("--seed", type=int, default=None, help="base seed override")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (results are identical for any count)")
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                   default=None,
                   help="suppress timing fields in CSV outputs for "
                        "byte-identical reruns")


def _experiment_config(args, kind: str) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.from_file(args.config)
    elif kind == "noise":
        cfg = bench.preset_noise_config(args.preset or "desk")
    else:
        cfg = bench.preset_config(args.preset or "desk")
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    if args.deterministic is not None:
        cfg = replace(cfg, deterministic=args.deterministic)
    if cfg.out_dir is None:
        cfg = replace(cfg, out_dir="out")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blindphase",
        description="Recover two subspace-constrained signals from phaseless "
                    "Fourier magnitudes of their circular convolution.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--mode", choices=_MODES, default=SubspaceMode.GAUSSIAN_ROWS.value)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=str, required=True, help="instance JSON path")
    g.add_argument("--no-materialize", action="store_true",
                   help="store only generation parameters, not arrays")

    s = sub.add_parser("solve", help="solve a single instance")
    s.add_argument("--instance", type=str, default=None,
                   help="instance JSON (else generate from --m/--k/--n)")
    s.add_argument("--m", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--mode", choices=_MODES, default=SubspaceMode.GAUSSIAN_ROWS.value)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise", type=float, default=0.0,
                   help="noise level (sup-norm of xi)")
    s.add_argument("--noise-shape", choices=["uniform", "constant"],
                   default="uniform")
    s.add_argument("--out", type=str, default="out")
    s.add_argument("--rho", type=float, default=None)
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                   default=True)

    p = sub.add_parser("phase", help="phase portrait experiment")
    _add_common(p)

    n = sub.add_parser("noise-sweep", help="noise stability experiment")
    _add_common(n)
    return ap


def _cmd_gen(args) -> int:
    inst = gen_instance(args.m, args.k, args.n, args.mode, args.seed)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out, materialize=not args.no_materialize)
    print(f"wrote {out} (m={inst.m}, k={inst.k}, n={inst.n}, "
          f"mode={inst.mode.value}, seed={inst.seed})")
    return 0


def _cmd_solve(args) -> int:
    if args.instance is not None:
        inst = load_instance(args.instance)
    else:
        if args.m is None or args.k is None or args.n is None:
            raise ConfigError("solve needs --instance or all of --m/--k/--n")
        inst = gen_instance(args.m, args.k, args.n, args.mode, args.seed)
    solver = AdmmConfig(deterministic=args.deterministic)
    if args.rho is not None:
        solver = replace(solver, rho=args.rho)
    if args.max_iter is not None:
        solver = replace(solver, max_iter=args.max_iter)
    report = bench.run_single(inst, solver, eps=args.noise,
                              noise_shape=args.noise_shape,
                              noise_seed=bench.trial_seed(args.seed, inst.m,
                                                          inst.k, inst.n, 0,
                                                          "noise"),
                              out_dir=args.out)
    print(bench.summarize_report(inst, report), end="")
    return 0


def _cmd_phase(args) -> int:
    cfg = _experiment_config(args, kind="phase")
    cells = bench.run_phase(cfg)
    print(f"phase portrait: {len(cells)} cells x {cfg.trials} trials "
          f"-> {cfg.out_dir}/phase.csv")
    return 0


def _cmd_noise(args) -> int:
    cfg = _experiment_config(args, kind="noise")
    rows = bench.run_noise_sweep(cfg)
    total_viol = sum(r["bound_violations"] for r in rows)
    print(f"noise sweep: {len(rows)} levels x {cfg.trials} trials, "
          f"{total_viol} bound violations -> {cfg.out_dir}/noise.csv")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"gen": _cmd_gen, "solve": _cmd_solve,
                "phase": _cmd_phase, "noise-sweep": _cmd_noise}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
