"""Command-line entry point.

    isocoll solve run.cfg [--out DIR] [--dump-every N] [--threads N]
    isocoll converge run.cfg
    isocoll dry-run run.cfg
    isocoll case-list

Exit status: 0 on success, 2 for configuration errors, 3 when the
simulation blows up (non-finite or inadmissible state).
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .cases import CASE_NAMES, builtin_case
from .config import ConfigError, RunConfig, parse_config, resolved_config
from .integrator import BlowUpError, final_viscosity, run
from .io import DEFAULT_RESOLUTION, dump_fields, dump_viscosity
from .laws import InadmissibleStateError
from .verification.convergence import convergence_study

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP = 0, 2, 3

log = logging.getLogger("isocoll")


def _load(path: str, args) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    cfg = parse_config(text)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "dump_every", None) is not None:
        if args.dump_every < 0:
            raise ConfigError("--dump-every must be non-negative")
        cfg = replace(cfg, dump_every=args.dump_every)
    return cfg


def _thread_limit(n):
    if not n:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        log.warning("threadpoolctl is not installed; --threads ignored")
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolution(cfg: RunConfig, dim: int):
    return cfg.resolution or DEFAULT_RESOLUTION.get(dim, 64)


def _cfl_warning(cfg: RunConfig) -> None:
    case = cfg.case_definition()
    n = max(cfg.n_elements)
    h = min((b - a) for a, b in case.domain) / n
    dt = cfg.dt or case.dt
    if dt > h:
        log.warning("dt=%g exceeds the element size %g; expect an unstable run", dt, h)


def cmd_solve(cfg: RunConfig) -> int:
    case = cfg.case_definition()
    out = _out_dir(cfg)
    resolution = _resolution(cfg, case.dim)
    _cfl_warning(cfg)

    def snapshot(system, state):
        if cfg.dump_every and state.step % cfg.dump_every == 0:
            dump_fields(system, state, state.viscosity, resolution,
                        out / f"solution_{state.step:08d}.csv")

    with open(out / "diagnostics.txt", "w", encoding="utf-8") as diag, \
            np.errstate(over="ignore", invalid="ignore"):
        try:
            result = run(case, cfg.mesh(), cfg.degree, cfg.run_options(), dt=cfg.dt,
                         t_final=cfg.t_final, every=cfg.dump_every or 0, stream=diag,
                         callback=snapshot if cfg.dump_every else None)
        except (BlowUpError, InadmissibleStateError) as exc:
            diag.write(f"# blow-up: {exc}\n")
            print(f"error: simulation blew up: {exc}", file=sys.stderr)
            return EXIT_BLOWUP
    visc = result.viscosity
    if result.state.step > 0 and (cfg.nonlinear or cfg.linear):
        visc = final_viscosity(result)
    dump_fields(result.system, result.state, visc, resolution, out / "solution.csv")
    dump_viscosity(result.system, visc, out / "viscosity.csv")
    print(f"{case.name}: t={result.state.t:.17g} steps={result.state.step} "
          f"wall={result.wall_time:.1f}s -> {out}")
    return EXIT_OK


def cmd_converge(cfg: RunConfig) -> int:
    case = cfg.case_definition()
    if cfg.meshes is None:
        raise ConfigError("converge needs 'meshes' (two or more element counts)")
    if case.exact is None:
        raise ConfigError(f"{case.name} has no exact solution for a convergence study")
    out = _out_dir(cfg)
    table = convergence_study(case, cfg.degrees or (cfg.degree,), cfg.meshes,
                              cfg.run_options(), dt=cfg.dt, t_final=cfg.t_final)
    table.write(out / "convergence.csv")
    sys.stdout.write(table.to_csv())
    if table.failures:
        for k, n, why in table.failures:
            print(f"error: k={k} n={n} failed: {why}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_case_list() -> int:
    for name in CASE_NAMES:
        case = builtin_case(name)
        print(f"{name:24s} {case.dim}D  {case.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isocoll", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("solve", "run one case to its final time"),
                            ("converge", "mesh-refinement study"),
                            ("dry-run", "validate and echo the resolved configuration")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="BLAS/LAPACK thread cap")
        if name == "solve":
            p.add_argument("--dump-every", type=int, default=None,
                           help="write a field dump every N steps")
    sub.add_parser("case-list", help="list built-in cases")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "case-list":
        return cmd_case_list()
    try:
        cfg = _load(args.config, args)
        if args.command == "dry-run":
            sys.stdout.write(resolved_config(cfg))
            return EXIT_OK
        with _thread_limit(args.threads):
            if args.command == "solve":
                return cmd_solve(cfg)
            return cmd_converge(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
