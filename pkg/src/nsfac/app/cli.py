"""Command-line interface.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
3 the solver state became invalid, 4 file I/O or format error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..eos import KERNELS, EosSpec, POTENTIALS, TransportSpec, check_hypotheses, get_kernel, \
    get_potential
from ..errors import FormatError, NsfacError, UsageError
from .config import load_config, parse_config
from .io import write_text

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4

DEFAULT_SWEEP_CONFIG = "nx = 32\nny = 32\nt_end = 0.05\n"


def _workers(args):
    """``--workers`` wins over ``NSFAC_WORKERS``, which wins over the config file."""
    if getattr(args, "workers", None) is not None:
        return args.workers
    env = os.environ.get("NSFAC_WORKERS")
    if env is None or env.strip() == "":
        return None
    try:
        value = int(env)
    except ValueError:
        raise UsageError(f"NSFAC_WORKERS must be an integer, got {env!r}") from None
    if value < 1:
        raise UsageError("NSFAC_WORKERS must be >= 1")
    return value


def cmd_run(args):
    from ..simulation import run

    config = load_config(args.config)
    out = args.out or config.output_dir or "nsfac_out"
    config = config.replace(output_dir=str(out))
    result = run(config, workers=_workers(args))
    last = result.series[-1]
    print(f"steps={result.steps} t={result.t:.6g} mass={last.mass:.15g} "
          f"energy={last.total_energy:.15g} entropy={last.total_entropy:.15g}")
    print(f"output: {result.output_dir}")
    return EXIT_OK


def cmd_check_eos(args):
    eos = EosSpec(a=args.a, kernel=get_kernel(args.kernel))
    report = check_hypotheses(eos, get_potential(args.potential), TransportSpec())
    text = report.to_keyvalue() if args.format == "kv" else report.to_text()
    print(f"kernel: {args.kernel}")
    print(text)
    if args.out:
        write_text(Path(args.out) / f"check_eos_{args.kernel}.txt", text + "\n")
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_mms(args):
    import numpy as np

    from ..solver import Model
    from ..verify import ERROR_FIELDS, MmsCase, convergence_study, standard_grids

    if args.levels < 3:
        raise UsageError("--levels must be >= 3")
    case = MmsCase.diffusion_only() if args.diffusion_only else MmsCase.convection()
    model = Model(workers=_workers(args) or 1)
    table = convergence_study(case, standard_grids(args.levels, args.n0), args.t_final, model)
    print(table.to_text(), end="")
    if args.out:
        write_text(Path(args.out) / f"mms_{case.name}.csv", table.to_csv())
        write_text(Path(args.out) / f"mms_{case.name}.txt", table.to_text())
    monotone = all(np.all(np.diff(table.errors[k]) < 0) for k in ERROR_FIELDS)
    return EXIT_OK if monotone else EXIT_CHECK


def cmd_sweep(args):
    from ..simulation import regularization_sweep

    config = load_config(args.config) if args.config else parse_config(DEFAULT_SWEEP_CONFIG)
    rows = regularization_sweep(config, args.param, args.values, workers=_workers(args))
    lines = ["value,epsilon,delta,dist_rho,dist_chi,distance"]
    for r in rows:
        lines.append(",".join(format(v, ".17g") for v in
                              (r.value, r.epsilon, r.delta, r.dist_rho, r.dist_chi, r.distance)))
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        write_text(Path(args.out) / f"sweep_{args.param}.csv", text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="nsfac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a simulation from a key = value config file")
    p.add_argument("--config", required=True, help="config file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--workers", type=int, help="worker threads (overrides NSFAC_WORKERS)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check-eos", help="check the constitutive hypotheses")
    p.add_argument("--kernel", default="default", choices=sorted(KERNELS))
    p.add_argument("--potential", default="double_well", choices=sorted(POTENTIALS))
    p.add_argument("--a", type=float, default=1.0, help="radiation constant")
    p.add_argument("--format", choices=("text", "kv"), default="text")
    p.add_argument("--out", help="directory for the report")
    p.set_defaults(func=cmd_check_eos)

    p = sub.add_parser("mms", help="manufactured-solution convergence study")
    p.add_argument("--levels", type=int, default=3, help="number of grids (>= 3)")
    p.add_argument("--diffusion-only", action="store_true", help="manufactured fields at rest")
    p.add_argument("--n0", type=int, default=32, help="cells per side on the coarsest grid")
    p.add_argument("--t-final", type=float, default=0.05)
    p.add_argument("--out", help="directory for the table")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_mms)

    p = sub.add_parser("sweep", help="distance of regularised runs to the base model")
    p.add_argument("--param", default="delta", choices=("delta", "epsilon"))
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--config", help="config file (default: 32x32 bubble, t_end = 0.05)")
    p.add_argument("--out", help="directory for the table")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NsfacError as exc:
        print(f"nsfac: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"nsfac: error: {FormatError(str(exc))}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
