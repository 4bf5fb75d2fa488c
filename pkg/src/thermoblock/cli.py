"""Command line entry point: ``thermoblock run|sweep|conddiag|summarize|cases``."""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics
from .conddiag import condition_diagnostic, format_table
from .config import CaseError, load_case, parse_grid, shipped_cases
from .discretization import assemble_jacobian
from .linalg import mm_write
from .precond import DECOUPLINGS, SCHUR_KINDS, PreconditionerConfig
from .solver import run_simulation

log = logging.getLogger("thermoblock")


def _configure(case, args, kind=None, grid=None):
    if grid is not None:
        case = case.with_grid(parse_grid(grid, len(case.dims)))
    pc = case.precond
    pc = PreconditionerConfig(
        kind=kind or getattr(args, "precond", None) or pc.kind,
        schur=getattr(args, "schur", None) or pc.schur,
        decoupling=getattr(args, "decoupling", None) or pc.decoupling,
        amg=pc.amg,
    )
    newton = case.newton
    if getattr(args, "gmres_rtol", None) is not None:
        newton = replace(newton, gmres_rtol=args.gmres_rtol)
    return case.with_options(precond=pc, newton=newton)


def _run_one(case, out=None, append=False, dump=None):
    problem, state, ctrl = case.build()
    if dump:
        d = Path(dump)
        d.mkdir(parents=True, exist_ok=True)
        dt = ctrl.fixed_steps[0] if not ctrl.adaptive else ctrl.dt
        J = assemble_jacobian(state, state, dt, problem)
        for name in ("App", "ApT", "ATp", "ATT"):
            mm_write(d / f"{case.name}_{name}.mtx", getattr(J, name), comment=f"{case.name} initial Jacobian")
    _, stats = run_simulation(problem, state, ctrl, case.precond, case.newton)
    recs = metrics.records_from_stats(stats, case.name, case.precond, case.dims)
    if out:
        metrics.emit_metrics(recs, out, append=append)
    return stats, recs


def cmd_run(args):
    case = _configure(load_case(args.case), args, grid=args.grid)
    stats, recs = _run_one(case, args.out, append=args.append, dump=args.dump_matrices)
    print(metrics.format_summary(metrics.summarize(recs)))
    if stats.aborted:
        print(f"aborted: {stats.message}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args):
    base = load_case(args.case)
    all_recs = []
    first = True
    status = 0
    for grid in args.grids:
        for kind in args.precond:
            case = _configure(base, args, kind=kind, grid=grid)
            log.info("sweep %s grid=%s precond=%s", case.name, grid, case.precond.label)
            stats, recs = _run_one(case, args.out, append=not first or args.append)
            first = False
            all_recs.extend(recs)
            status |= int(stats.aborted)
    print(metrics.format_summary(metrics.summarize(all_recs)))
    return status


def cmd_conddiag(args):
    rows = {}
    for name in args.cases:
        case = load_case(name)
        if args.grid:
            case = case.with_grid(parse_grid(args.grid, len(case.dims)))
        rows[case.name] = condition_diagnostic(case, warmup=not args.no_warmup)
    print(format_table(rows))
    return 0


def cmd_summarize(args):
    rows = []
    for path in args.files:
        rows.extend(metrics.read_metrics(path))
    print(metrics.format_summary(metrics.summarize(rows)))
    return 0


def cmd_cases(args):
    for name in shipped_cases():
        case = load_case(name)
        print(f"{name:<14}{'x'.join(map(str, case.dims)):<12}{case.description.splitlines()[0] if case.description else ''}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="thermoblock", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def solver_opts(sp, multi=False):
        if not multi:
            sp.add_argument("--precond", choices=("block", "cpr"))
        sp.add_argument("--schur", choices=SCHUR_KINDS[:3])
        sp.add_argument("--decoupling", choices=DECOUPLINGS)
        sp.add_argument("--gmres-rtol", type=float)
        sp.add_argument("--out", help="metrics CSV")
        sp.add_argument("--append", action="store_true", help="append to an existing CSV")

    r = sub.add_parser("run", help="run one case")
    r.add_argument("case", help="case file or shipped case name")
    r.add_argument("--grid", help="N or NXxNY[xNZ]")
    r.add_argument("--dump-matrices", metavar="DIR", help="write the initial Jacobian blocks as Matrix Market")
    solver_opts(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a case over grids and preconditioners")
    s.add_argument("case")
    s.add_argument("--grids", nargs="+", default=["20", "40", "80", "160"])
    s.add_argument("--precond", nargs="+", choices=("block", "cpr"), default=["block", "cpr"])
    solver_opts(s, multi=True)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("conddiag", help="dense condition numbers of the Schur approximations")
    c.add_argument("cases", nargs="+")
    c.add_argument("--grid")
    c.add_argument("--no-warmup", action="store_true", help="use the initial state instead of one solved step")
    c.set_defaults(func=cmd_conddiag)

    m = sub.add_parser("summarize", help="average linear iterations per Newton iteration from CSV files")
    m.add_argument("files", nargs="+")
    m.set_defaults(func=cmd_summarize)

    sub.add_parser("cases", help="list shipped cases").set_defaults(func=cmd_cases)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CaseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
