"""Command line entry point: ``lortransfer <subcommand> [flags]``.

Every subcommand writes a table (CSV with a header row, or JSON) and a
trailing ``# config:`` line recording the full configuration. Usage and
argument errors exit with status 2, solver non-convergence with status 3.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from .errors import ArgumentError, ConvergenceError

EXIT_USAGE = 2
EXIT_CONVERGENCE = 3

# columns written with full precision rather than 3 significant digits
_EXACT = {"point", "weight", "angle", "gap", "spacing", "h", "dt"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _fmt(key, v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(key, x) for x in v)
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        if key.startswith("rate"):
            return f"{v:.2f}"
        if key in _EXACT:
            return repr(v)
        return f"{v:.3e}"
    return str(v)


def _config_items(args):
    skip = {"func", "config", "output", "columns"}
    return [(k, v) for k, v in sorted(vars(args).items()) if k not in skip]


def write_table(rows, columns, args, fh):
    cfg = ";".join(f"{k}={_fmt(k, v)}" for k, v in _config_items(args))
    if args.format == "json":
        out = {"columns": columns,
               "rows": [{c: r.get(c) for c in columns} for r in rows],
               "config": {k: v for k, v in _config_items(args)}}
        json.dump(out, fh, indent=2, sort_keys=True, default=str, allow_nan=True)
        fh.write("\n")
        return
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(c, r.get(c)) for c in columns])
    fh.write(f"# config: {cfg}\n")


# -- subcommands ---------------------------------------------------------------

def cmd_quadrature(args):
    from .quadrature import angle_view, make_rule

    rule = make_rule(args.kind, args.n)
    av = angle_view(rule)
    rows = []
    for i, x in enumerate(rule.points):
        rows.append({
            "index": i,
            "point": float(x),
            "weight": None if rule.weights is None else float(rule.weights[i]),
            "angle": float(av.angles[i]),
            "gap": float(av.gaps[i - 1]) if i > 0 else None,
            "spacing": float(av.spacings[i - 1]) if i > 0 else None,
        })
    return rows, ["index", "point", "weight", "angle", "gap", "spacing"]


def _counts(args):
    counts = [args.nx, args.ny, args.nz][:args.dim]
    return tuple(int(c) for c in counts)


def cmd_transfer(args):
    from .studies import transfer_study

    _check(args.p >= 1, "--p must be >= 1")
    _check(args.q >= 0, "--q must be >= 0")
    _check(args.refinements >= 0, "--refinements must be >= 0")
    _check(args.dim in (2, 3), "--dim must be 2 or 3")
    rows = transfer_study(args.p, args.q, args.lor_n, args.nodes, args.refinements,
                          args.dim, _counts(args), args.continuity, args.weighted,
                          tol=args.tol, box=tuple(args.box))
    cols = ["h", "dof_H", "dof_L", "err_PiH", "rate_err_PiH", "err_R_PiH", "rate_err_R_PiH",
            "err_PiL", "rate_err_PiL", "err_P_PiL", "rate_err_P_PiL", "cons_R", "cons_P",
            "cg_iters"]
    return rows, cols


def cmd_alpha(args):
    from .spectral import node_set_sweep

    _check(2 <= args.pmin <= args.pmax, "need 2 <= --pmin <= --pmax")
    _check(args.pmax <= 40, "--pmax must be <= 40")
    rows = node_set_sweep(args.nodes, range(args.pmin, args.pmax + 1), args.method)
    return rows, ["kind", "p", "alpha", "beta", "kappa"]


def cmd_precondition(args):
    from .studies import precondition_study

    _check(args.pmax >= 1, "--pmax must be >= 1")
    _check(args.refinements >= 0, "--refinements must be >= 0")
    rows = precondition_study(range(1, args.pmax + 1), args.q, args.refinements,
                              args.base, nodes=args.nodes, tol=args.tol)
    return rows, ["q", "refinement", "p", "dof_H", "iterations", "residual"]


def cmd_couple_fv(args):
    from .fv import run_coupled_experiment
    from .studies import add_rates

    _check(args.p >= 1, "--p must be >= 1")
    _check(args.qrec >= 0, "--qrec must be >= 0")
    _check(args.nx >= 2, "--nx must be >= 2")
    levels = args.refinements + (0 if args.quick else 1)
    _check(levels >= 1, "nothing to run")
    rows = [run_coupled_experiment(args.p, args.qrec, args.nx * 2 ** r, args.fraction,
                                   args.lor_n, args.lor_nodes, args.cfl)
            for r in range(levels)]
    add_rates(rows, ["err_L", "err_L_proj", "err_P"])
    return rows, ["n_x", "err_L", "rate_err_L", "err_L_proj", "rate_err_L_proj",
                  "err_P", "rate_err_P", "conservation", "steps"]


def cmd_amr(args):
    from .amr import run_coarsening_study
    from .studies import smooth_2d

    _check(args.p >= 1, "--p must be >= 1")
    _check(args.refinements >= 0, "--refinements must be >= 0")
    _check(args.levels >= 1, "--levels must be >= 1")
    rows = run_coarsening_study(smooth_2d, args.p, args.refinements, args.levels, args.base,
                                tol=args.tol)
    return rows, ["elements", "h", "error", "rate", "conservation", "iterations"]


def _check(cond, msg):
    if not cond:
        raise ArgumentError(msg)


# -- parser --------------------------------------------------------------------

def _common(sp):
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--output", "-o", default=None, help="file to write (default stdout)")
    sp.add_argument("--config", default=None, help="key=value file; flags override it")
    sp.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = _Parser(prog="lortransfer", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sp = sub.add_parser("quadrature", help="1D points, weights, angles")
    sp.add_argument("--kind", default="gauss-lobatto")
    sp.add_argument("--n", type=int, default=8)
    _common(sp)
    sp.set_defaults(func=cmd_quadrature)

    sp = sub.add_parser("transfer", help="accuracy and conservation of R and P")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--q", type=int, default=0)
    sp.add_argument("--lor-n", type=int, default=None)
    sp.add_argument("--nodes", "--lor-nodes", dest="nodes", default="gauss-lobatto")
    sp.add_argument("--refinements", type=int, default=4)
    sp.add_argument("--weighted", action="store_true")
    sp.add_argument("--continuity", choices=["H1", "L2"], default="H1")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--nx", type=int, default=2)
    sp.add_argument("--ny", type=int, default=2)
    sp.add_argument("--nz", type=int, default=2)
    sp.add_argument("--box", type=float, nargs=2, default=[0.0, 1.0])
    sp.add_argument("--tol", type=float, default=1e-12)
    _common(sp)
    sp.set_defaults(func=cmd_transfer)

    sp = sub.add_parser("alpha", help="lower bound of R over a node-set sweep")
    sp.add_argument("--nodes", default="gauss-lobatto")
    sp.add_argument("--pmin", type=int, default=2)
    sp.add_argument("--pmax", type=int, default=16)
    sp.add_argument("--method", choices=["dense", "power"], default="dense")
    _common(sp)
    sp.set_defaults(func=cmd_alpha)

    sp = sub.add_parser("precondition", help="CG iteration counts for P")
    sp.add_argument("--pmax", type=int, default=5)
    sp.add_argument("--q", type=int, nargs="+", default=[0, 1])
    sp.add_argument("--refinements", type=int, default=3)
    sp.add_argument("--base", type=int, default=4)
    sp.add_argument("--nodes", default="gauss-lobatto")
    sp.add_argument("--tol", type=float, default=1e-12)
    _common(sp)
    sp.set_defaults(func=cmd_precondition)

    sp = sub.add_parser("couple-fv", help="high order -> finite volume -> high order")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--qrec", type=int, default=3)
    sp.add_argument("--nx", type=int, default=10)
    sp.add_argument("--refinements", type=int, default=4)
    sp.add_argument("--lor-n", type=int, default=4)
    sp.add_argument("--lor-nodes", default="uniform")
    sp.add_argument("--fraction", type=float, default=0.25, help="fraction of a revolution")
    sp.add_argument("--cfl", type=float, default=0.3)
    sp.add_argument("--quick", action="store_true", help="skip the finest level")
    _common(sp)
    sp.set_defaults(func=cmd_couple_fv)

    sp = sub.add_parser("amr-coarsen", help="coarsening a refined field back to its parent")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--refinements", type=int, default=4)
    sp.add_argument("--levels", type=int, default=1)
    sp.add_argument("--base", type=int, default=2)
    sp.add_argument("--tol", type=float, default=1e-12)
    _common(sp)
    sp.set_defaults(func=cmd_amr)
    return ap


def _read_config(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"config line without '=': {line!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _convert(action, raw):
    if isinstance(action, argparse._StoreTrueAction):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise _UsageError(f"bad boolean {raw!r} for {action.dest}")
    conv = action.type or str
    parts = raw.replace(",", " ").split() if action.nargs not in (None, "?") else [raw]
    try:
        vals = [conv(x) for x in parts]
    except ValueError:
        raise _UsageError(f"bad value {raw!r} for {action.dest}") from None
    if action.choices is not None and any(x not in action.choices for x in vals):
        raise _UsageError(f"{action.dest} must be one of {list(action.choices)}")
    return vals if action.nargs not in (None, "?") else vals[0]


def parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        try:
            raw = _read_config(args.config)
        except OSError as exc:
            raise _UsageError(f"cannot read config: {exc}") from None
        sp = ap._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for k, v in raw.items():
            if k not in actions or k in ("help", "config"):
                raise _UsageError(f"unknown config key {k!r} for {args.command}")
            defaults[k] = _convert(actions[k], v)
        sp.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows, columns = args.func(args)
        buf = io.StringIO()
        write_table(rows, columns, args, buf)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"convergence-error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
