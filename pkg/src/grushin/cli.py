"""Command-line entry point: ``grushin <command> [options]``.

Exit status is 0 when every asserted check passes, 1 when some check fails
and 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, GrushinError
from .suites import COMMANDS, ExperimentConfig, run

logger = logging.getLogger("grushin")


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    out = []
    for v in text.split(","):
        f = float(v)
        if f != int(f):
            raise argparse.ArgumentTypeError(f"not an integer: {v}")
        out.append(int(f))
    return out


def _count(text):
    # accepts 1e6 style counts
    f = float(text)
    if f != int(f) or f < 1:
        raise argparse.ArgumentTypeError(f"not a positive count: {text}")
    return int(f)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; command-line flags override it")
    common.add_argument("--out", help="report directory (default: reports)")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker threads (default: all cores)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--rel-tol", type=float, dest="rel_tol", help="quadrature relative tolerance")
    common.add_argument("--truncation", type=float, help="half-width of truncated integration windows")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="grushin", description="Grushin operator geometry and kernel verification suites.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("distances", parents=[common], help="d_K / d_CC equivalence, mu inversion")
    d.add_argument("--dims", type=_int_list)
    d.add_argument("--pairs", type=_count)
    d.add_argument("--mu-pairs", type=_count, dest="mu_pairs")

    lm = sub.add_parser("lemmas", parents=[common], help="scalar inequality sweeps")
    lm.add_argument("--n-grid", choices=("default", "coarse"), dest="n_grid")

    v = sub.add_parser("volumes", parents=[common], help="exact vs Monte Carlo vs bounds")
    v.add_argument("--n", type=_int_list, help="dimensions, comma separated")
    v.add_argument("--x", type=_float_list, help="|x| values, comma separated")
    v.add_argument("--r", type=_float_list, help="radii for the bracket matrix")
    v.add_argument("--samples", type=_count)

    k = sub.add_parser("kernels", parents=[common], help="heat, Green and Poisson checks")
    k.add_argument("--pairs", type=_count)
    k.add_argument("--asym-n", type=int, dest="asym_n")

    m = sub.add_parser("maximal", parents=[common], help="composition, weak type, HDS comparison")
    m.add_argument("--functions", type=_count, dest="composition_functions")
    m.add_argument("--hds-samples", type=_count, dest="hds_samples")
    m.add_argument("--U", type=float, dest="hds_U")

    sub.add_parser("all", parents=[common], help="every suite plus a reproducibility check")
    return p


def _options(args):
    ns = vars(args)
    cmd = args.command
    if cmd == "volumes":
        opts = {}
        if ns.get("n"):
            opts["dims"] = opts["mc_dims"] = ns["n"]
        if ns.get("x") is not None:
            opts["x"] = opts["mc_x"] = ns["x"]
        for key in ("r", "samples"):
            if ns.get(key) is not None:
                opts[key] = ns[key]
        return {"volumes": opts}
    keys = {"distances": ("dims", "pairs", "mu_pairs"), "lemmas": ("n_grid",),
            "kernels": ("pairs", "asym_n"), "maximal": ("composition_functions", "hds_samples", "hds_U")}
    return {cmd: {k: ns[k] for k in keys.get(cmd, ()) if ns.get(k) is not None}} if cmd in keys else {}


def make_config(args):
    top = {k: getattr(args, k) for k in ("seed", "jobs", "out", "format", "rel_tol", "truncation")}
    opts = _options(args)
    if args.config:
        cfg = ExperimentConfig.from_file(args.config, command=args.command,
                                         **{k: v for k, v in top.items() if v is not None})
        for cmd, o in opts.items():
            cfg.options.setdefault(cmd, {}).update(o)
        cfg.__post_init__()
        return cfg
    return ExperimentConfig(args.command, options={c: o for c, o in opts.items() if o},
                            **{k: v for k, v in top.items() if v is not None})


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = make_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        code, reports = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GrushinError as exc:
        print(f"error in {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for r in reports:
        for line in r.summary_lines():
            print(line)
    print(("PASS" if code == 0 else "FAIL") + f" {cfg.command} (reports in {cfg.out})")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
