"""Command-line interface: ``slct linear|relu|softmax|verify|select``.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 numerical failure
of the oracle.  Errors are one line on stderr.  ``--json`` output is
deterministic for fixed arguments.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from . import io
from .errorfn import coeff_sos_linear, k_relu, k_softmax
from .lct import LCT
from .linear import (LinearArchitecture, NoAdmissibleDecomposition, has_zero_margin, lambda_for,
                     mseta_decompose, true_rank)
from .oracle import DEFAULT_EPS_RANGE, DEFAULT_N_RANGE, GRID_POINTS, OracleError, estimate_lct
from .relu import InputDomain, enumerate_regions, lambda_relu
from .selection import rank_architectures
from .softmax import lambda_softmax_linear, softmax_difference_reduction

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _widths_arg(text):
    try:
        widths = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"widths must be comma-separated integers, got {text!r}") from None
    return widths


def _emit(doc, as_json, human):
    if as_json:
        out = {"tool": "slct", "version": __version__}
        out.update(doc)
        sys.stdout.write(json.dumps(out, indent=2) + "\n")
    else:
        sys.stdout.write(human + "\n")


def _lct_line(lct: LCT, tag=None):
    text = str(lct)
    return f"{text} [{tag}]" if tag else text


# -- subcommands ------------------------------------------------------------

def cmd_linear(args):
    if args.truth is not None:
        if args.widths is not None or args.rank is not None:
            raise UsageError("--truth cannot be combined with --widths/--rank")
        net = io.linear_network_from_json(io.load_json(args.truth))
        arch = net.architecture
        if args.bias and not arch.bias:
            arch = LinearArchitecture(arch.widths, True)
        r = true_rank(net)
    else:
        if args.widths is None or args.rank is None:
            raise UsageError("linear needs --widths and --rank, or --truth")
        arch = LinearArchitecture(args.widths, args.bias)
        r = args.rank
    lct = lambda_for(arch, r)
    shortcut = has_zero_margin(arch.widths, r)
    dec = None if shortcut else mseta_decompose(arch.widths, r)
    doc = {
        "command": "linear",
        "widths": list(arch.widths),
        "bias": arch.bias,
        "rank": r,
        **lct.to_json(),
        "shortcut": shortcut,
        "decomposition": None if dec is None else {
            "selected": list(dec.selected), "ell": dec.ell, "M": dec.M, "a": dec.a},
    }
    _emit(doc, args.json, _lct_line(lct, "zero-margin shortcut" if shortcut else None))
    return EXIT_OK


def _domain(args, dim):
    if args.domain is None:
        return InputDomain([-1.0] * dim, [1.0] * dim)
    return io.domain_from_json(io.load_json(args.domain))


def cmd_relu(args):
    net = io.relu_network_from_json(io.load_json(args.truth))
    domain = io.domain_from_json(io.load_json(args.domain))
    overrides = io.groups_from_json(io.load_json(args.groups)) if args.groups else None
    regions = enumerate_regions(net, domain)
    res = lambda_relu(net, domain, overrides)
    doc = {
        "command": "relu",
        "widths": list(net.widths),
        **res.lct.to_json(),
        "regions": sorted(sorted(r.active) for r in regions),
        "removed": list(res.removed),
        **res.groups.to_json(),
        "parts": [p.to_json() for p in res.parts],
        "degenerate": res.degenerate,
    }
    lines = [_lct_line(res.lct)]
    lines.append(f"regions: {len(regions)}; removed units: {list(res.removed) or 'none'}")
    for g, h, r, p in zip(res.groups.groups, res.groups.h1, res.groups.ranks, res.parts):
        lines.append(f"group {list(g)}: outputs {h}, rank {r}, {p}")
    _emit(doc, args.json, "\n".join(lines))
    return EXIT_OK


def cmd_softmax(args):
    net = io.linear_network_from_json(io.load_json(args.truth))
    arch = net.architecture
    red = softmax_difference_reduction(arch, net, args.pivot)
    lct = lambda_softmax_linear(arch, net, args.pivot)
    rank = None if red.truth is None else true_rank(red.truth)
    doc = {
        "command": "softmax",
        "widths": list(arch.widths),
        "bias": arch.bias,
        "pivot": args.pivot,
        "reducedWidths": None if red.architecture is None else list(red.architecture.widths),
        "rank": rank,
        **lct.to_json(),
    }
    human = f"{_lct_line(lct)}\nreduced outputs: {red.describe()}"
    _emit(doc, args.json, human)
    return EXIT_OK


def _grid(args):
    if args.method == "volume":
        given = (args.eps_min, args.eps_max, args.eps_points)
        lo, hi = DEFAULT_EPS_RANGE
    else:
        given = (args.n_min, args.n_max, args.n_points)
        lo, hi = DEFAULT_N_RANGE
    if all(v is None for v in given):
        return None
    gmin, gmax, npts = given
    return np.geomspace(lo if gmin is None else gmin, hi if gmax is None else gmax,
                        GRID_POINTS if npts is None else npts)


def cmd_verify(args):
    doc = io.load_json(args.truth)
    if args.kind == "relu":
        truth = io.relu_network_from_json(doc)
        domain = _domain(args, truth.widths[2])
        K = k_relu(truth, domain, args.quadrature, args.seed)
        exact = lambda_relu(truth, domain).lct
    else:
        truth = io.linear_network_from_json(doc)
        arch = truth.architecture
        if args.kind == "linear":
            K = coeff_sos_linear(arch, truth)
            exact = lambda_for(arch, true_rank(truth))
        else:
            domain = _domain(args, arch.widths[-1])
            K = k_softmax(arch, truth, domain, args.quadrature, args.seed)
            exact = lambda_softmax_linear(arch, truth)
    grid = _grid(args)
    kwargs = {"radius": args.radius, "n_samples": args.samples, "seed": args.seed}
    kwargs["eps_grid" if args.method == "volume" else "n_grid"] = grid
    est = estimate_lct(K, args.method, **kwargs)
    if args.csv:
        est.write_csv(args.csv)
    z = est.z_score(exact.lam)
    out = {
        "command": "verify",
        "kind": args.kind,
        "exact": exact.to_json(),
        "estimate": est.to_json(),
        "zScore": z,
        "withinTwoSigma": bool(abs(z) <= 2.0),
    }
    theta = "n/a" if est.theta_hat is None else f"{est.theta_hat:.2f}"
    human = (f"lambda_hat = {est.lambda_hat:.4f} +/- {est.stderr_lambda:.4f} ({est.method}, "
             f"R^2 = {est.fit_r2:.4f}, theta_hat = {theta})\n"
             f"exact: {exact}\nz = {z:.2f}")
    _emit(out, args.json, human)
    if est.poor_fit:
        raise OracleError(f"poor fit: R^2 = {est.fit_r2:.4f} below 0.95")
    return EXIT_OK


def cmd_select(args):
    candidates = io.candidates_from_json(io.load_json(args.candidates))
    ranked = rank_architectures(candidates, args.n)
    doc = {"command": "select", "n": args.n, "ranking": [rc.to_json() for rc in ranked]}
    lines = []
    for pos, rc in enumerate(ranked, start=1):
        c = rc.candidate
        head = f"{pos}. widths {','.join(map(str, c.widths))} bias {str(c.bias).lower()} rank {c.rank}"
        lines.append(f"{head}: penalty {rc.penalty:.6g}, {rc.lct}" if rc.ok else f"{head}: error: {rc.error}")
    _emit(doc, args.json, "\n".join(lines))
    failed = [rc for rc in ranked if not rc.ok]
    if failed:
        sys.stderr.write(f"error: {len(failed)} candidate(s) invalid; first: {failed[0].error}\n")
        return EXIT_INVALID
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser():
    p = _Parser(prog="slct", description="Learning coefficients of linear, ReLU and softmax networks. "
                                         "Width lists are output-first: H(1) (outputs) ... H(L+1) (inputs).")
    p.add_argument("--version", action="version", version=f"slct {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("linear", help="deep linear network")
    s.add_argument("--widths", type=_widths_arg, help="output-first, e.g. 2,1,2")
    s.add_argument("--rank", type=int)
    s.add_argument("--truth", help="slct-net-v1 file; rank taken from its weight product")
    s.add_argument("--bias", action="store_true")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_linear)

    s = sub.add_parser("relu", help="three-layer ReLU network")
    s.add_argument("--truth", required=True)
    s.add_argument("--domain", required=True, help="slct-box-v1 file")
    s.add_argument("--groups", help="group override file")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_relu)

    s = sub.add_parser("softmax", help="linear network with softmax outputs")
    s.add_argument("--truth", required=True)
    s.add_argument("--pivot", type=int, default=0, help="0-based reference output")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_softmax)

    s = sub.add_parser("verify", help="Monte-Carlo estimate of the threshold next to the exact value")
    s.add_argument("--truth", required=True)
    s.add_argument("--kind", choices=("linear", "relu", "softmax"), required=True)
    s.add_argument("--method", choices=("volume", "laplace"), default="volume")
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--radius", type=float, default=0.5)
    s.add_argument("--domain", help="slct-box-v1 file (relu/softmax; default [-1, 1]^d)")
    s.add_argument("--quadrature", type=int, default=1024, help="quadrature points (relu/softmax)")
    s.add_argument("--eps-min", type=float)
    s.add_argument("--eps-max", type=float)
    s.add_argument("--eps-points", type=int)
    s.add_argument("--n-min", type=float)
    s.add_argument("--n-max", type=float)
    s.add_argument("--n-points", type=int)
    s.add_argument("--csv", help="write fit diagnostics here")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("select", help="rank candidate architectures by free-energy penalty")
    s.add_argument("--candidates", required=True)
    s.add_argument("--n", type=float, required=True, help="sample size")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_select)
    return p


def _one_line(exc):
    return " ".join(str(exc).split()) or type(exc).__name__


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {_one_line(exc)}\n")
        return EXIT_USAGE
    except OracleError as exc:
        sys.stderr.write(f"numerical error: {_one_line(exc)}\n")
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError, NoAdmissibleDecomposition) as exc:
        sys.stderr.write(f"invalid input: {_one_line(exc)}\n")
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
