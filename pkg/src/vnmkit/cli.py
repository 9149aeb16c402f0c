"""Command-line front end.

JSON summaries go to stdout, binary artifacts to the paths given by flags and
diagnostics to stderr. Exit status is 2 for validation errors and 3 for I/O
or container errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import containers as io
from .core import VnmConfig, compress, decompress
from .errors import ContainerError, VnmError
from .metrics import energy, energy_sweep, reports_to_csv, reports_to_json
from .pruner import (
    FisherEstimator,
    column_search,
    gradual_prune,
    magnitude_prune_unstructured,
    magnitude_prune_vectorwise,
    magnitude_prune_vnm,
    make_decay_schedule,
    so_prune_vnm,
)
from .spmm import cost_model, spmm_reference

EXIT_VALIDATION = 2
EXIT_IO = 3

POLICIES = ("magnitude", "so-exact", "so-pairwise", "unstructured", "vectorwise")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _cfg(args) -> VnmConfig:
    return VnmConfig(args.v, args.n, args.m)


def cmd_gen(args) -> None:
    rng = np.random.default_rng(args.seed)
    d = (args.scale * rng.standard_normal((args.rows, args.cols))).astype(np.float32)
    io.write_dense(args.output, d, half=args.half)
    _emit({"rows": args.rows, "cols": args.cols, "seed": args.seed, "half": args.half})


def _fisher(args, d) -> FisherEstimator:
    if not args.grads:
        raise VnmError(f"policy {args.policy} needs gradient samples (--grads)")
    grads = io.read_dense(args.grads)
    est = FisherEstimator.for_matrix(*d.shape, args.m, damp=args.damp)
    return est.add_samples(grads)


def cmd_prune(args) -> None:
    d = io.read_dense(args.input)
    cfg = _cfg(args)
    summary = {"policy": args.policy, "v": cfg.v, "n": cfg.n, "m": cfg.m}
    if args.policy == "magnitude":
        mask = magnitude_prune_vnm(d, cfg)
    elif args.policy in ("unstructured", "vectorwise"):
        s = args.sparsity if args.sparsity is not None else cfg.sparsity()
        if args.policy == "unstructured":
            mask = magnitude_prune_unstructured(d, s)
        else:
            mask = magnitude_prune_vectorwise(d, args.l or cfg.v, s)
    else:
        mode = "exact" if args.policy == "so-exact" else "pairwise"
        fisher = _fisher(args, d)
        summary["search"] = column_search(cfg.m)
        if args.beta:
            n0 = args.n0 if args.n0 is not None else cfg.m // 2
            schedule = make_decay_schedule(n0, cfg.n, args.beta)
            mask = gradual_prune(d, cfg, schedule, fisher, mode=mode)[-1]
            summary["schedule"] = list(schedule.steps)
        else:
            mask = so_prune_vnm(d, fisher, cfg, mode=mode)
    io.write_mask(args.output, mask)
    summary["sparsity"] = 1.0 - float(mask.mean())
    summary["energy"] = energy(d, mask)
    _emit(summary)


def cmd_compress(args) -> None:
    d = io.read_dense(args.input)
    mask = io.read_mask(args.mask)
    s = compress(d, mask, _cfg(args), half=args.half)
    io.write_vnm(args.output, s)
    _emit({"r": s.r, "k": s.k, "cfg": str(s.cfg), "bytes": s.structure_bytes()})


def cmd_decompress(args) -> None:
    s = io.read_vnm(args.input)
    io.write_dense(args.output, decompress(s), half=s.half)
    _emit({"rows": s.r, "cols": s.k})


def cmd_spmm(args) -> None:
    a = io.read_vnm(args.a)
    b = io.read_dense(args.b)
    out = spmm_reference(a, b)
    io.write_dense(args.output, out.astype(np.float32))
    _emit({"rows": out.shape[0], "cols": out.shape[1]})


def cmd_energy(args) -> None:
    d = io.read_dense(args.input)
    if args.mask:
        _emit({"energy": energy(d, io.read_mask(args.mask))})
        return
    if not (args.policies and args.sparsities):
        raise VnmError("energy needs --mask, or --policies with --sparsities")
    reports = energy_sweep(d, args.policies.split(","), [float(s) for s in args.sparsities.split(",")])
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(reports_to_csv(reports))
    sys.stdout.write(reports_to_json(reports) + "\n")


def cmd_cost(args) -> None:
    sys.stdout.write(cost_model(args.r, args.k, args.c, _cfg(args)).to_json() + "\n")


def cmd_inspect(args) -> None:
    s = io.read_vnm(args.input)
    _emit({
        "r": s.r, "k": s.k, "v": s.cfg.v, "n": s.cfg.n, "m": s.cfg.m,
        "dtype": "half" if s.half else "real32",
        "bytes": s.structure_bytes(),
        "sparsity": s.cfg.sparsity(),
        "ideal_speedup": s.cfg.ideal_speedup(),
    })


def _add_pattern(p, n_default=2):
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--m", type=int, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnmkit", description="V:N:M sparse format toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a seeded random DMX1 matrix")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--half", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("prune", help="produce an MSK1 mask from a DMX1 matrix")
    p.add_argument("--policy", choices=POLICIES, default="magnitude")
    _add_pattern(p)
    p.add_argument("--sparsity", type=float, help="target sparsity for unstructured/vectorwise")
    p.add_argument("--l", type=int, help="vector length for vectorwise (default: --v)")
    p.add_argument("--grads", help="DMX1 gradient samples, one flattened sample per row")
    p.add_argument("--damp", type=float)
    p.add_argument("--n0", type=int, help="initial N for gradual pruning (default M/2)")
    p.add_argument("--beta", type=int, help="number of decay steps; enables gradual pruning")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("compress", help="DMX1 + MSK1 -> VNM1")
    _add_pattern(p)
    p.add_argument("--mask", required=True)
    p.add_argument("--half", action="store_true")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="VNM1 -> DMX1")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("spmm", help="VNM1 x DMX1 -> DMX1")
    p.add_argument("-a", required=True)
    p.add_argument("-b", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_spmm)

    p = sub.add_parser("energy", help="energy of a mask, or a policy sweep")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--mask")
    p.add_argument("--policies", help="comma list: unstructured, vnm:<V>, vw:<l>")
    p.add_argument("--sparsities", help="comma list of sparsities on the 1-2/m grid")
    p.add_argument("--csv", help="also write the sweep as CSV")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("cost", help="analytical cost report")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    _add_pattern(p)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("inspect", help="describe a VNM1 file")
    p.add_argument("-i", "--input", required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ContainerError, OSError) as exc:
        print(f"vnmkit: {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except VnmError as exc:
        print(f"vnmkit: {args.command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
