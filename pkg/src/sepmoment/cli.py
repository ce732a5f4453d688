"""Command line entry point: ``sepmoment certify | verify | bench``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings

import numpy as np

from . import benchmarks as bm
from .driver import (
    CertifyOptions,
    StateFileError,
    Verdict,
    certify,
    parse_state_file,
    read_certificate,
    verify,
    write_certificate,
)
from .tensor_core import TensorError

EXIT_CODES = {Verdict.SEPARABLE: 0, Verdict.NOT_SEPARABLE: 1, Verdict.UNDETERMINED: 2}
EXIT_INPUT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepmoment", description="Separability certificates from moment relaxations.")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="decide separability of a state file")
    c.add_argument("state", help="JSON state file (ensemble or density form)")
    c.add_argument("--symmetric", action="store_true", help="look for a symmetric decomposition")
    c.add_argument("--k-max", type=int, default=None)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--rank-tol", type=float, default=1e-6)
    c.add_argument("--feas-tol", type=float, default=1e-8)
    c.add_argument("--residual-tol", type=float, default=1e-6)
    c.add_argument("--max-moments", type=int, default=6000)
    c.add_argument("--no-refine", action="store_true", help="report raw extracted atoms without least-squares polish")
    c.add_argument("--rescale-trace", action="store_true", help="divide the state by its trace")
    c.add_argument("--out", help="write the certificate JSON here")
    c.add_argument("--dump-sdp", metavar="DIR", help="write each relaxation in sparse text form")
    c.add_argument("--verbose", action="store_true")

    v = sub.add_parser("verify", help="re-check a certificate against a state file")
    v.add_argument("certificate")
    v.add_argument("state")

    b = sub.add_parser("bench", help="run the reference examples and print a table")
    b.add_argument("--quick", action="store_true", help="skip the partitioned two-qubit runs")
    b.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_certify(args) -> int:
    H, _ = parse_state_file(args.state)
    opts = CertifyOptions(
        mode="symmetric" if args.symmetric else "partitioned",
        seed=args.seed,
        k_max=args.k_max,
        rank_tol=args.rank_tol,
        feas_tol=args.feas_tol,
        residual_tol=args.residual_tol,
        max_moments=args.max_moments,
        rescale_trace=args.rescale_trace,
        refine=not args.no_refine,
        dump_dir=args.dump_sdp,
        verbose=args.verbose,
    )
    cert = certify(H, opts)
    print(f"verdict: {cert.verdict.value}")
    if cert.verdict is Verdict.SEPARABLE:
        print(f"rank: {cert.rank}  level k: {cert.level_k}  flat t: {cert.flat_t}  residual: {cert.residual:.3e}")
        for w, atom in zip(cert.decomposition.weights, cert.decomposition.vectors):
            vecs = "  ".join(np.array2string(v, precision=4, separator=", ") for v in atom)
            print(f"  {w:.6f}  {vecs}")
    elif cert.verdict is Verdict.NOT_SEPARABLE:
        print(f"level k: {cert.level_k}  certificate margin: {cert.margin:.3e}")
    else:
        last = cert.diagnostics[-1] if cert.diagnostics else {}
        print(f"k_max reached: {cert.k_max_reached}  last level: {last.get('k')}  {last.get('message', last.get('skipped', ''))}")
    print(f"time: {cert.metadata['seconds']:.1f}s")
    if args.out:
        write_certificate(cert, args.out, tensor=H)
    return EXIT_CODES[cert.verdict]


def _cmd_verify(args) -> int:
    H, _ = parse_state_file(args.state)
    try:
        cert = read_certificate(args.certificate)
    except (OSError, ValueError, KeyError) as exc:
        raise StateFileError(args.certificate, f"unreadable certificate: {exc}") from exc
    report = verify(cert, H)
    print(f"{cert.verdict.value}: {'verified' if report.ok else 'REJECTED'} ({report.message})")
    return 0 if report.ok else 1


def bench_cases(quick: bool = False, seed: int = 0):
    rng = np.random.default_rng(seed)
    cases = [
        ("three-qubit GHZ/W mixture", bm.wei_goldbart(), "symmetric"),
        ("two-qubit Bell mixture", bm.bell_mixture(), "symmetric"),
        ("seven-term mixture", bm.seven_term_mixture(), "symmetric"),
        ("isotropic F=1/2", bm.isotropic(2, 0.5), "symmetric"),
        ("symmetrized product pair", bm.symmetrized_product_mixture(2, 2, rng), "symmetric"),
    ]
    if not quick:
        ex3 = bm.symmetrized_product_mixture(2, 2, rng)
        cases += [
            ("isotropic F=1/2", bm.isotropic(2, 0.5), "partitioned"),
            ("isotropic F=1", bm.isotropic(2, 1.0), "partitioned"),
            ("symmetrized product pair", ex3, "partitioned"),
        ]
    return cases


def _cmd_bench(args) -> int:
    print(f"{'state':28s} {'mode':12s} {'verdict':14s} {'r':>3s} {'k':>3s} {'residual/margin':>16s} {'time':>7s}")
    for name, H, mode in bench_cases(args.quick, args.seed):
        t0 = time.perf_counter()
        cert = certify(H, CertifyOptions(mode=mode, seed=args.seed))
        val = cert.residual if cert.verdict is Verdict.SEPARABLE else cert.margin
        r = "-" if cert.rank is None else str(cert.rank)
        k = "-" if cert.level_k is None else str(cert.level_k)
        vs = "-" if val is None else f"{val:.3e}"
        print(f"{name:28s} {mode:12s} {cert.verdict.value:14s} {r:>3s} {k:>3s} {vs:>16s} {time.perf_counter() - t0:6.1f}s")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            if args.command == "certify":
                return _cmd_certify(args)
            if args.command == "verify":
                return _cmd_verify(args)
            return _cmd_bench(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StateFileError, TensorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
