"""Command-line experiment runner.

Every command writes its data files plus ``manifest.json`` into ``--out``.
Data files carry the hash of the resolved configuration; the manifest adds
library versions and wall time.  Exit codes: 0 ok, 2 usage, 3 refused as
infeasible, 4 precision failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .circle_points import AngleSet, FactoredRadius, angles
from .errors import LatticeAnglesError
from .gaussian_core import PrecisionContext, check_repulsion, split_prime, split_primes_array

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

WINDOW_CENTER = 0.5390
WINDOW_WIDTHS = (1 / 100, 1 / 1000, 1 / 5000)
ATYPICAL_FACTOR = 2.0
# control-run median KS at N = 2^14, M = 14 primes <= 1e6, seeds 0..19
TYPICAL_KS = 0.067
NOT_IN_CONFIG = {"out", "threads", "config", "func", "gnuplot"}


class UsageError(Exception):
    pass


class Infeasible(LatticeAnglesError):
    exit_code = 3


# ---- output helpers ----------------------------------------------------------


class Run:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.config = {k: v for k, v in sorted(vars(args).items()) if k not in NOT_IN_CONFIG}
        blob = json.dumps(self.config, sort_keys=True, default=str).encode()
        self.config_hash = hashlib.sha256(blob).hexdigest()[:16]
        self.files: dict[str, str] = {}
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def write(self, name: str, text: str):
        path = self.out / name
        path.write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def write_csv(self, name: str, body: str):
        self.write(name, f"# config_hash={self.config_hash}\n{body}")

    def write_json(self, name: str, obj: dict):
        obj = {"config_hash": self.config_hash, **obj}
        self.write(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def finish(self):
        manifest = {
            "command": self.args.command,
            "config": self.config,
            "config_hash": self.config_hash,
            "versions": versions(),
            "outputs": self.files,
            "wall_time": time.perf_counter() - self.t0,
            **self.extra,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def versions() -> dict:
    out = {"lattice_angles": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "mpmath", "sympy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


# ---- radius selection --------------------------------------------------------


def m2plus1_primes(count: int, start: int = 2917) -> list[int]:
    """``count`` consecutive primes of the form m^2 + 1 (m even), from ``start`` on."""
    from sympy import isprime

    out = []
    m = 2
    while len(out) < count:
        q = m * m + 1
        if q >= start and isprime(q):
            out.append(q)
        m += 2
    return out


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from exc


def radius_from_args(args) -> FactoredRadius:
    if getattr(args, "primes", None):
        ps = _int_list(args.primes)
        if len(set(ps)) != len(ps):
            raise UsageError("repeated prime in --primes")
        exps = _int_list(args.exponents) if getattr(args, "exponents", None) else None
        if exps is not None and len(exps) != len(ps):
            raise UsageError("--exponents must match --primes in length")
        return FactoredRadius.from_primes(ps, exps, two_exp=getattr(args, "two_exp", 0) or 0)
    if getattr(args, "integer", None):
        return FactoredRadius.from_integer(int(args.integer))
    if getattr(args, "random_split", None):
        from .random_model import stream

        pool = split_primes_array(int(float(args.max_prime)))
        if pool.size < args.random_split:
            raise UsageError("not enough split primes below --max-prime")
        chosen = np.sort(stream(args.seed, 0).choice(pool, args.random_split, replace=False))
        return FactoredRadius.from_primes(chosen.tolist())
    if getattr(args, "m2plus1_primes", None):
        return FactoredRadius.from_primes(m2plus1_primes(args.m2plus1_primes, args.m2plus1_start))
    raise UsageError("give a radius: --primes, --integer, --random-split or --m2plus1-primes")


def add_radius_options(p: argparse.ArgumentParser):
    g = p.add_argument_group("radius")
    g.add_argument("--primes", help="comma-separated split primes")
    g.add_argument("--exponents", help="comma-separated exponents for --primes")
    g.add_argument("--two-exp", type=int, default=0)
    g.add_argument("--integer", help="radius squared as an integer (factored with sympy)")
    g.add_argument("--random-split", type=int, metavar="M", help="M distinct random split primes")
    g.add_argument("--max-prime", default="1e6", help="upper bound for --random-split primes")
    g.add_argument("--m2plus1-primes", type=int, metavar="K", help="K consecutive primes m^2+1")
    g.add_argument("--m2plus1-start", type=int, default=2917, help="smallest m^2+1 prime to use")


def _ctx(args) -> PrecisionContext:
    return PrecisionContext(args.precision_bits)


# ---- commands ----------------------------------------------------------------


def cmd_gen_circle(args, run: Run):
    from .spacing import window

    fr = radius_from_args(args)
    a = angles(fr, _ctx(args))
    run.extra["n"] = str(fr.n)
    run.write_csv("angles.csv", a.to_csv())
    widths = [float(w) for w in args.widths.split(",")] if args.widths else list(WINDOW_WIDTHS)
    rows = ["width,u"]
    for w in widths:
        rows += [f"{w:.17g},{u:.17g}" for u in window(a, args.center, w)]
    run.write_csv("windows.csv", "\n".join(rows) + "\n")
    run.write_json("summary.json", {"n": str(fr.n), "N": a.N, "radius": fr.to_dict(),
                                    "center": args.center, "widths": widths})
    if args.gnuplot:
        lines = ["set datafile separator ','", "set key off"]
        for w in widths:
            lines.append(
                f"plot 'windows.csv' every ::2 using (($1=={w:.17g})?$2:1/0):(0) with points pt 7 ps 0.3"
            )
        run.write("windows.gp", "\n".join(lines) + "\n")


def _angles_for_spacing(args) -> AngleSet:
    if args.angles:
        text = Path(args.angles).read_text()
        body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
        return AngleSet.from_csv(body)
    if args.equally_spaced:
        n = args.equally_spaced
        return AngleSet(0, n, np.arange(n) * (math.pi / 2) / n)
    return angles(radius_from_args(args), _ctx(args))


def cmd_spacing(args, run: Run):
    from .spacing import gaps, histogram, ks_exponential, scale_report, star_discrepancy

    a = _angles_for_spacing(args)
    g = gaps(a, args.mode, args.normalization)
    h = histogram(g, args.bins, args.upper)
    ks = ks_exponential(g)
    run.extra["n"] = str(a.n)
    run.write_csv("histogram.csv", h.to_csv())
    report = {
        "n": str(a.n),
        "N": a.N,
        "mode": args.mode,
        "normalization": args.normalization,
        "ks": ks,
        "star_discrepancy": star_discrepancy(a),
        "scales": scale_report(a.N),
        "typical_ks": TYPICAL_KS,
        "atypical": bool(ks >= ATYPICAL_FACTOR * TYPICAL_KS),
    }
    run.write_json("spacing.json", report)
    if args.gnuplot:
        run.write("histogram.gp", "\n".join([
            "set datafile separator ','",
            "plot 'histogram.csv' every ::2 using (($1+$2)/2):($3/($2-$1)) with boxes title 'spacings', \\",
            "     exp(-x) with lines title 'e^{-s}'",
        ]) + "\n")


def _kernel(args, dim: int):
    from .kernels import kernel_from_spec

    return kernel_from_spec({"family": args.kernel, "width": args.width}, dim)


def cmd_correlate(args, run: Run):
    from .correlation import correlation_direct, correlation_distinct, correlation_fourier

    fr = radius_from_args(args)
    kern = _kernel(args, args.r - 1)
    if args.method == "fourier":
        value = correlation_fourier(fr, kern, args.r, args.k_cutoff)
    else:
        a = angles(fr, _ctx(args))
        fn = correlation_direct if args.method == "direct" else correlation_distinct
        value = fn(a, kern, args.r)
    run.extra["n"] = str(fr.n)
    run.write_json("correlation.json", {"n": str(fr.n), "r": args.r, "kernel": kern.to_dict(),
                                        "value": value, "method": args.method})


def cmd_random_model(args, run: Run):
    from . import random_model as rm

    M, r = args.M, args.r
    n0 = angles(FactoredRadius.from_integer(args.n0)).angles if args.n0 != 1 else np.zeros(1)
    N = n0.size << M
    out = {"statistic": args.statistic, "M": M, "r": r, "N": N, "n0": args.n0, "seed_base": args.seed}
    if args.statistic == "lambda":
        k = _int_list(args.k)
        est = rm.mc_lambda_product(k, M, args.samples, args.seed)
        out.update(k=k, expected=rm.expected_lambda_product(k, M))
    else:
        kern = _kernel(args, r - 1)
        distinct = args.statistic in ("Rstar", "Rstar2")
        power = 2 if args.statistic in ("R2", "Rstar2") else 1
        if N <= 64:
            vals = rm.mc_small_correlation(kern, r, M, args.samples, args.seed, n0, distinct)
            est = rm.MCEstimate.from_values(vals**power)
        else:
            fn = rm.R_r_star_random if distinct else rm.R_r_random
            est = rm.run_mc(lambda rr: fn(rr, n0, kern, r) ** power, M, args.samples, args.seed, args.threads)
        f0 = kern.fhat0()
        if args.statistic == "Rstar" and r == 2:
            out["expected"] = f0 * (1 - 1 / N)
        elif args.statistic == "Rstar":
            out["expected_limit"] = f0
        elif args.statistic == "Rstar2":
            out["expected_limit"] = f0**2
        elif args.statistic == "R" and (r == 2 or N <= 64):
            out["expected"] = rm.expected_R_r(kern, r, M, n0)
        out["kernel"] = kern.to_dict()
    out.update(est.to_dict())
    run.write_json("mc.json", out)


def family_cost(x: float, M: int) -> float:
    """Rough member count: x (log log x)^{M-1} / (4^{M-1} (M-1)! log x)."""
    ll = math.log(math.log(x))
    return x * ll ** (M - 1) / (4 ** (M - 1) * math.factorial(M - 1) * math.log(x))


def cmd_family(args, run: Run):
    from . import family as fam

    x = int(float(args.x))
    if args.M >= 4 or x > 10**9:
        raise Infeasible(
            f"family M = {args.M}, x = {x:.3g} is beyond desk scale "
            f"(about {family_cost(x, args.M):.3g} members)"
        )
    n0 = FactoredRadius.from_integer(args.n0)
    spec = fam.FamilySpec(x, args.M, n0)
    k = _int_list(args.k)
    table = fam.family_table(spec)
    rec = fam.lsd_compare(spec, k, P=int(float(args.prime_cutoff)), table=table)
    run.write_json("lsd.json", {"x": x, "M": args.M, "n0": args.n0, "k": k, **rec.to_dict()})
    if args.dump_terms:
        tab, rows = table
        per = fam.lambda_product_primes(tab.theta, k)
        vals = np.prod(per[rows], axis=1)
        ns = np.prod(tab.p[rows].astype(object), axis=1)
        body = "n,lambda_product\n" + "".join(f"{n},{v:.17g}\n" for n, v in zip(ns, vals))
        run.write_csv("terms.csv", body)


def cmd_cells(args, run: Run):
    from .subsets import cells_table, cells_to_json, enumerate_cells, lifted_cells

    cells = lifted_cells(args.r) if args.lifted else enumerate_cells(args.r)
    table = cells_table(args.r, cells)
    run.write("cells.txt", table)
    run.write("cells.json", cells_to_json(args.r, cells))
    sys.stdout.write(table)


def cmd_repulsion(args, run: Run):
    ps = _int_list(args.primes)
    cs = _int_list(args.coeffs)
    res = check_repulsion([split_prime(p) for p in ps], cs, _ctx(args))
    run.write_json("repulsion.json", {
        "primes": ps,
        "coeffs": cs,
        "lhs": str(res.lhs),
        "rhs": str(res.rhs),
        "ratio": float(res.lhs / res.rhs),
        "holds": res.holds,
        "nonzero": res.nonzero,
        "error_bound": res.error_bound,
        "precision_bits": args.precision_bits,
    })


# ---- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--precision-bits", type=int, default=None,
                        help="working precision (default 64; 256 for repulsion)")
    common.add_argument("--out", default="out")
    common.add_argument("--config", help="TOML file of option defaults")
    common.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")

    p = argparse.ArgumentParser(prog="lattice-angles", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-circle", parents=[common], help="angles of a radius and window extracts")
    add_radius_options(s)
    s.add_argument("--center", type=float, default=WINDOW_CENTER)
    s.add_argument("--widths", help="comma-separated window widths in units of pi/2")
    s.set_defaults(func=cmd_gen_circle)

    s = sub.add_parser("spacing", parents=[common], help="spacing histogram and KS statistic")
    add_radius_options(s)
    s.add_argument("--angles", help="angle CSV written by gen-circle")
    s.add_argument("--equally-spaced", type=int, metavar="N")
    s.add_argument("--mode", choices=["open", "wrapped"], default="open")
    s.add_argument("--normalization", choices=["mean", "literal"], default="mean")
    s.add_argument("--bins", type=int, default=50)
    s.add_argument("--upper", type=float, default=5.0)
    s.set_defaults(func=cmd_spacing)

    s = sub.add_parser("correlate", parents=[common], help="smoothed r-level correlation of a radius")
    add_radius_options(s)
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--kernel", choices=["gaussian", "fejer", "fejer_product"], default="gaussian")
    s.add_argument("--width", type=float, default=1.0)
    s.add_argument("--method", choices=["direct", "fourier", "distinct"], default="direct")
    s.add_argument("--k-cutoff", type=int)
    s.set_defaults(func=cmd_correlate)

    s = sub.add_parser("random-model", parents=[common], help="Monte Carlo moments of the random model")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--samples", type=int, default=10000)
    s.add_argument("--statistic", choices=["lambda", "R", "R2", "Rstar", "Rstar2"], default="Rstar")
    s.add_argument("--k", default="1", help="k-vector for --statistic lambda")
    s.add_argument("--n0", type=int, default=1)
    s.add_argument("--kernel", choices=["gaussian", "fejer", "fejer_product"], default="gaussian")
    s.add_argument("--width", type=float, default=1.0)
    s.set_defaults(func=cmd_random_model)

    s = sub.add_parser("family", parents=[common], help="family average against the LSD prediction")
    s.add_argument("--x", default="1e7")
    s.add_argument("--M", type=int, default=2)
    s.add_argument("--k", default="1")
    s.add_argument("--n0", type=int, default=1)
    s.add_argument("--prime-cutoff", default="1e6")
    s.add_argument("--dump-terms", action="store_true")
    s.set_defaults(func=cmd_family)

    s = sub.add_parser("cells", parents=[common], help="cell decomposition table")
    s.add_argument("--r", type=int, default=3)
    s.add_argument("--lifted", action="store_true", help="cells of Z^{2r-1} with k_r = 0")
    s.set_defaults(func=cmd_cells)

    s = sub.add_parser("repulsion", parents=[common], help="check the angle repulsion bound")
    s.add_argument("--primes", required=True)
    s.add_argument("--coeffs", required=True)
    s.set_defaults(func=cmd_repulsion)
    return p


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        with open(known.config, "rb") as fh:
            conf = {k.replace("-", "_"): v for k, v in tomllib.load(fh).items()}
        command = next((t for t in argv if not t.startswith("-")), None)
        subs = parser._subparsers._group_actions[0].choices
        if command not in subs:
            parser.error("a subcommand must precede the options")
        sub = subs[command]
        known_dests = {a.dest for a in sub._actions}
        unknown = set(conf) - known_dests
        if unknown:
            parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
        # flags on the command line still win over the file
        sub.set_defaults(**conf)
        for action in sub._actions:
            if action.dest in conf:
                action.required = False
    args = parser.parse_args(argv)
    if args.precision_bits is None:
        args.precision_bits = 256 if args.command == "repulsion" else 64
    if args.threads is None:
        import os

        args.threads = os.cpu_count() or 1
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    run = Run(args)
    try:
        args.func(args, run)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LatticeAnglesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code != 1 else 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run.finish()
    return 0


if __name__ == "__main__":
    sys.exit(main())
