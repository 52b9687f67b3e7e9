"""Command-line interface.

Exit status: 0 success, 1 usage error, 2 data error, 3 solver did not
converge (outputs are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import __version__
from .admm_solver import SolverConfig
from .evaluation import (
    BoundInputs,
    bound_value,
    correct_curve,
    default_release_k,
    ks_from_fractions,
    release_eval,
)
from .graph_data import (
    EdgeListError,
    Network,
    ObservationMask,
    SamplingSpec,
    generate_power_law,
    load_edge_list,
    load_labeled_edge_list,
    load_mask,
    sample_observations,
    sampling_report,
    save_edge_list,
    write_id_map,
)
from .pipeline import (
    METHODS,
    HyperGrid,
    Hyperparameters,
    PredictionSet,
    cross_validate,
    max_predictions,
    run_method,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _header(args) -> list[str]:
    """Comment lines recording every option of the run."""
    lines = [f"degreeprior {__version__} {args.command}"]
    for key in sorted(vars(args)):
        if key in ("command", "handler"):
            continue
        lines.append(f"{key}={_fmt(getattr(args, key))}")
    return lines


def _write_lines(path, header, lines) -> None:
    with open(path, "w") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for line in lines:
            fh.write(f"{line}\n")


def _read_network(path, labeled=False, labels=None):
    try:
        if labeled:
            return load_labeled_edge_list(path, labels)
        return load_edge_list(path), None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except EdgeListError as exc:
        raise DataError(f"{path}: {exc}") from None


def _read_mask(path) -> ObservationMask:
    try:
        return load_mask(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except EdgeListError as exc:
        raise DataError(f"{path}: {exc}") from None


def _budget(args, mask: ObservationMask) -> int:
    limit = max_predictions(mask)
    if args.k is not None:
        K = args.k
    elif args.k_fraction is not None:
        K = int(args.k_fraction * mask.p * (mask.p - 1) // 2)
    else:
        raise UsageError("one of --k or --k-fraction is required")
    if not 1 <= K <= limit:
        raise UsageError(f"K={K} is outside [1, {limit}]; only {limit} unobserved pairs are available")
    return K


def _solver(args) -> SolverConfig:
    base = SolverConfig()
    return replace(
        base,
        rank=args.rank,
        eta=args.eta,
        outer_iters=args.outer_iters,
    )


def _hyper(args) -> Hyperparameters:
    return Hyperparameters(rho=args.rho, lam=args.lam, c=args.c, alpha=args.alpha)


# -- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    try:
        net = generate_power_law(args.p, args.m, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_edge_list(args.out, net, _header(args))
    return EXIT_OK


def cmd_sample(args) -> int:
    net, _ = _read_network(args.input)
    rate_nonhub = args.rate_hub if args.rate_nonhub is None else args.rate_nonhub
    try:
        spec = SamplingSpec(args.mode, args.rate_hub, rate_nonhub, args.hub_fraction, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mask = sample_observations(net, spec)
    header = _header(args)
    save_edge_list(args.out, mask, header)
    report = sampling_report(net, mask, spec.hub_fraction)
    lines = [f"{key}={report[key]}" for key in ("n_hubs", "hub_kept", "hub_total", "nonhub_kept", "nonhub_total")]
    lines.append(f"observed={mask.n_observed}")
    lines.append(f"edges={net.n_edges}")
    _write_lines(args.report or f"{args.out}.report", header, lines)
    return EXIT_OK


def _write_predictions(path, header, pred: PredictionSet) -> None:
    lines = ["u\tv\tscore\trank"]
    lines += [f"{i}\t{j}\t{score!r}\t{r}" for r, (i, j, score) in enumerate(pred.pairs, start=1)]
    _write_lines(path, header, lines)


def cmd_infer(args) -> int:
    labels = None
    if args.labeled:
        net, labels = _read_network(args.mask, labeled=True)
        mask = ObservationMask(net.p, net.edges)
    else:
        mask = _read_mask(args.mask)
    K = _budget(args, mask)
    result = run_method(mask, K, args.method, _hyper(args), args.seed, args.n_edges, _solver(args))
    header = _header(args) + [
        f"converged={result.fit.converged}",
        f"iterations={result.fit.iterations}",
        f"primal_residual={result.fit.primal_residual!r}",
    ]
    _write_predictions(args.out, header, result.predictions)
    if labels is not None and args.id_map:
        write_id_map(args.id_map, labels)
    if not result.fit.converged:
        print(f"warning: solver stopped after {result.fit.iterations} iterations without converging", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


_GRID_KEYS = {"rho": "rho_values", "lambda": "lambda_values", "c": "c_values", "alpha": "alpha_values"}


def read_grid(path, holdout_fraction: float, n_seeds: int) -> HyperGrid:
    """Grid CSV: one line per parameter, ``name,v1,v2,...``; missing
    parameters keep the default values."""
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                name, *items = [t.strip() for t in line.split(",")]
                if name not in _GRID_KEYS:
                    raise DataError(f"{path}: line {lineno}: unknown parameter {name!r}")
                try:
                    values[_GRID_KEYS[name]] = tuple(float(v) for v in items if v)
                except ValueError:
                    raise DataError(f"{path}: line {lineno}: non-numeric value") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return HyperGrid(**values, holdout_fraction=holdout_fraction, n_seeds=n_seeds)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_cv(args) -> int:
    mask = _read_mask(args.mask)
    K = _budget(args, mask)
    if args.grid:
        grid = read_grid(args.grid, args.holdout, args.n_seeds)
    else:
        grid = HyperGrid(holdout_fraction=args.holdout, n_seeds=args.n_seeds)
    try:
        cv = cross_validate(mask, K, grid, args.method, args.seed, args.n_edges, _solver(args))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    header = _header(args)
    rows = ["rho,lambda,c,alpha,seed,score"]
    rows += [",".join(_fmt(v) for v in row) for row in cv.rows]
    _write_lines(args.out, header, rows)
    best = cv.best
    _write_lines(
        args.best or f"{args.out}.best",
        header,
        [f"rho={best.rho!r}", f"lambda={best.lam!r}", f"c={best.c!r}", f"alpha={best.alpha!r}",
         f"mean_score={cv.means[best]!r}"],
    )
    return EXIT_OK


def read_predictions(path) -> PredictionSet:
    pairs = []
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#") or line.startswith("u\t"):
                    continue
                tokens = line.split("\t")
                if len(tokens) != 4:
                    raise DataError(f"{path}: line {lineno}: expected u, v, score, rank")
                try:
                    pairs.append((int(tokens[0]), int(tokens[1]), float(tokens[2])))
                except ValueError:
                    raise DataError(f"{path}: line {lineno}: malformed prediction") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return PredictionSet(tuple(pairs))


def cmd_eval(args) -> int:
    pred = read_predictions(args.input)
    truth, _ = _read_network(args.truth)
    mask = _read_mask(args.mask)
    if truth.p != mask.p:
        raise DataError(f"truth has p={truth.p} but mask has p={mask.p}")
    if args.ks:
        ks = args.ks
    elif args.k_fractions:
        ks = ks_from_fractions(truth.p, args.k_fractions)
    else:
        ks = list(range(0, len(pred) + 1, max(1, len(pred) // 20)))
        if ks[-1] != len(pred):
            ks.append(len(pred))
    try:
        curve = correct_curve(pred, truth, mask, sorted(ks))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = ["k,fraction_of_pairs,correct"]
    lines += [f"{k},{f!r},{c}" for k, f, c in zip(curve.ks, curve.fractions, curve.correct)]
    _write_lines(args.out, _header(args), lines)
    return EXIT_OK


def cmd_releases(args) -> int:
    if args.labeled:
        old, labels = _read_network(args.input, labeled=True)
        new, labels = _read_network(args.truth, labeled=True, labels=labels)
    else:
        old, _ = _read_network(args.input)
        new, _ = _read_network(args.truth)
    mask = ObservationMask(old.p, old.edges)
    K = args.k if args.k is not None else default_release_k(old.p)
    if args.k_fraction is not None:
        K = int(args.k_fraction * old.p * (old.p - 1) // 2)
    limit = max_predictions(mask)
    if not 1 <= K <= limit:
        raise UsageError(f"K={K} is outside [1, {limit}]; only {limit} unobserved pairs are available")
    methods = args.methods or list(METHODS)
    status = EXIT_OK
    lines = []
    for method in methods:
        result = run_method(mask, K, method, _hyper(args), args.seed, args.n_edges, _solver(args))
        try:
            ratio = release_eval(old, new, result.predictions, K)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        lines.append(f"method={method} ratio={ratio!r} converged={result.fit.converged}")
        if not result.fit.converged:
            status = EXIT_NOT_CONVERGED
    if args.out:
        _write_lines(args.out, _header(args), lines)
    for line in lines:
        print(line)
    return status


def cmd_bound(args) -> int:
    try:
        inputs = BoundInputs(
            t=args.t, r=args.r, s=args.s, d_star_max=args.d_star_max, d_max=args.d_max,
            alpha=args.alpha, rho=args.rho, q=args.q, delta=args.delta, C_universal=args.C,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = bound_value(inputs)
    lines = [f"gamma={res.gamma!r}", f"A={res.A!r}", f"B={res.B!r}",
             f"min_AB={min(res.A, res.B)!r}", f"deviation={res.deviation!r}", f"bound={res.bound!r}"]
    if args.out:
        _write_lines(args.out, _header(args), lines)
    for line in lines:
        print(line)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _add_k(p, required=True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--k", type=int, help="number of predicted edges")
    group.add_argument("--k-fraction", type=float, help="predicted edges as a fraction of p(p-1)/2")


def _add_model(p, with_method=True):
    if with_method:
        p.add_argument("--method", choices=METHODS, default="tri_degree")
    p.add_argument("--rho", type=float, default=0.3, help="loss weight on unobserved pairs")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="prior strength")
    p.add_argument("--c", type=float, default=1.0, help="degree amplification factor")
    p.add_argument("--alpha", type=float, default=1.0, help="prior exponent")
    _add_solver(p)


def _add_solver(p):
    defaults = SolverConfig()
    p.add_argument("--rank", type=int, default=defaults.rank)
    p.add_argument("--eta", type=float, default=defaults.eta)
    p.add_argument("--outer-iters", type=int, default=defaults.outer_iters)
    p.add_argument("--n-edges", type=int, default=None,
                   help="total edge count for degree estimation (default: observed + K)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="degreeprior", description="Network completion with a degree prior.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="power-law graph")
    p.add_argument("--p", type=int, required=True, help="node count")
    p.add_argument("--m", type=int, default=3, help="edges per new node")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("sample", help="observe a subset of edges")
    p.add_argument("--input", required=True, help="network edge list")
    p.add_argument("--mode", choices=("uniform", "over", "under"), default="uniform")
    p.add_argument("--rate-hub", type=float, default=0.9)
    p.add_argument("--rate-nonhub", type=float, default=None, help="defaults to --rate-hub")
    p.add_argument("--hub-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="mask edge list")
    p.add_argument("--report", default=None, help="sampling report (default: <out>.report)")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("infer", help="predict unobserved edges")
    p.add_argument("--mask", "--input", dest="mask", required=True, help="observed edge list")
    p.add_argument("--labeled", action="store_true", help="node ids in the input are string labels")
    p.add_argument("--id-map", default=None, help="where to write the id-to-label map (with --labeled)")
    _add_k(p)
    _add_model(p)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("cv", help="cross-validate hyperparameters")
    p.add_argument("--mask", "--input", dest="mask", required=True)
    _add_k(p)
    p.add_argument("--method", choices=METHODS, default="tri_degree")
    p.add_argument("--grid", default=None, help="grid CSV, lines 'name,v1,v2,...'")
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--n-seeds", type=int, default=5)
    _add_solver(p)
    p.add_argument("--out", required=True, help="per-cell CSV")
    p.add_argument("--best", default=None, help="chosen hyperparameters (default: <out>.best)")
    p.set_defaults(handler=cmd_cv)

    p = sub.add_parser("eval", help="correct-edges curve for a prediction file")
    p.add_argument("--input", required=True, help="predictions TSV from infer")
    p.add_argument("--truth", required=True)
    p.add_argument("--mask", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ks", type=int, nargs="+")
    group.add_argument("--k-fractions", type=float, nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("releases", help="recover edges added in a newer release")
    p.add_argument("--input", "--old", dest="input", required=True, help="older release")
    p.add_argument("--truth", "--new", dest="truth", required=True, help="newer release")
    p.add_argument("--labeled", action="store_true")
    p.add_argument("--methods", nargs="+", choices=METHODS, default=None)
    _add_k(p, required=False)
    _add_model(p, with_method=False)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_releases)

    p = sub.add_parser("bound", help="recovery-error bound components")
    for name in ("t", "r", "s", "d-star-max", "d-max", "alpha", "rho", "q", "delta"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--C", type=float, default=1.0, help="universal constant (no known value)")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbose = args.verbose
    del args.verbose
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"degreeprior: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"degreeprior: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
