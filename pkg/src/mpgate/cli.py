"""Command-line entry point: simulate, fit, classify, plot, baseline, compare."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import files
from .baselines import gmm_classify, gmm_em_fit, mp_prior_classify
from .classify import accuracy
from .export import export_tree, render_posterior_cuts, with_gaussians
from .inference import MCMCConfig
from .pipeline import compare_methods, mp_gmm_classify, posterior_labels
from .priors import Hyperparameters, example_table
from .synthetic import SyntheticSpec, generate_synthetic

PROG = "mpgate"
GLOBAL_DEFAULTS = {"seed": 0, "config": None, "threads": 1}


class CLIError(Exception):
    pass


# ------------------------------------------------------------ config file


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use - or _."""
    out = {}
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError(f"{p}, line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _convert(action: argparse.Action, key: str, value: str, path):
    if isinstance(action, argparse._StoreTrueAction):
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise CLIError(f"{path}: {key} expects true or false, got {value!r}")
        return value.lower() in ("true", "1", "yes")
    try:
        converted = action.type(value) if action.type else value
    except (TypeError, ValueError) as exc:
        raise CLIError(f"{path}: bad value for {key}: {value!r}") from exc
    return [converted] if isinstance(action, argparse._AppendAction) else converted


def _apply_config(sub: argparse.ArgumentParser, config: dict[str, str], path) -> dict:
    """Install config values as subcommand defaults; return the global ones separately."""
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults, global_values = {}, {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None:
            raise CLIError(f"{path}: unknown key {key!r} for this command")
        target = global_values if key in GLOBAL_DEFAULTS else defaults
        target[key] = _convert(action, key, value, path)
    sub.set_defaults(**defaults)
    return global_values


# ------------------------------------------------------------ parser


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand.
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    p.add_argument("--config", default=argparse.SUPPRESS, help="key = value file; flags override it")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker processes for MCMC chains (default 1)")
    return p


def _hyper_flags(p):
    g = p.add_argument_group("prior hyperparameters")
    d = Hyperparameters()
    g.add_argument("--gamma0", type=float, default=d.gamma0, help="weight of fully informative markers")
    g.add_argument("--gamma1", type=float, default=d.gamma1, help="weight of one-sided markers")
    g.add_argument("--phi0", type=float, default=d.phi0, help="larger Beta shape")
    g.add_argument("--phi1", type=float, default=d.phi1, help="smaller Beta shape")
    g.add_argument("--budget", type=float, default=d.budget, help="Mondrian lifetime")


def _mcmc_flags(p):
    g = p.add_argument_group("MCMC")
    d = MCMCConfig()
    g.add_argument("--chains", type=int, default=d.n_chains)
    g.add_argument("--iterations", type=int, default=d.iterations)
    g.add_argument("--step-size", type=float, default=d.step_size, help="sd of the cut-position move")
    g.add_argument("--trace-every", type=int, default=d.trace_every)
    g.add_argument("--debug", action="store_true", help="recheck cached densities every 100 steps")


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog=PROG, parents=[common],
                                     description="Cell-type gating with prior-informed Mondrian trees.")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = subs.add_parser("simulate", parents=[common], help="generate a synthetic data set")
    p.add_argument("--table", help="prior table CSV (default: built-in three-type example)")
    p.add_argument("--n-cells", type=int, default=3000)
    p.add_argument("--separation", type=float, default=2.0, help="cluster separation multiplier")
    p.add_argument("--out", required=True, help="output directory")
    _hyper_flags(p)

    p = subs.add_parser("fit", parents=[common], help="run MP-GMM inference and label cells")
    p.add_argument("--cells", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot-dims", action="append", default=None, metavar="M1,M2",
                   help="also write a posterior-cut SVG for this marker pair (repeatable)")
    p.add_argument("--per-sample-labels", action="store_true")
    _hyper_flags(p)
    _mcmc_flags(p)

    p = subs.add_parser("classify", parents=[common], help="label cells with a saved posterior")
    p.add_argument("--posterior", required=True)
    p.add_argument("--cells", required=True)
    p.add_argument("--out", required=True, help="labels CSV path")
    p.add_argument("--per-sample-labels", action="store_true")

    p = subs.add_parser("plot", parents=[common], help="draw posterior cuts over a scatter of cells")
    p.add_argument("--posterior", required=True)
    p.add_argument("--cells", required=True)
    p.add_argument("--dims", required=True, metavar="M1,M2", help="two marker names or 0-based indices")
    p.add_argument("--out", required=True, help="SVG path")

    for name, text in (("baseline", "accuracy of GMM and MP-Prior"),
                       ("compare", "accuracy of MP-GMM, GMM and MP-Prior")):
        p = subs.add_parser(name, parents=[common], help=text)
        p.add_argument("--cells", required=True)
        p.add_argument("--table", required=True)
        p.add_argument("--truth", required=True, help="labels CSV with a 'label' column")
        p.add_argument("--out", required=True, help="output directory for accuracy.csv/.txt")
        p.add_argument("--components", type=int, default=None, help="GMM components (default: table rows)")
        if name == "compare":
            p.add_argument("--labels", help="MP-GMM labels from a previous fit; otherwise fit now")
        _hyper_flags(p)
        _mcmc_flags(p)
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = getattr(args, "config", None)
    from_config = {}
    if config is not None:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        from_config = _apply_config(sub, read_config(config), config)
        args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, from_config.get(key, value))
    if args.threads < 1:
        raise CLIError("--threads must be >= 1")
    return args


def _hyper(args) -> Hyperparameters:
    return Hyperparameters(args.gamma0, args.gamma1, args.phi0, args.phi1, args.budget)


def _mcmc(args) -> MCMCConfig:
    return MCMCConfig(args.chains, args.iterations, args.step_size, args.seed, args.trace_every, args.debug)


def _dims(text: str):
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 2:
        raise CLIError(f"expected two comma-separated markers, got {text!r}")
    return tuple(int(s) if s.isdigit() else s for s in parts)


# ------------------------------------------------------------ commands


def cmd_simulate(args):
    table = files.read_table(args.table) if args.table else example_table()
    spec = SyntheticSpec(table, _hyper(args), args.n_cells, args.separation, args.seed)
    data, truth, tree = generate_synthetic(spec)
    out = Path(args.out)
    files.write_cells(out / "cells.csv", data)
    files.write_labels(out / "truth.csv", truth)
    files.write_table(out / "table.csv", table)
    (out / "generating_tree.json").write_text(export_tree(tree, "json"), encoding="utf-8")
    (out / "generating_tree.dot").write_text(export_tree(tree, "dot"), encoding="utf-8")


def _write_chain_summary(path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "initial_log_lik", "log_prior", "log_lik", "log_posterior", "acceptance_rate", "n_cuts"])
        for chain, trace in zip(result.samples, result.traces):
            values = (trace[0, 2], chain.log_prior, chain.log_lik, chain.log_posterior, chain.acceptance_rate)
            w.writerow([chain.index, *(repr(float(v)) for v in values), chain.tree.n_cuts])


def cmd_fit(args):
    table = files.read_table(args.table)
    data = files.read_cells(args.cells).aligned_to(table)
    hyper = _hyper(args)
    labels, result = mp_gmm_classify(data, table, hyper, _mcmc(args), workers=args.threads)
    out = Path(args.out)
    files.write_labels(out / "labels.csv", labels.labels, labels.fractions,
                       labels.per_sample if args.per_sample_labels else None)
    files.write_trace(out / "trace.csv", result)
    _write_chain_summary(out / "chains.csv", result)
    files.write_posterior(out / "posterior.json", result, hyper)
    best = result.map_sample()
    map_tree = with_gaussians(best.tree, best.params)
    (out / "map_tree.json").write_text(export_tree(map_tree, "json"), encoding="utf-8")
    (out / "map_tree.dot").write_text(export_tree(map_tree, "dot"), encoding="utf-8")
    for text in args.plot_dims or []:
        dims = _dims(text)
        svg = render_posterior_cuts(result.trees, data, dims)
        (out / f"posterior_cuts_{dims[0]}_{dims[1]}.svg").write_text(svg, encoding="utf-8")


def cmd_classify(args):
    result, _ = files.read_posterior(args.posterior)
    if not result.samples:
        raise CLIError(f"{args.posterior}: no posterior samples")
    data = files.read_cells(args.cells).aligned_to(result.samples[0].tree.table)
    labels = posterior_labels(result, data)
    files.write_labels(args.out, labels.labels, labels.fractions,
                       labels.per_sample if args.per_sample_labels else None)


def cmd_plot(args):
    result, _ = files.read_posterior(args.posterior)
    if not result.samples:
        raise CLIError(f"{args.posterior}: no posterior samples")
    data = files.read_cells(args.cells).aligned_to(result.samples[0].tree.table)
    svg = render_posterior_cuts(result.trees, data, _dims(args.dims))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, encoding="utf-8")


def _load_labelled(args):
    table = files.read_table(args.table)
    data = files.read_cells(args.cells).aligned_to(table)
    truth = files.read_labels(args.truth)
    if len(truth) != data.n_cells:
        raise CLIError(f"{args.truth}: {len(truth)} labels for {data.n_cells} cells")
    return table, data, truth


def cmd_baseline(args):
    table, data, truth = _load_labelled(args)
    hyper, config = _hyper(args), _mcmc(args)
    components = gmm_em_fit(data, args.components or table.n_types, seed=args.seed)
    rows = [
        ("GMM", accuracy(gmm_classify(components, data, table), truth)),
        ("MP-Prior", accuracy(mp_prior_classify(data, table, hyper, config.n_chains, seed=args.seed), truth)),
    ]
    files.write_accuracy_table(Path(args.out) / "accuracy", rows)


def cmd_compare(args):
    table, data, truth = _load_labelled(args)
    mp_labels = None
    if args.labels:
        mp_labels = files.read_labels(args.labels)
        if len(mp_labels) != data.n_cells:
            raise CLIError(f"{args.labels}: {len(mp_labels)} labels for {data.n_cells} cells")
    rows = compare_methods(data, truth, table, _hyper(args), _mcmc(args), mp_labels,
                           args.components, workers=args.threads)
    _, txt = files.write_accuracy_table(Path(args.out) / "accuracy", rows)
    print(txt.read_text(encoding="utf-8"), end="")


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "classify": cmd_classify,
    "plot": cmd_plot,
    "baseline": cmd_baseline,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (CLIError, OSError, ValueError, RuntimeError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"{PROG}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
