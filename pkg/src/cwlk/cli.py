"""Command line interface: ``cwlk <subcommand> [options]``.

Exit codes (stable):
    0  success
    1  malformed graph or manifest file (ParseError)
    2  graph fails validation (ValidationError)
    3  training set holds a single class
    4  bad usage or configuration
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import VOCAB_FORMAT, __version__
from .bench import feature_growth, run_bench, run_scaling, summary, write_gnuplot
from .classifier import REG_GRID, Hyperparams, SingleClassTraining
from .graph import ParseError, ValidationError, load_corpus, load_graph, load_manifest
from .kernel import export_vectors, featurize_corpus, gram, KernelMatrix
from .pipeline import run_pipeline
from .relabel import MODES, dump_lines, relabel
from .synth import ConfigError, SynthConfig, generate_corpus, write_corpus

EXIT_PARSE, EXIT_VALIDATION, EXIT_SINGLE_CLASS, EXIT_USAGE = 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _height(text: str) -> int:
    h = int(text)
    if not 0 <= h <= 5:
        raise argparse.ArgumentTypeError("h must be in 0..5")
    return h


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _pair(text: str) -> tuple[int, int]:
    lo, hi = _int_list(text)
    return lo, hi


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    p.add_argument("--h", type=_height, default=2, help="kernel height 0..5 (default 2)")
    p.add_argument("--mode", choices=MODES, default="contextual")
    p.add_argument("--out", default="out", help="output directory ('-' = stdout where supported)")
    p.add_argument("--config", help="JSON file of option defaults; flags win")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--default-context", action="store_true",
                   help="give nodes without contexts the context 'default'")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="cwlk", description="Contextual Weisfeiler-Lehman graph kernels")
    parser.add_argument(
        "--version", action="version",
        version=f"cwlk {__version__} (vocab format {VOCAB_FORMAT})",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    subs = {}

    p = sub.add_parser("relabel", parents=[common], help="dump per-iteration raw labels of a graph")
    p.add_argument("graph")
    subs["relabel"] = p

    p = sub.add_parser("synth", parents=[common], help="generate a planted-motif corpus")
    p.add_argument("--n-per-class", dest="n_per_class", type=int, default=300)
    p.add_argument("--nodes", dest="node_count_range", type=_pair, default=(50, 150),
                   help="MIN,MAX node count")
    p.add_argument("--edge-factor", dest="edge_factor", type=float, default=2.1)
    p.add_argument("--noise", dest="noise_context_flip_prob", type=float, default=0.1)
    p.add_argument("--full-scale", "--paper-scale", dest="full_scale", action="store_true",
                   help="node/edge counts at real call-graph scale (slow)")
    subs["synth"] = p

    p = sub.add_parser("kernel", parents=[common], help="kernel matrix of a manifest's graphs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--normalize", action="store_true", help="cosine-normalise the matrix")
    subs["kernel"] = p

    p = sub.add_parser("pipeline", parents=[common], help="split, train, evaluate")
    p.add_argument("--manifest", required=True)
    p.add_argument("--repeat", type=int, default=1, help="number of seeded re-splits")
    p.add_argument("--reg", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--no-grid", action="store_true", help="use --reg instead of CV selection")
    p.add_argument("--train-fraction", dest="train_fraction", type=float,
                   help="override the manifest's train fraction")
    subs["pipeline"] = p

    p = sub.add_parser("bench", parents=[common], help="runtime scaling and feature growth")
    p.add_argument("--edges", type=_int_list, default=[1000, 2000, 4000])
    p.add_argument("--seeds", type=_int_list, default=[1, 2, 3])
    p.add_argument("--edge-factor", dest="edge_factor", type=float, default=2.1)
    p.add_argument("--manifest", help="corpus for feature growth and stage timings")
    p.add_argument("--heights", type=_int_list, default=[0, 1, 2])
    p.add_argument("--h-max", dest="h_max", type=_height, default=5)
    subs["bench"] = p
    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            parser.exit(EXIT_USAGE, f"cwlk: cannot read config: {exc}\n")
        if not isinstance(defaults, dict):
            parser.exit(EXIT_USAGE, "cwlk: config must be a JSON object\n")
        subs[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
        args = parser.parse_args(argv)
    return args


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def cmd_relabel(args) -> int:
    g = load_graph(args.graph, default_context=args.default_context)
    text = "\n".join(dump_lines(relabel(g, args.h, args.mode), args.mode)) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        target = _out_dir(args) / f"{Path(args.graph).stem}.relabel.txt"
        target.write_text(text, encoding="utf-8")
        print(target)
    return 0


def synth_config(args) -> SynthConfig:
    known = set(SynthConfig.__dataclass_fields__)
    cfg = SynthConfig.from_dict({k: v for k, v in vars(args).items() if k in known})
    return cfg.full_scale() if args.full_scale else cfg


def cmd_synth(args) -> int:
    graphs, manifest = generate_corpus(synth_config(args))
    print(write_corpus(graphs, manifest, _out_dir(args)))
    return 0


def _corpus(args):
    manifest = load_manifest(args.manifest)
    return manifest, load_corpus(manifest, args.default_context, max(1, args.threads))


def cmd_kernel(args) -> int:
    _, graphs = _corpus(args)
    vectors, vocab = featurize_corpus(graphs, args.h, args.mode)
    km = KernelMatrix(gram(vectors, len(vocab), args.normalize), [g.name for g in graphs])
    out = _out_dir(args)
    km.to_csv(out / "kernel.csv")
    export_vectors(vectors, out / "features.txt")
    _write_json(out / "vocab.json", vocab.to_dict())
    print(out / "kernel.csv")
    return 0


def cmd_pipeline(args) -> int:
    manifest, graphs = _corpus(args)
    graphs = [g for g in graphs if g.class_tag in ("malicious", "benign")]
    hp = Hyperparams(args.reg, args.epochs, args.seed)
    fraction = args.train_fraction or manifest.fraction
    result = run_pipeline(
        graphs, args.h, args.mode, hp, fraction, manifest.split_seed,
        repeat=args.repeat, grid=None if args.no_grid else REG_GRID, folds=args.folds,
    )
    out = _out_dir(args)
    first = result.runs[0]
    _write_json(out / "model.json", first.model.to_dict())
    _write_json(out / "vocab.json", first.vocab.to_dict())
    _write_json(out / "report.json", result.report_dict())
    mean = result.mean()
    print(f"P={mean['precision']:.4f} R={mean['recall']:.4f} F={mean['f_measure']:.4f}")
    return 0


def cmd_bench(args) -> int:
    out = _out_dir(args)
    scaling = run_scaling(args.seeds, args.edges, args.h, args.edge_factor, args.mode)
    (out / "scaling.csv").write_text(scaling.to_csv(), encoding="utf-8")
    growth = report = None
    if args.manifest:
        _, graphs = _corpus(args)
        growth = feature_growth(graphs, args.h_max)
        (out / "feature_growth.csv").write_text(
            "h,wl,contextual\n" + "".join(f"{h},{a},{b}\n" for h, a, b in growth),
            encoding="utf-8",
        )
        write_gnuplot(growth, out / "feature_growth.dat")
        labelled = [g for g in graphs if g.class_tag in ("malicious", "benign")]
        report = run_bench(labelled, args.heights, split_seed=args.seed)
        (out / "bench.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "bench.json").write_text(summary(scaling, growth, report) + "\n", encoding="utf-8")
    print(out / "scaling.csv")
    return 0


COMMANDS = {
    "relabel": cmd_relabel,
    "synth": cmd_synth,
    "kernel": cmd_kernel,
    "pipeline": cmd_pipeline,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"cwlk: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"cwlk: invalid graph: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SingleClassTraining as exc:
        print(f"cwlk: {exc}", file=sys.stderr)
        return EXIT_SINGLE_CLASS
    except (ConfigError, ValueError, OSError) as exc:
        print(f"cwlk: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
