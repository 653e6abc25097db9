"""Command-line entry point.

Exit codes: 0 success, 1 user or configuration error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback

from . import __version__
from .config import EXPLAINERS, DEFAULTS, dumps_config, load_config
from .errors import LcExplainError
from .pipeline import cmd_casestudy, cmd_explain, cmd_train

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class UsageError(LcExplainError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for internal errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; missing keys take their defaults")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--seed", type=int, help="root seed (overrides the config)")
    p.add_argument("--csv", help="read data from this CSV instead of generating it")
    p.add_argument("--schema", help="JSON schema for --csv")
    p.add_argument("--n", type=int, help="synthetic row count")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lcexplain", description="Explain tabular loss-cost models.")
    parser.add_argument("--version", action="version", version=f"lcexplain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model and write model.json + train_log.json")
    _add_common(p)
    p.add_argument("--model", choices=("glm", "tree", "nn"), help="model type")
    p.add_argument("--max-epochs", type=int, help="neural network epoch limit")

    p = sub.add_parser("explain", help="run one explainer against a saved model")
    _add_common(p)
    p.add_argument("which", help=f"one of: {', '.join(EXPLAINERS)}")
    p.add_argument("--model-file", help="model file (default: <out>/model.json)")
    p.add_argument("--eval-split", choices=("test", "all", "analysis", "assessment"))
    p.add_argument("--feature", action="append", help="feature for pdp/ice/ale (repeatable)")
    p.add_argument("--instance", type=int, action="append", help="row index of the evaluation data (repeatable)")
    p.add_argument("--instance-row", action="append",
                   help='explicit instance as JSON, e.g. \'{"a": 1, "b": 1}\' (repeatable)')
    p.add_argument("--ordering", help="breakdown ordering: schema, greedy, or comma-separated feature names")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="shap: enumerate all orderings")
    g.add_argument("--sampled", action="store_true", help="shap: sample orderings (default)")
    p.add_argument("--M", type=int, help="shap: number of sampled orderings")
    p.add_argument("--B", type=int, help="importance: permutation repetitions")

    p = sub.add_parser("casestudy", help="generate, train and run every explainer")
    _add_common(p)

    p = sub.add_parser("print-config", help="print the fully defaulted configuration")
    p.add_argument("--config", help="merge this file over the defaults before printing")
    return parser


def _overrides(args) -> dict:
    o: dict = {}

    def put(path: str, value):
        node = o
        keys = path.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value

    if getattr(args, "seed", None) is not None:
        put("seed", args.seed)
    if getattr(args, "csv", None) or getattr(args, "schema", None):
        put("data.source", "csv")
        put("data.csv", args.csv)
        put("data.schema", args.schema)
    if getattr(args, "n", None) is not None:
        put("data.n", args.n)
    if getattr(args, "model", None):
        put("model.type", args.model)
    if getattr(args, "max_epochs", None) is not None:
        put("model.nn.max_epochs", args.max_epochs)
    if args.command == "explain":
        if args.eval_split:
            put("explain.eval_split", args.eval_split)
        if args.feature:
            for which in ("pdp", "ice", "ale"):
                put(f"explain.{which}.features", args.feature)
        if args.instance is not None or args.instance_row:
            rows = []
            for raw in args.instance_row or []:
                try:
                    rows.append(json.loads(raw))
                except json.JSONDecodeError as exc:
                    raise UsageError(f"--instance-row is not valid JSON: {exc}") from None
            for which in ("breakdown", "shap"):
                put(f"explain.{which}.instances", args.instance or [])
                put(f"explain.{which}.instance_rows", rows)
        if args.ordering:
            ordering = args.ordering if args.ordering in ("schema", "greedy") else args.ordering.split(",")
            put("explain.breakdown.ordering", ordering)
        if args.exact:
            put("explain.shap.method", "exact")
        elif args.sampled:
            put("explain.shap.method", "sampled")
        if args.M is not None:
            put("explain.shap.M", args.M)
        if args.B is not None:
            put("explain.importance.B", args.B)
    return o


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    if args.command == "print-config":
        cfg = load_config(args.config) if args.config else DEFAULTS
        sys.stdout.write(dumps_config(cfg))
        return EXIT_OK
    cfg = load_config(args.config, _overrides(args))
    if args.command == "train":
        paths = cmd_train(cfg, args.out)
    elif args.command == "explain":
        model_file = args.model_file or f"{args.out}/model.json"
        paths = cmd_explain(cfg, model_file, args.which, args.out)
    else:
        manifest = cmd_casestudy(cfg, args.out)
        paths = sorted(manifest["files"])
    for p in paths:
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (LcExplainError, ValueError, KeyError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
        print(f"lcexplain: error: {msg}", file=sys.stderr)
        return EXIT_USER
    except Exception as exc:
        traceback.print_exc(file=sys.stderr)
        print(f"lcexplain: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
