"""
Command-line dispatcher for UVDS.

Every subcommand maps onto a command class in `uvds.commands`. The JSON
status dict of the command is printed on stdout; logs go to stderr.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from uvds import __version__
from uvds.commands import COMMANDS
from uvds.exceptions import InputValidationError, NumericalError, UVDSError
from uvds.logger import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--lambda", dest="lambda_", type=float, help="graph regularizer weight")
    g.add_argument("--beta", type=float, help="diffusion regularizer weight")
    g.add_argument("--gamma", type=float, help="centering penalty weight")
    g.add_argument("--alpha", type=float, help="attribute reconstruction weight")
    g.add_argument("--k", type=int, help="k-nn graph size")
    g.add_argument("--iters", type=int, help="outer iterations")
    g.add_argument("--q-max-iters", type=int)
    g.add_argument("--q-tol", type=float)
    g.add_argument("--tau-init", type=float)
    g.add_argument("--early-stop-tol", type=float, help="0 disables early stopping")
    g.add_argument("--seed", type=int)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--normalize-attributes", action="store_true",
                   help="z-score attributes with the seen-class statistics")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uvds", description="Unseen visual data synthesis for zero-shot recognition")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="overrides UVDS_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write a synthetic dataset directory")
    p.add_argument("--out", required=True)
    p.add_argument("--seen-classes", dest="n_seen_classes", type=int)
    p.add_argument("--unseen-classes", dest="n_unseen_classes", type=int)
    p.add_argument("--per-class", type=int)
    p.add_argument("--features", dest="n_features", type=int)
    p.add_argument("--attributes", dest="n_attributes", type=int)
    p.add_argument("--noise", dest="noise_sigma", type=float)
    p.add_argument("--spectrum-decay", type=float)
    p.add_argument("--attribute-level", choices=["class", "image"])
    p.add_argument("--attribute-noise", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("train", help="fit the embedding and write a model file")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--model-out", required=True)
    p.add_argument("--dump-graph", dest="dump_graph_path", help="write the averaged graph W as CSV")

    p = sub.add_parser("synth", help="synthesize features for an attribute CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--attributes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--centered", action="store_true", help="do not add the training feature mean back")

    p = sub.add_parser("eval", help="zero-shot recognition of the unseen classes")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--classifier", choices=["nn", "svm"], default="nn")
    p.add_argument("--mode", choices=["ca", "mf", "sample"], default="ca")
    p.add_argument("--report-out")
    p.add_argument("--predictions-out")
    p.add_argument("--svm-c", type=float, default=1.0)
    p.add_argument("--svm-iters", type=int, default=500)
    p.add_argument("--retrieval-k", type=int, default=10)

    p = sub.add_parser("cv", help="cross-validate lambda and beta on seen classes")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--grid-lambda", type=float_list)
    p.add_argument("--grid-beta", type=float_list)
    p.add_argument("--repeats", type=int, help="hold-out repeats (default UVDS_CV_REPEATS)")
    p.add_argument("--validation-fraction", type=float, default=0.5)
    p.add_argument("--workers", type=int, help="parallel grid cells (default UVDS_MAX_WORKERS)")
    p.add_argument("--report-out")

    p = sub.add_parser("ablate", help="compare the regularizer variants")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--validation-fraction", type=float, default=0.5)
    p.add_argument("--baseline-ridge", type=float, default=1e-3)
    p.add_argument("--svm-c", type=float, default=1.0)
    p.add_argument("--svm-iters", type=int, default=500)
    p.add_argument("--report-out")

    p = sub.add_parser(
        "diag-variance",
        help="per-dimension variance profile of synthesized features",
        description="Without --beta the with-DR fit uses a beta large enough to dominate every dimension.",
    )
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--csv-out")
    p.add_argument("--top-fraction", type=float, default=0.1)
    p.add_argument("--report-out")

    return parser


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def emit(payload: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, default=_to_builtin) + "\n")
    sys.stdout.flush()


def _error_payload(e: UVDSError) -> Dict[str, Any]:
    return {"status": "error", "error_type": e.error_type, "message": e.message, "details": e.details}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    options = vars(args)
    name = options.pop("command")
    options.pop("log_level")
    logger.info(f"Running {name}")

    try:
        result = COMMANDS[name]().execute(**options)
    except InputValidationError as e:
        logger.error(f"Invalid input for {name}: {e.message}")
        emit(_error_payload(e))
        return EXIT_INVALID
    except NumericalError as e:
        logger.error(f"Numerical failure in {name}: {e.message}")
        emit(_error_payload(e))
        return EXIT_NUMERICAL

    emit(result)
    logger.info(f"{name} finished")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
