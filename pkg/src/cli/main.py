"""
sg-granger: inferencia debiased con sparse-group LASSO para series de tiempo.

Ejecutar:
    python src/cli/main.py fit      --data datos.csv --response y --out fit.json
    python src/cli/main.py granger  --data datos.csv --response y --test-group x1 --out granger.json
    python src/cli/main.py nodewise --data datos.csv --response y --out theta.json
    python src/cli/main.py simulate --config experimento.json --out tabla.csv
    python src/cli/main.py profile  --data datos.csv

Códigos de salida: 0 éxito, 2 configuración, 3 datos, 4 falla numérica.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add src directory to path to import the packages
sys.path.insert(0, str(Path(__file__).parent.parent))
from common import EXIT_CONFIG, ConfigError, DataError, SgGrangerError, error
from dataset.dataset_io import load_json

from cli.commands import COMMAND_HANDLERS
from cli.config import resolve_config


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with any of the options; flags override it")
    parser.add_argument("--out", help="output file")
    parser.add_argument("--quiet", action="store_true", help="suppress non-error output")


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="CSV with a header row (and optionally a date column)")
    parser.add_argument("--response", help="response column")
    parser.add_argument("--columns", nargs="+", help="covariate columns (default: every other column)")
    parser.add_argument("--groups", help="JSON sidecar mapping group name -> list of series")
    parser.add_argument("--date-column", dest="date_column", help="date column name (default: date)")
    parser.add_argument("--alpha", type=float, help="l1 / group mix in [0, 1]")
    parser.add_argument("--lambda", dest="lam", type=float, help="fixed lambda (skips cross-validation)")
    parser.add_argument("--folds", type=int, help="blocked CV folds (default: 10)")
    parser.add_argument("--seed", type=int,
                        help="recorded in the report only; fit, granger and nodewise are deterministic")
    parser.add_argument("--horizon", type=int, help="forecast horizon h: response is y_{t+h}")
    parser.add_argument("--ar-lags", dest="ar_lags", type=int, help="autoregressive lags of the response")
    parser.add_argument("--covariate-lags", dest="covariate_lags", type=int, help="lags per covariate (default: 1)")
    parser.add_argument("--covariate-legendre", dest="covariate_legendre", action="store_const", const=True,
                        help="aggregate covariate lags with the Legendre dictionary")
    parser.add_argument("--hf-data", dest="hf_data", help="high-frequency CSV")
    parser.add_argument("--hf-column", dest="hf_column", help="high-frequency series")
    parser.add_argument("--hf-date-column", dest="hf_date_column")
    parser.add_argument("--hf-lags", dest="hf_lags", type=int, help="high-frequency lags per period (default: 22)")
    parser.add_argument("--legendre-degree", dest="legendre_degree", type=int, help="dictionary degree (default: 3)")
    parser.add_argument("--no-standardize", dest="standardize", action="store_const", const=False,
                        help="use the covariates as given")
    parser.add_argument("--group-weights", dest="group_weights", choices=["none", "sqrt_size"])
    parser.add_argument("--workers", type=int, help="threads for nodewise rows")


def build_parser() -> argparse.ArgumentParser:
    """Parser con defaults suprimidos: solo los flags dados aparecen en el namespace."""
    parser = argparse.ArgumentParser(
        prog="sg-granger",
        description="Debiased sparse-group LASSO inference and Granger causality tests for time series.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="fit the sg-LASSO", argument_default=argparse.SUPPRESS)
    _common_flags(fit)
    _model_flags(fit)

    granger = commands.add_parser("granger", help="Granger causality tests", argument_default=argparse.SUPPRESS)
    _common_flags(granger)
    _model_flags(granger)
    granger.add_argument("--test-group", dest="test_groups", action="append", help="group to test (repeatable)")
    granger.add_argument("--mt", dest="mt_grid", type=int, action="append", help="bandwidth M_T (repeatable)")
    granger.add_argument("--kernel", dest="kernels", action="append", help="parzen, qs or bartlett (repeatable)")

    nodewise = commands.add_parser("nodewise", help="nodewise precision rows", argument_default=argparse.SUPPRESS)
    _common_flags(nodewise)
    _model_flags(nodewise)
    nodewise.add_argument("--rows", dest="nodewise_columns", nargs="+", help="design columns (default: all)")

    simulate = commands.add_parser("simulate", help="Monte Carlo coverage experiment",
                                   argument_default=argparse.SUPPRESS)
    _common_flags(simulate)
    simulate.add_argument("--T", dest="T", type=int, action="append", help="sample size (repeatable)")
    simulate.add_argument("--p", dest="p", type=int, action="append", help="covariates (repeatable)")
    simulate.add_argument("--N", dest="N", type=int, help="replications per cell")
    simulate.add_argument("--rho", type=float)
    simulate.add_argument("--n-active", dest="n_active", type=int)
    simulate.add_argument("--mt", dest="mt_grid", type=int, action="append")
    simulate.add_argument("--kernel")
    simulate.add_argument("--alpha", type=float)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--noise-sd", dest="noise_sd", type=float)
    simulate.add_argument("--freeze-beta", dest="freeze_beta", action="store_const", const=True)
    simulate.add_argument("--standardize", action="store_const", const=True)
    simulate.add_argument("--workers", type=int, help="worker processes (default: physical cores)")

    profile = commands.add_parser("profile", help="profile a CSV before fitting", argument_default=argparse.SUPPRESS)
    _common_flags(profile)
    profile.add_argument("--data")
    profile.add_argument("--date-column", dest="date_column")

    return parser


def _load_config_file(path: str) -> Any:
    try:
        return load_json(path)
    except DataError as e:
        raise ConfigError(str(e)) from None


def main(argv: Optional[List[str]] = None) -> int:
    """Parsea, resuelve la configuración y despacha al comando."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else 0

    flags: Dict[str, Any] = dict(vars(args))
    command = flags.pop("command")
    try:
        file_values = _load_config_file(flags["config"]) if "config" in flags else {}
        config = resolve_config(command, file_values, flags)
        return COMMAND_HANDLERS[command](config)
    except SgGrangerError as e:
        error(str(e))
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
