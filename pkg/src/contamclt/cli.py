"""Command-line experiment runner.

Settings come from three layers with increasing precedence: built-in
defaults, a flat key-value config file (``--config``), and command-line
flags.  Exit codes: 0 success, 2 validation error, 3 I/O error, 4 internal
numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiment import (
    ConfigError,
    ExperimentConfig,
    load_tabular_scheme,
    run_experiment,
)
from .model import ContaminationScheme

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_SCHEME_CHOICES = ("powerlaw", "tabular", "none")
_DIST_CHOICES = ("normal", "uniform", "laplace")

def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


# config-file keys and how their string values are coerced
_FILE_KEYS = {
    "scheme": str, "p": float, "a": float, "s2": float, "b": float,
    "dist": str, "mu": float, "n": int, "reps": int, "seed": int,
    "workers": int, "out": str, "formats": str, "force": _parse_bool,
    "tabular": str, "n_grid": str, "eps_grid": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contamclt",
        description=(
            "Classify a contamination scheme, compute its Lindeberg-index "
            "diagnostics, replicate the standardized sample mean, and emit "
            "QQ outputs."
        ),
    )
    parser.add_argument("--config", metavar="FILE",
                        help="flat key-value config file; flags override it")
    parser.add_argument("--scheme", choices=_SCHEME_CHOICES)
    parser.add_argument("--p", type=float, help="power-law mixture weight, in (0,1)")
    parser.add_argument("--a", type=float, help="power-law weight decay exponent, > 0")
    parser.add_argument("--s2", type=float, help="power-law inflation factor, > 1")
    parser.add_argument("--b", type=float, help="power-law inflation growth exponent, > 0")
    parser.add_argument("--tabular", metavar="CSV",
                        help="two-column CSV 'p_k,sigma2_k' for --scheme tabular")
    parser.add_argument("--dist", choices=_DIST_CHOICES)
    parser.add_argument("--mu", type=float)
    parser.add_argument("--n", type=int, help="observations per replicate")
    parser.add_argument("--reps", type=int, help="number of replicates")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int,
                        help="parallel workers for replication (never changes results)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--formats", help="comma-separated subset of csv,svg,json")
    parser.add_argument("--n-grid", dest="n_grid",
                        help="comma-separated geometric grid of sample sizes")
    parser.add_argument("--eps-grid", dest="eps_grid",
                        help="comma-separated logarithmic epsilon grid")
    parser.add_argument("--force", action="store_true", default=None,
                        help="allow overwriting existing output files")
    return parser


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment, blank lines skipped."""
    settings: dict = {}
    with open(path) as handle:
        lines = handle.readlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            key, _, value = line.partition(" ")
        key, value = key.strip(), value.strip()
        if key not in _FILE_KEYS or not value:
            raise ConfigError(f"{path}:{lineno}: unknown or malformed setting {raw.strip()!r}")
        settings[key] = value
    return settings


def _merge(cli: argparse.Namespace, file_settings: dict) -> dict:
    """Overlay: defaults < config file < command line."""
    merged: dict = dict(file_settings)
    for key in _FILE_KEYS:
        flag_value = getattr(cli, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _int_list(value, name: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in str(value).split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"{name} must be a comma-separated list of integers") from None


def _float_list(value, name: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in str(value).split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"{name} must be a comma-separated list of numbers") from None


def _coerce(key: str, value):
    if isinstance(value, str):
        caster = _FILE_KEYS[key]
        if caster is _parse_bool:
            return _parse_bool(value)
        if caster in (int, float):
            try:
                return caster(value)
            except ValueError:
                raise ConfigError(f"setting {key}={value!r} is not a number") from None
    return value


def config_from_settings(settings: dict) -> ExperimentConfig:
    settings = {key: _coerce(key, value) for key, value in settings.items()}

    scheme_kind = settings.get("scheme", "powerlaw")
    if scheme_kind not in _SCHEME_CHOICES:
        raise ConfigError(f"unknown scheme {scheme_kind!r}; choose from {_SCHEME_CHOICES}")
    tabular_path = settings.get("tabular")
    if scheme_kind == "tabular":
        if not tabular_path:
            raise ConfigError("scheme 'tabular' needs a tabular CSV path")
        scheme = load_tabular_scheme(tabular_path)
    elif scheme_kind == "none":
        scheme = ContaminationScheme.uncontaminated()
    else:
        missing = [k for k in ("p", "a", "s2", "b") if k not in settings]
        if missing:
            raise ConfigError(f"power-law scheme needs parameters {missing}")
        try:
            scheme = ContaminationScheme.power_law(settings["p"], settings["a"],
                                                   settings["s2"], settings["b"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    kwargs: dict = {"scheme": scheme, "tabular_path": tabular_path}
    if "dist" in settings:
        kwargs["dist"] = settings["dist"]
    if "mu" in settings:
        kwargs["mu"] = settings["mu"]
    if "n" in settings:
        kwargs["n"] = settings["n"]
    if "reps" in settings:
        kwargs["reps"] = settings["reps"]
    if "seed" in settings:
        kwargs["seed"] = settings["seed"]
    if "workers" in settings:
        kwargs["workers"] = settings["workers"]
    else:
        kwargs["workers"] = os.cpu_count() or 1
    if "out" in settings:
        kwargs["out_dir"] = settings["out"]
    if "force" in settings:
        kwargs["force"] = settings["force"]
    if "formats" in settings:
        formats = tuple(tok.strip() for tok in str(settings["formats"]).split(",")
                        if tok.strip())
        kwargs["formats"] = formats
    if "n_grid" in settings:
        kwargs["n_grid"] = _int_list(settings["n_grid"], "n_grid")
    if "eps_grid" in settings:
        kwargs["eps_grid"] = _float_list(settings["eps_grid"], "eps_grid")
    return ExperimentConfig(**kwargs)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        file_settings = read_config_file(args.config) if args.config else {}
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        config = config_from_settings(_merge(args, file_settings)).validated()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        report = run_experiment(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    case = report.classification.case.value if report.classification else "n/a"
    print(f"classification:       {case}")
    print(f"lindeberg index est.: {report.lindeberg_index_estimate:.6f}")
    print(f"lindeberg bound:      {report.lindeberg_upper_bound:.6f}")
    print(f"ks statistic:         {report.ks_statistic:.6f}")
    print(f"s_n:                  {report.s_n:.6f}")
    for trend_name, est in report.conditions.items():
        print(f"condition {trend_name}:          {est.trend.value}")
    if report.config.formats:
        print(f"outputs:              {report.config.out_dir} "
              f"({', '.join(report.config.formats)})")
    if report.duration_seconds is not None:
        print(f"wall clock:           {report.duration_seconds:.2f} s")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
