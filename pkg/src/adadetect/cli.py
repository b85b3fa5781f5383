"""Command-line front end.

Subcommands: ``detect`` (CSV in, report.json + rejections.csv out), ``cv``
(detect with scorer selection from a JSON grid), ``simulate`` (synthetic
sweeps to mc_report.json + curves.csv) and ``verify`` (adaptive-bound
check to bound_report.json).

Exit codes: 0 success, 2 invalid input, 3 internal invariant violation.
"""

import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .detector import (
    SplitDataset,
    run_adadetect,
    run_adadetect_cv,
    run_quantile_adadetect,
    run_storey_adadetect,
)
from .exceptions import InternalInvariantError, InvalidInputError
from .scorers import (
    ChiSquareScorer,
    DensityRatioScorer,
    LinearScorer,
    PUClassifierScorer,
)
from .simlab import (
    GeneratorConfig,
    adadetect_procedure,
    linear_scorer_for,
    marginal_storey_bh_procedure,
    monte_carlo,
    oracle_scorer_for,
    verify_adaptive_bound,
)

SCHEMA_VERSION = 1

_SCORER_FACTORIES = {
    "chi2": ChiSquareScorer,
    "linear": LinearScorer,
    "parametric": lambda **kw: DensityRatioScorer(family="gaussian", **kw),
    "histogram": lambda **kw: DensityRatioScorer(family="histogram", **kw),
    "logistic": lambda **kw: PUClassifierScorer(learner="logistic", **kw),
    "mlp": lambda **kw: PUClassifierScorer(learner="mlp", **kw),
    "tree": lambda **kw: PUClassifierScorer(learner="tree-ensemble", **kw),
    "hinge": lambda **kw: PUClassifierScorer(learner="linear-hinge", **kw),
}

_SIM_METHODS = (
    "adadetect",
    "storey-adadetect",
    "quantile-adadetect",
    "marginal-storey-bh",
)


@dataclass(frozen=True)
class RunConfig:
    """Serializable echo of a CLI invocation; round-trips through JSON."""

    subcommand: str
    options: dict

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.subcommand,
            "options": _plain(self.options),
        }

    @classmethod
    def from_dict(cls, payload):
        return cls(subcommand=payload["subcommand"],
                   options=_plain(payload["options"]))


def _plain(value):
    """Normalize to JSON-native types so equality survives a round trip."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def _jsonify(value):
    """JSON encoder hook: keep output strictly standard (no Infinity/NaN)."""
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    return value


def read_csv_matrix(path, header=False):
    """Parse a numeric CSV into an (n, d) array.

    Errors name the file, line and column; ragged rows and non-numeric
    cells are invalid input.
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise InvalidInputError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(row)}"
                )
            parsed = []
            for colno, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise InvalidInputError(
                        f"{path}: line {lineno}, column {colno}: "
                        f"not a number: {cell.strip()!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def make_scorer(name, params=None):
    if name not in _SCORER_FACTORIES:
        raise InvalidInputError(
            f"unknown scorer {name!r}; expected one of {sorted(_SCORER_FACTORIES)}"
        )
    try:
        return _SCORER_FACTORIES[name](**(params or {}))
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for scorer {name!r}: {exc}") from None


def _parse_scorer_params(raw):
    if not raw:
        return {}
    try:
        params = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"--scorer-params: invalid JSON: {exc}") from None
    if not isinstance(params, dict):
        raise InvalidInputError("--scorer-params: expected a JSON object")
    return params


def _write_report(out_dir, name, payload):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonify(payload), fh, indent=2, allow_nan=False)
        fh.write("\n")
    return path


def _write_rejections(out_dir, indices):
    path = Path(out_dir) / "rejections.csv"
    with open(path, "w", encoding="utf-8") as fh:
        for idx in indices:
            fh.write(f"{idx + 1}\n")  # 1-based, matching input row order
    return path


@click.group()
@click.version_option(version=__version__, prog_name="adadetect")
def cli():
    """Semi-supervised novelty detection with finite-sample FDR control."""


def _split_options(fn):
    fn = click.option("--k", type=int, default=None,
                      help="Size of the first null split.")(fn)
    fn = click.option("--ell", type=int, default=None,
                      help="Size of the calibration null split.")(fn)
    fn = click.option("--split", type=click.Choice(["ell-equals-m"]), default=None,
                      help="Named split policy (overrides --k/--ell).")(fn)
    return fn


def _resolve_split(test_rows, k, ell, split):
    if split == "ell-equals-m":
        return None, test_rows
    return k, ell


def _detect_common(nts, test, header):
    nulls = read_csv_matrix(nts, header=header)
    test_rows = read_csv_matrix(test, header=header)
    if nulls.shape[1] != test_rows.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: {nts} has {nulls.shape[1]} columns, "
            f"{test} has {test_rows.shape[1]}"
        )
    return nulls, test_rows


def _emit_detection(report, config, out):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": config.to_dict(),
        "result": report.to_dict(),
    }
    report_path = _write_report(out, "report.json", payload)
    rej_path = _write_rejections(out, report.rejections.indices)
    click.echo(f"wrote {report_path} and {rej_path} "
               f"({report.rejections.k_hat} rejections)")


@cli.command()
@click.option("--nts", required=True, type=click.Path(exists=True, dir_okay=False),
              help="CSV of null training rows.")
@click.option("--test", required=True, type=click.Path(exists=True, dir_okay=False),
              help="CSV of test rows.")
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--scorer", "scorer_name", default="tree", show_default=True,
              type=click.Choice(sorted(_SCORER_FACTORIES)))
@click.option("--scorer-params", default=None,
              help="JSON dict of scorer hyperparameters.")
@_split_options
@click.option("--storey-K", "storey_k", type=int, default=None,
              help="Storey-adaptive variant with lambda = K/(ell+1).")
@click.option("--storey-lambda", type=float, default=None,
              help="Storey-adaptive variant; lambda snapped to the grid.")
@click.option("--quantile-k0", type=int, default=None, is_flag=False,
              flag_value=-1, help="Quantile-adaptive variant (default ceil(m/2)).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--header/--no-header", default=False, show_default=True)
def detect(nts, test, alpha, scorer_name, scorer_params, k, ell, split,
           storey_k, storey_lambda, quantile_k0, seed, out, header):
    """Run detection on CSV data and emit report.json + rejections.csv."""
    nulls, test_rows = _detect_common(nts, test, header)
    params = _parse_scorer_params(scorer_params)
    scorer = make_scorer(scorer_name, params)
    k, ell = _resolve_split(test_rows.shape[0], k, ell, split)
    data = SplitDataset.from_samples(nulls, test_rows, k=k, ell=ell)
    if (storey_k is not None or storey_lambda is not None) and \
            quantile_k0 is not None:
        raise InvalidInputError(
            "choose either the Storey or the quantile variant, not both"
        )
    if storey_k is not None or storey_lambda is not None:
        report = run_storey_adadetect(data, scorer, alpha, K=storey_k,
                                      lam=storey_lambda, seed=seed)
    elif quantile_k0 is not None:
        k0 = None if quantile_k0 == -1 else quantile_k0
        report = run_quantile_adadetect(data, scorer, alpha, k0=k0, seed=seed)
    else:
        report = run_adadetect(data, scorer, alpha, seed=seed)
    config = RunConfig("detect", {
        "nts": str(nts), "test": str(test), "alpha": alpha,
        "scorer": scorer_name, "scorer_params": params,
        "k": data.k, "ell": data.ell, "split": split,
        "storey_K": storey_k, "storey_lambda": storey_lambda,
        "quantile_k0": quantile_k0, "seed": seed, "header": header,
        "out": str(out),
    })
    _emit_detection(report, config, out)


@cli.command()
@click.option("--nts", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--cv-grid", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON list of scorer specs: [{'scorer': name, 'params': {...}}].")
@click.option("--s", "s_size", type=int, default=None,
              help="Surrogate first-null size (default 3k/4).")
@_split_options
@click.option("--cv-alpha", type=float, default=None,
              help="Level for counting surrogate rejections (default --alpha).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--header/--no-header", default=False, show_default=True)
def cv(nts, test, alpha, cv_grid, s_size, k, ell, split, cv_alpha, seed, out,
       header):
    """Detection with scorer selection from a grid of candidates."""
    nulls, test_rows = _detect_common(nts, test, header)
    with open(cv_grid, "r", encoding="utf-8") as fh:
        try:
            grid_spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{cv_grid}: invalid JSON: {exc}") from None
    if not isinstance(grid_spec, list) or not grid_spec:
        raise InvalidInputError(f"{cv_grid}: expected a nonempty JSON list")
    grid = [make_scorer(entry.get("scorer"), entry.get("params"))
            for entry in grid_spec]
    k, ell = _resolve_split(test_rows.shape[0], k, ell, split)
    data = SplitDataset.from_samples(nulls, test_rows, k=k, ell=ell)
    report = run_adadetect_cv(data, grid, alpha, s=s_size, cv_alpha=cv_alpha,
                              seed=seed)
    config = RunConfig("cv", {
        "nts": str(nts), "test": str(test), "alpha": alpha,
        "cv_grid": _plain(grid_spec), "s": s_size,
        "k": data.k, "ell": data.ell, "split": split, "cv_alpha": cv_alpha,
        "seed": seed, "header": header, "out": str(out),
    })
    _emit_detection(report, config, out)


def _sim_procedure(method, cfg, alpha, scorer_name, scorer_params, k, ell,
                   storey_k, storey_lambda, quantile_k0):
    if method == "marginal-storey-bh":
        lam = storey_lambda if storey_lambda is not None else 0.5
        return marginal_storey_bh_procedure(cfg.mean_shift(), alpha, lam)
    if scorer_name == "linear":
        scorer = linear_scorer_for(cfg)
    elif scorer_name == "oracle":
        scorer = oracle_scorer_for(cfg)
    else:
        scorer = make_scorer(scorer_name, scorer_params)
    variant = {"adadetect": "plain", "storey-adadetect": "storey",
               "quantile-adadetect": "quantile"}[method]
    return adadetect_procedure(
        scorer, alpha, k=k, ell=ell, variant=variant, storey_K=storey_k,
        storey_lambda=storey_lambda, quantile_k0=quantile_k0,
    )


@cli.command()
@click.option("--setting", required=True,
              type=click.Choice(["gaussian-sparse", "equicorrelated", "beta"]))
@click.option("--d", "dims", type=int, multiple=True, required=True,
              help="Dimension(s); repeat the flag to sweep.")
@click.option("--rho", "rhos", type=float, multiple=True, default=(0.0,),
              help="Equicorrelation(s); repeat the flag to sweep.")
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, required=True)
@click.option("--m1", type=int, required=True)
@click.option("--amplitude", type=float, default=None)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--method", "methods", multiple=True, required=True,
              type=click.Choice(_SIM_METHODS))
@click.option("--scorer", "scorer_name", default="linear", show_default=True,
              help="Scorer for the adadetect methods ('linear' and 'oracle' "
                   "auto-configure from the generator).")
@click.option("--scorer-params", default=None)
@_split_options
@click.option("--storey-K", "storey_k", type=int, default=None)
@click.option("--storey-lambda", type=float, default=None)
@click.option("--quantile-k0", type=int, default=None)
@click.option("--replicates", type=int, default=100, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def simulate(setting, dims, rhos, n, m, m1, amplitude, alpha, methods,
             scorer_name, scorer_params, k, ell, split, storey_k,
             storey_lambda, quantile_k0, replicates, workers, seed, out):
    """Monte-Carlo FDR/TDR sweep; emits mc_report.json + curves.csv."""
    params = _parse_scorer_params(scorer_params)
    if len(dims) > 1 and len(rhos) > 1:
        raise InvalidInputError("sweep over d or rho, not both")
    sweep_name, sweep_values = ("rho", rhos) if len(rhos) > 1 else ("d", dims)
    k, ell = _resolve_split(m, k, ell, split)
    if replicates == 1:
        click.echo("warning: one replicate; standard errors reported as 0",
                   err=True)
    rows = []
    for value in sweep_values:
        cfg = GeneratorConfig(
            setting=setting,
            d=int(value) if sweep_name == "d" else dims[0],
            n=n, m=m, m1=m1, amplitude=amplitude,
            rho=float(value) if sweep_name == "rho" else rhos[0],
        )
        for method in methods:
            proc = _sim_procedure(method, cfg, alpha, scorer_name, params,
                                  k, ell, storey_k, storey_lambda, quantile_k0)
            rep = monte_carlo(cfg, proc, replicates, seed=seed, workers=workers)
            rows.append({
                sweep_name: value, "method": method,
                "fdr": rep.fdr_hat, "fdr_se": rep.fdr_se,
                "tdr": rep.tdr_hat, "tdr_se": rep.tdr_se,
            })
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = out_dir / "curves.csv"
    with open(curves, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([sweep_name, "method", "fdr", "fdr_se", "tdr", "tdr_se"])
        for row in rows:
            writer.writerow([row[sweep_name], row["method"], row["fdr"],
                             row["fdr_se"], row["tdr"], row["tdr_se"]])
    config = RunConfig("simulate", {
        "setting": setting, "d": list(dims), "rho": list(rhos), "n": n,
        "m": m, "m1": m1, "amplitude": amplitude, "alpha": alpha,
        "methods": list(methods), "scorer": scorer_name,
        "scorer_params": params, "k": k, "ell": ell, "split": split,
        "storey_K": storey_k, "storey_lambda": storey_lambda,
        "quantile_k0": quantile_k0, "replicates": replicates,
        "workers": workers, "seed": seed, "out": str(out),
    })
    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": config.to_dict(),
        "curves": rows,
    }
    _write_report(out, "mc_report.json", payload)
    click.echo(f"wrote {out_dir / 'mc_report.json'} and {curves} "
               f"({len(rows)} rows)")


@cli.command()
@click.option("--m", type=int, required=True)
@click.option("--ell", type=int, required=True)
@click.option("--m0", type=int, required=True)
@click.option("--estimator", type=click.Choice(["storey", "quantile"]),
              default="storey", show_default=True)
@click.option("--K", "k_param", type=int, default=None,
              help="Storey grid index in {2..ell} (default 2).")
@click.option("--k0", type=int, default=None,
              help="Quantile order in {1..m} (default ceil(m/2)).")
@click.option("--replicates", type=int, default=50000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def verify(m, ell, m0, estimator, k_param, k0, replicates, seed, out):
    """Check the adaptive-level FDR bound by Monte Carlo."""
    if estimator == "storey":
        if k_param is not None and not 2 <= k_param <= ell:
            raise InvalidInputError(
                f"K must lie in the admissible range {{2..{ell}}}, got {k_param}"
            )
        param = 2 if k_param is None else k_param
    else:
        param = int(np.ceil(m / 2)) if k0 is None else k0
    result = verify_adaptive_bound(m, ell, m0, estimator, param,
                                   replicates, seed=seed)
    config = RunConfig("verify", {
        "m": m, "ell": ell, "m0": m0, "estimator": estimator,
        "param": param, "replicates": replicates, "seed": seed,
        "out": str(out),
    })
    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": config.to_dict(),
        "result": {
            "estimate": result.estimate,
            "se": result.se,
            "upper_3se": result.upper,
            "bound_holds": result.estimate <= 1.0 + 3.0 * result.se,
        },
    }
    path = _write_report(out, "bound_report.json", payload)
    click.echo(f"wrote {path} (estimate {result.estimate:.4f}, se {result.se:.5f})")


def main(argv=None):
    try:
        cli(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except InvalidInputError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except InternalInvariantError as exc:
        click.echo(f"internal error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
