"""
Implementación de los subcomandos del CLI.

Cada comando sigue el mismo orden:
1. Cargar y validar entradas (config, CSV, sidecar, diseño, grilla de M_T)
2. Estimar
3. Escribir reportes de forma atómica

Ningún archivo de salida se abre antes del paso 3, por lo que una falla de
configuración o de datos nunca deja salidas parciales.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import polars as pl

from common import EXIT_DATA, EXIT_OK, Colors, ConfigError, banner, status
from dataset.dataset_io import load_json, load_numeric_table, write_frame, write_json
from dataset.dataset_profile import print_report, profile_dataset
from hac.hac import KernelSpec, hac_estimate, score_series
from inference.inference import debias, granger_report_entry, wald_test
from montecarlo.montecarlo import run_experiment
from nodewise.nodewise import estimate_precision_rows, identity_defect
from sglasso.cv import CvResult, cv_select
from sglasso.sglasso import PenaltySpec, SgLassoFit, fit_sglasso, kkt_violation

from cli.config import RunConfig
from cli.design import DesignMatrix, build_design, check_bandwidths, granger_group_indices


PVALUE_COLUMNS = ["group", "kernel", "M_T", "wald", "dof", "p_value", "sig_1pct", "sig_5pct"]


def sidecar_path(out: str, suffix: str) -> Path:
    """`reporte.json` -> `reporte{suffix}` en el mismo directorio."""
    path = Path(out)
    return path.with_name(path.stem + suffix)


def prepare_design(config: RunConfig) -> DesignMatrix:
    """Lee los CSV y el sidecar de grupos y arma el diseño."""
    table = load_numeric_table(config.data, date_column=config.date_column)
    hf_table = None
    if config.hf_data is not None:
        hf_table = load_numeric_table(config.hf_data, [config.hf_column], config.hf_date_column)
    group_spec = load_json(config.groups) if config.groups else None
    if group_spec is not None and not isinstance(group_spec, dict):
        raise ConfigError(f"{config.groups}: the group spec must map group names to lists of series")
    return build_design(config, table, hf_table, group_spec)


def fit_model(config: RunConfig, design: DesignMatrix) -> Tuple[SgLassoFit, Optional[CvResult]]:
    """sg-LASSO con λ dado o elegido por CV en bloques."""
    settings = config.settings()
    data = design.dataset
    cv = None
    lam = config.lam
    if lam is None:
        cv = cv_select(data, design.groups, config.alpha, config.folds, settings=settings,
                       group_weights=settings.group_weights)
        lam = cv.selected_lambda
    spec = PenaltySpec(lam, config.alpha, design.groups, settings.group_weights)
    return fit_sglasso(data, spec, settings), cv


def fit_summary(design: DesignMatrix, fit: SgLassoFit, cv: Optional[CvResult]) -> Dict[str, Any]:
    names = design.dataset.column_names
    beta = np.asarray(fit.beta)
    summary = {
        "selected_lambda": fit.penalty.lam,
        "lambda_source": "user" if cv is None else "cv",
        "cv_curve": None if cv is None else cv.curve(),
        "beta": {names[j]: float(beta[j]) for j in np.flatnonzero(beta)},
        "sigma2_hat": fit.sigma2_hat,
        "objective": fit.objective_value,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "kkt_violation": kkt_violation(fit, design.dataset),
    }
    if design.record is not None:
        original = design.record.coefficients_to_original(beta)
        summary["beta_original_scale"] = {names[j]: float(original[j]) for j in np.flatnonzero(beta)}
    return summary


def _warn_convergence(converged: bool, what: str, quiet: bool) -> None:
    if not converged:
        status(f"Warning: {what} did not converge within max_cycles", Colors.YELLOW, quiet)


def cmd_fit(config: RunConfig) -> int:
    """Ajusta el sg-LASSO y escribe el reporte JSON."""
    banner("sg-LASSO fit", quiet=config.quiet)
    design = prepare_design(config)
    status(f"Design: T={design.dataset.T}, p={design.dataset.p}, groups={len(design.groups.groups)}",
           Colors.CYAN, config.quiet)

    fit, cv = fit_model(config, design)
    _warn_convergence(fit.converged, "the sg-LASSO solver", config.quiet)
    report = {
        "command": "fit",
        "config": config.as_dict(),
        "design": design.describe(),
        **fit_summary(design, fit, cv),
    }
    path = write_json(config.out, report)
    status(f"Selected lambda: {fit.penalty.lam:.6g} ({report['lambda_source']}), support size {len(report['beta'])}",
           quiet=config.quiet)
    status(f"Report saved to: {path}", Colors.CYAN, config.quiet)
    return EXIT_OK


def cmd_granger(config: RunConfig) -> int:
    """
    Test de Granger para cada grupo pedido sobre la grilla kernel × M_T.

    Escribe el reporte JSON en `--out` y la tabla de p-valores en
    `<out>_pvalues.csv`, ordenada por grupo, kernel y M_T.
    """
    banner("Granger causality tests", quiet=config.quiet)
    design = prepare_design(config)
    data = design.dataset
    tests = granger_group_indices(design, config.test_groups)
    check_bandwidths(config.mt_grid, data.T)
    kernels = [KernelSpec(kind, M) for kind in config.kernels for M in config.mt_grid]

    fit, cv = fit_model(config, design)
    _warn_convergence(fit.converged, "the sg-LASSO solver", config.quiet)
    settings = config.settings()

    entries: List[Dict[str, Any]] = []
    table_rows: List[List[Any]] = []
    for group_name, idx in tests.items():
        status(f"Testing group '{group_name}' ({len(idx)} columns)", Colors.BOLD, config.quiet)
        lambdas = config.lam if config.lam is not None else "cv"
        prec = estimate_precision_rows(data, idx, lambdas, settings, config.folds, config.workers)
        for row in prec.nodewise_rows.values():
            _warn_convergence(row.converged, f"nodewise row '{data.column_names[row.j]}'", config.quiet)
        est = debias(fit, prec, data)
        scores = score_series(fit.residuals, data, prec)
        for kernel in kernels:
            xi = hac_estimate(scores, kernel, idx)
            result = wald_test(est, xi, None, data.T)
            if result.rank_reduced:
                status(f"Warning: R Xi R' is rank deficient for '{group_name}' ({kernel.kind}, M_T={kernel.bandwidth:g}); "
                       f"dof reduced to {result.dof}", Colors.YELLOW, config.quiet)
            entries.append(granger_report_entry(group_name, result, est, data.column_names, data.T))
            table_rows.append([
                group_name, kernel.kind, int(kernel.bandwidth), result.wald_stat, result.dof, result.p_value,
                result.p_value < 0.01, result.p_value < 0.05,
            ])
            status(f"  {kernel.kind:<20} M_T={int(kernel.bandwidth):<4} W={result.wald_stat:10.4f} "
                   f"dof={result.dof} p={result.p_value:.4f}", Colors.GREEN, config.quiet)

    report = {
        "command": "granger",
        "config": config.as_dict(),
        "design": design.describe(),
        "fit": fit_summary(design, fit, cv),
        "tests": entries,
    }
    frame = pl.DataFrame(table_rows, schema=PVALUE_COLUMNS, orient="row")
    table_path = sidecar_path(config.out, "_pvalues.csv")
    path = write_json(config.out, report)
    write_frame(str(table_path), frame)
    status(f"Report saved to: {path}", Colors.CYAN, config.quiet)
    status(f"P-value table saved to: {table_path}", Colors.CYAN, config.quiet)
    return EXIT_OK


def cmd_nodewise(config: RunConfig) -> int:
    """Filas de Θ̂ para las columnas pedidas (todas por defecto)."""
    banner("Nodewise precision rows", quiet=config.quiet)
    design = prepare_design(config)
    data = design.dataset
    columns = config.nodewise_columns or data.column_names
    idx = [data.column_index(name) for name in columns]

    lambdas = config.lam if config.lam is not None else "cv"
    prec = estimate_precision_rows(data, idx, lambdas, config.settings(), config.folds, config.workers)
    rows = []
    for j in prec.requested:
        row = prec.nodewise_rows[j]
        _warn_convergence(row.converged, f"nodewise row '{data.column_names[j]}'", config.quiet)
        theta = prec.rows[j]
        rows.append({
            "column": data.column_names[j],
            "lambda_j": row.lambda_j,
            "lambda_source": "user" if row.cv is None else "cv",
            "sigma2_j": row.sigma2_j,
            "converged": row.converged,
            "theta_row": {data.column_names[k]: float(theta[k]) for k in np.flatnonzero(theta)},
        })
    report = {
        "command": "nodewise",
        "config": config.as_dict(),
        "design": design.describe(),
        "rows": rows,
        "identity_defect": identity_defect(prec, data),
    }
    path = write_json(config.out, report)
    status(f"{len(rows)} rows estimated, identity defect {report['identity_defect']:.4g}", quiet=config.quiet)
    status(f"Report saved to: {path}", Colors.CYAN, config.quiet)
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    """Experimento Monte Carlo: tabla CSV de cobertura y metadatos JSON."""
    experiment = config.experiment
    banner("Monte Carlo coverage experiment", quiet=config.quiet)
    status(f"T={list(experiment.T)} p={list(experiment.p)} N={experiment.N} kernel={experiment.kernel} "
           f"workers={experiment.workers}", Colors.CYAN, config.quiet)

    table, metadata = run_experiment(experiment)
    for cell in metadata["cells"]:
        if cell["failed"] or cell["nonconverged"]:
            status(f"Warning: T={cell['T']} p={cell['p']}: {cell['failed']} failed, "
                   f"{cell['nonconverged']} non-converged replications", Colors.YELLOW, config.quiet)

    meta_path = sidecar_path(config.out, ".meta.json")
    path = write_frame(config.out, table.to_frame())
    write_json(str(meta_path), {**metadata, "command": "simulate", "config": config.as_dict()})
    if not config.quiet:
        print(table.to_frame())
    status(f"Coverage table saved to: {path}", Colors.CYAN, config.quiet)
    status(f"Metadata saved to: {meta_path}", Colors.CYAN, config.quiet)
    return EXIT_OK


def cmd_profile(config: RunConfig) -> int:
    """Profiling del CSV; con --out también escribe las métricas en JSON."""
    stats = profile_dataset(config.data, config.date_column)
    if not config.quiet:
        print_report(stats)
    if config.out:
        write_json(config.out, {key: value for key, value in stats.items() if key != "processing_time"
                                and key != "throughput"})
    return EXIT_OK if stats["ready"] else EXIT_DATA


COMMAND_HANDLERS = {
    "fit": cmd_fit,
    "granger": cmd_granger,
    "nodewise": cmd_nodewise,
    "simulate": cmd_simulate,
    "profile": cmd_profile,
}
