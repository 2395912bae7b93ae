"""
Dataset Profiling Script

Este script analiza un CSV de series de tiempo antes de ajustar modelos para:
1. Validar calidad de datos (celdas vacías, no numéricas, no finitas)
2. Identificar casos borde (columnas constantes, fechas desordenadas o repetidas)
3. Guiar decisiones de diseño (qué columnas entran al diseño, cuántos rezagos caben)

A diferencia de `load_numeric_table`, que corta en el primer error, el
profiling recorre todo el archivo y acumula los problemas.

Uso:
    python dataset_profile.py <ruta_al_csv> [columna_de_fechas]
"""

import sys
import time
from pathlib import Path
from typing import Dict, Any, Optional
from collections import defaultdict

import numpy as np
import polars as pl

# Add src directory to path to import common module
sys.path.insert(0, str(Path(__file__).parent.parent))
from common import Colors, SgGrangerError
from dataset.dataset_io import DEFAULT_DATE_COLUMN, ISO_DATE_PATTERN, read_raw_csv


MAX_SAMPLES = 5


def profile_dataset(file_path: str, date_column: Optional[str] = DEFAULT_DATE_COLUMN) -> Dict[str, Any]:
    """
    Analiza el CSV y retorna métricas clave.

    Args:
        file_path: Ruta al CSV con encabezado
        date_column: Columna de fechas (se ignora si no existe)

    Returns:
        Diccionario con estadísticas del dataset
    """
    start_time = time.time()
    frame = read_raw_csv(file_path)

    stats: Dict[str, Any] = {
        'path': str(file_path),
        'total_rows': frame.height,
        'columns': [c for c in frame.columns if c != date_column],
        'date_column': date_column if date_column in frame.columns else None,
        'missing_cells': defaultdict(int),
        'non_numeric_cells': defaultdict(int),
        'non_finite_cells': defaultdict(int),
        'constant_columns': [],
        'column_stats': {},
        'dates': {},
        'parse_errors': [],
        'processing_time': 0,
    }

    for name in stats['columns']:
        analyze_column(frame, name, stats)

    if stats['date_column'] is not None:
        analyze_dates(frame, stats['date_column'], stats)

    stats['processing_time'] = time.time() - start_time
    calculate_final_metrics(stats)
    return stats


def _record_error(stats: Dict[str, Any], row: int, column: str, error: str, value: Any) -> None:
    if len(stats['parse_errors']) < MAX_SAMPLES:
        stats['parse_errors'].append({'line': row + 2, 'column': column, 'error': error, 'sample': str(value)[:100]})


def analyze_column(frame: pl.DataFrame, name: str, stats: Dict[str, Any]) -> None:
    """
    Cuenta celdas vacías, no numéricas y no finitas de una columna y calcula
    sus estadísticos básicos sobre las celdas válidas.
    """
    raw = frame.get_column(name).str.strip_chars()
    missing = (raw.is_null() | (raw == "")).fill_null(True)
    values = raw.cast(pl.Float64, strict=False)
    non_numeric = values.is_null() & ~missing

    for row in missing.arg_true().to_list():
        stats['missing_cells'][name] += 1
        _record_error(stats, row, name, 'missing value', '')
    for row in non_numeric.arg_true().to_list():
        stats['non_numeric_cells'][name] += 1
        _record_error(stats, row, name, 'not a number', raw[row])

    array = values.to_numpy().astype(np.float64)
    finite = np.isfinite(array)
    non_finite = ~finite & values.is_not_null().to_numpy()
    if non_finite.any():
        stats['non_finite_cells'][name] += int(non_finite.sum())

    valid = array[finite]
    if valid.size == 0:
        return
    sd = float(valid.std())
    stats['column_stats'][name] = {
        'mean': float(valid.mean()),
        'sd': sd,
        'min': float(valid.min()),
        'max': float(valid.max()),
    }
    if not sd > 1e-14 * max(abs(float(valid.mean())), 1.0):
        stats['constant_columns'].append(name)


def analyze_dates(frame: pl.DataFrame, name: str, stats: Dict[str, Any]) -> None:
    """Formato ISO-8601, orden y duplicados de la columna de fechas."""
    raw = frame.get_column(name).str.strip_chars()
    iso = raw.str.contains(ISO_DATE_PATTERN).fill_null(False)
    dates = raw.to_list()
    out_of_order = 0
    duplicated = 0
    for row in range(1, len(dates)):
        if dates[row] is None or dates[row - 1] is None:
            continue
        if dates[row] == dates[row - 1]:
            duplicated += 1
            _record_error(stats, row, name, 'duplicated date', dates[row])
        elif dates[row] < dates[row - 1]:
            out_of_order += 1
            _record_error(stats, row, name, 'date out of order', dates[row])
    stats['dates'] = {
        'non_iso': int((~iso).sum()),
        'out_of_order': out_of_order,
        'duplicated': duplicated,
        'first': dates[0],
        'last': dates[-1],
    }


def calculate_final_metrics(stats: Dict[str, Any]) -> None:
    """
    Calcula métricas finales derivadas.
    """
    problems = (
        sum(stats['missing_cells'].values())
        + sum(stats['non_numeric_cells'].values())
        + sum(stats['non_finite_cells'].values())
    )
    total_cells = stats['total_rows'] * len(stats['columns'])
    stats['invalid_cells'] = problems
    stats['invalid_percentage'] = (problems / total_cells) * 100 if total_cells > 0 else 0
    dates = stats['dates']
    stats['ready'] = (
        problems == 0
        and not stats['constant_columns']
        and (not dates or (dates['non_iso'] == 0 and dates['out_of_order'] == 0 and dates['duplicated'] == 0))
    )
    stats['throughput'] = stats['total_rows'] / stats['processing_time'] if stats['processing_time'] > 0 else 0
    stats['missing_cells'] = dict(stats['missing_cells'])
    stats['non_numeric_cells'] = dict(stats['non_numeric_cells'])
    stats['non_finite_cells'] = dict(stats['non_finite_cells'])


def print_report(stats: Dict[str, Any]) -> None:
    """
    Imprime un reporte legible de las estadísticas del dataset.
    """
    print("\n" + "=" * 80)
    print("  DATASET PROFILING REPORT")
    print("=" * 80 + "\n")

    # Sección 1: Validación básica
    print(f"{Colors.BOLD}BASIC VALIDATION{Colors.RESET}")
    print(f"  File: {stats['path']}")
    print(f"  Rows: {stats['total_rows']:,}")
    print(f"  Numeric columns: {len(stats['columns'])}")
    color = Colors.GREEN if stats['invalid_cells'] == 0 else Colors.RED
    print(f"  {color}Invalid cells: {stats['invalid_cells']:,} ({stats['invalid_percentage']:.2f}%){Colors.RESET}")
    print()

    # Sección 2: Calidad de datos por columna
    print(f"{Colors.BOLD}DATA QUALITY - Problem Cells{Colors.RESET}")
    any_problem = False
    for label, key in (('missing', 'missing_cells'), ('non-numeric', 'non_numeric_cells'), ('non-finite', 'non_finite_cells')):
        for name, count in sorted(stats[key].items(), key=lambda x: x[1], reverse=True):
            any_problem = True
            print(f"  {Colors.RED}{name}: {count:,} {label}{Colors.RESET}")
    if not any_problem:
        print(f"  {Colors.GREEN}No problem cells detected{Colors.RESET}")
    print()

    # Sección 3: Columnas constantes
    print(f"{Colors.BOLD}CONSTANT COLUMNS{Colors.RESET}")
    if stats['constant_columns']:
        for name in stats['constant_columns']:
            print(f"  {Colors.YELLOW}{name} (cannot be standardized){Colors.RESET}")
    else:
        print(f"  {Colors.GREEN}None{Colors.RESET}")
    print()

    # Sección 4: Fechas
    print(f"{Colors.BOLD}DATES{Colors.RESET}")
    if stats['date_column'] is None:
        print(f"  {Colors.YELLOW}No date column found; rows are assumed time-ordered{Colors.RESET}")
    else:
        d = stats['dates']
        print(f"  {Colors.CYAN}{stats['date_column']}: {d['first']} .. {d['last']}{Colors.RESET}")
        print(f"  Non ISO-8601: {d['non_iso']:,}")
        print(f"  Out of order: {d['out_of_order']:,}")
        print(f"  Duplicated: {d['duplicated']:,}")
    print()

    # Sección 5: Estadísticos
    print(f"{Colors.BOLD}COLUMN STATISTICS{Colors.RESET}")
    for name, cs in stats['column_stats'].items():
        print(f"  {name:<24} mean={cs['mean']:>12.4g} sd={cs['sd']:>12.4g} min={cs['min']:>12.4g} max={cs['max']:>12.4g}")
    print()

    # Sección 6: Performance
    print(f"{Colors.BOLD}PERFORMANCE{Colors.RESET}")
    print(f"  Processing time: {stats['processing_time']:.2f} seconds")
    print(f"  Throughput: {stats['throughput']:.0f} rows/second")
    print()

    # Sección 7: Errores (si existen)
    if stats['parse_errors']:
        print(f"{Colors.YELLOW}PARSE ERRORS (first {MAX_SAMPLES}){Colors.RESET}")
        for error in stats['parse_errors']:
            print(f"  Line {error['line']}, column '{error['column']}': {error['error']}")
            print(f"  Sample: {error['sample']}")
        print()

    print("=" * 80)
    if stats['ready']:
        print(f"{Colors.GREEN}Dataset is ready for fitting{Colors.RESET}")
    else:
        print(f"{Colors.YELLOW}Fix the issues above before fitting{Colors.RESET}")
    print("=" * 80)


def main() -> int:
    """
    Función principal del script.
    """
    if len(sys.argv) < 2:
        print(f"{Colors.RED}Error: missing CSV path{Colors.RESET}")
        print(f"{Colors.CYAN}Usage: python src/dataset/dataset_profile.py <file.csv> [date_column]{Colors.RESET}")
        return 2

    file_path = sys.argv[1]
    date_column = sys.argv[2] if len(sys.argv) > 2 else DEFAULT_DATE_COLUMN

    try:
        stats = profile_dataset(file_path, date_column)
    except SgGrangerError as e:
        print(f"{Colors.RED}Error: {e}{Colors.RESET}")
        return e.exit_code

    print_report(stats)
    return 0 if stats['ready'] else 1


if __name__ == "__main__":
    sys.exit(main())
