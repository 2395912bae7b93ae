"""
Monte Carlo Replication Runner

Este archivo ejecuta una réplica del experimento de cobertura con profiling completo.

Ejecutar:
    python src/montecarlo/montecarlo_impl.py [T] [p]

Genera:
    - montecarlo_replication.prof: Profiling de tiempo (cProfile)
    - montecarlo_replication_mem.bin: Profiling de memoria (memray)

Arquitectura:
    - Importa `run_replication` desde montecarlo.py
    - Ejecuta una réplica, muestra cobertura por M_T y mide pico de RSS
    - Guarda resultados para análisis posterior
"""

import sys
import time
import cProfile
import pstats
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from common import Colors

from montecarlo.montecarlo import DgpConfig, run_replication


DEFAULT_T = 1000
DEFAULT_P = 10
MT_GRID = (10, 20, 40)
SEED = 20240101
PROFILE_OUTPUT = "montecarlo_replication.prof"
MEMRAY_OUTPUT = "montecarlo_replication_mem.bin"


def replicate(config: DgpConfig):
    return run_replication(config, MT_GRID, "parzen", rng=np.random.default_rng(config.seed))


def run_and_display_results(config: DgpConfig) -> None:
    """Ejecuta una réplica y muestra los pivotes por M_T."""
    print(f"\n{Colors.BOLD}Executing run_replication(T={config.T}, p={config.p})...{Colors.RESET}")
    print("=" * 80)

    start = time.time()
    result = replicate(config)
    end = time.time()

    if result.failure is not None:
        print(f"{Colors.RED}Replication failed: {result.failure}{Colors.RESET}")
        return
    if not result.converged:
        print(f"{Colors.YELLOW}Warning: at least one solver did not converge{Colors.RESET}")

    print(f"\n{Colors.GREEN}Selected lambda: {result.selected_lambda:.6f}{Colors.RESET}")
    print("-" * 80)
    active = result.active
    for M in MT_GRID:
        inside = np.abs(result.pivots[M]) <= 1.96
        print(
            f"  M_T={M:3d}  covered active {int(inside[active].sum())}/{int(active.sum())}"
            f"  inactive {int(inside[~active].sum())}/{int((~active).sum())}"
            f"  mean length {float(np.mean(2.0 * result.half_widths[M])):.4f}"
        )

    print(f"\n{Colors.CYAN}Execution time: {end - start:.3f}s{Colors.RESET}")
    print("=" * 80)


def profile_time(config: DgpConfig) -> None:
    """Ejecuta profiling de tiempo con cProfile."""
    print(f"\n{Colors.BOLD}Running cProfile...{Colors.RESET}")
    print("=" * 80)

    profiler = cProfile.Profile()
    profiler.enable()

    _ = replicate(config)

    profiler.disable()
    profiler.dump_stats(PROFILE_OUTPUT)

    stats = pstats.Stats(profiler)
    stats.strip_dirs()
    stats.sort_stats('cumulative')

    print(f"\n{Colors.GREEN}Top 10 functions by cumulative time:{Colors.RESET}")
    print("-" * 80)
    stats.print_stats(10)

    print(f"\n{Colors.CYAN}Profile saved to: {PROFILE_OUTPUT}{Colors.RESET}")
    print(f"{Colors.YELLOW}Analyze with: python -m pstats {PROFILE_OUTPUT}{Colors.RESET}")
    print("=" * 80)


def profile_peak_rss(config: DgpConfig) -> None:
    """Pico de memoria residente con memory_profiler."""
    try:
        from memory_profiler import memory_usage
    except ImportError:
        print(f"{Colors.YELLOW}Warning: memory-profiler not installed, skipping peak RSS{Colors.RESET}")
        return

    peak = memory_usage((replicate, (config,)), interval=0.05, max_usage=True)
    print(f"\n{Colors.GREEN}Peak RSS: {float(np.max(peak)):.1f} MiB{Colors.RESET}")


def profile_memory(config: DgpConfig) -> None:
    """Ejecuta profiling de memoria con memray."""
    print(f"\n{Colors.BOLD}Running memray...{Colors.RESET}")
    print("=" * 80)

    try:
        import memray
    except ImportError:
        print(f"{Colors.YELLOW}Warning: memray not installed{Colors.RESET}")
        print(f"{Colors.CYAN}Install with: pip install memray{Colors.RESET}")
        print(f"{Colors.YELLOW}Skipping memory profiling...{Colors.RESET}")
        print("=" * 80)
        return

    Path(MEMRAY_OUTPUT).unlink(missing_ok=True)
    with memray.Tracker(MEMRAY_OUTPUT):
        _ = replicate(config)

    print(f"\n{Colors.GREEN}Memory profile saved to: {MEMRAY_OUTPUT}{Colors.RESET}")
    print(f"{Colors.YELLOW}Generate flamegraph with:{Colors.RESET}")
    print(f"  memray flamegraph {MEMRAY_OUTPUT}")
    print(f"{Colors.YELLOW}Generate stats with:{Colors.RESET}")
    print(f"  memray stats {MEMRAY_OUTPUT}")
    print("=" * 80)


def main() -> int:
    """Función principal que ejecuta todo el pipeline."""
    T = int(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_T
    p = int(sys.argv[2]) if len(sys.argv) > 2 else DEFAULT_P
    config = DgpConfig(T=T, p=p, seed=SEED)

    print("\n" + "=" * 80)
    print(f"{Colors.BOLD}{Colors.CYAN}Monte Carlo Replication (LASSO + nodewise + HAC){Colors.RESET}")
    print("=" * 80)

    # 1. Run and display results
    run_and_display_results(config)

    # 2. Profile time
    profile_time(config)

    # 3. Profile memory
    profile_peak_rss(config)
    profile_memory(config)

    # 4. Summary
    print("\n" + "=" * 80)
    print(f"{Colors.BOLD}{Colors.GREEN}Profiling Complete{Colors.RESET}")
    print("=" * 80)
    print(f"\n{Colors.CYAN}Generated files:{Colors.RESET}")
    print(f"  - {PROFILE_OUTPUT} (cProfile)")
    if Path(MEMRAY_OUTPUT).exists():
        print(f"  - {MEMRAY_OUTPUT} (memray)")
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
