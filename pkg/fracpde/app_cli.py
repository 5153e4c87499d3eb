"""
Interfaz de línea de órdenes de fracpde.

Subcomandos:
- solve <escenario.json>: valida el escenario, resuelve y escribe los artefactos
- verify [suite]: ejecuta la batería de invariantes
- bench [--sizes ...]: mide tiempos de los núcleos principales
- inspect <instantánea>: muestra la cabecera y las normas de un fichero FPDE
- history: lista las ejecuciones registradas

Códigos de salida: 0 correcto, 2 configuración, 3 divergencia o no
convergencia, 4 violación de un invariante.
"""

import argparse
import contextlib
import hashlib
import inspect as pyinspect
import json
import logging
import os
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy
import sqlalchemy
from jsonschema import ValidationError, validate

import nonlinear_solver
import quasilinear_solver
import run_registry
import verification
from errors import (ConfigError, DivergenceError, EllipticityError, FieldError, GridError,
                    HypothesisError, InvariantViolation)
from linear_solver import LinearCoefficients, StepperConfig, Trajectory, solve_linear, step_linear
from norms_diag import norm_report
from quasilinear_solver import PicardConfig, picard_step, solve_quasilinear
from snapshots import read_snapshot, write_csv, write_heatmap, write_snapshot
from spectral_core import (Grid, ScalarField, apply_multiplier, band_limited_field,
                           fractional_laplacian)

logger = logging.getLogger(__name__)

__version__ = "0.1.0"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_INVARIANT = 4

OUTPUT_ROOT_ENV = "FRACPDE_OUTPUT_ROOT"
SCHEMA_FILE = "scenario_schema.json"
LINEAR_PRESETS = ("constant", "smooth-regression", "snapshot")
DEFAULT_BENCH_SIZES = (32, 64, 128, 256)
BENCH_KERNELS = ("multiplier", "step", "picard")


@dataclass
class ScenarioConfig:
    """
    Escenario validado.

    Args:
        data: contenido del fichero tras la validación
        base_dir: directorio del fichero (para rutas relativas)
    """

    data: Dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def load_schema(cls) -> Dict:
        """Carga el esquema JSON de escenarios"""
        schema_path = os.path.join(os.path.dirname(__file__), SCHEMA_FILE)
        with open(schema_path, "r", encoding="utf-8") as f:
            return json.load(f)

    @classmethod
    def check_schema(cls, data: Dict) -> bool:
        """Valida los datos contra el esquema JSON"""
        validate(instance=data, schema=cls.load_schema())
        return True

    @classmethod
    def from_dict(cls, data: Dict, base_dir: Optional[Path] = None) -> "ScenarioConfig":
        try:
            cls.check_schema(data)
        except ValidationError as exc:
            location = "/".join(str(p) for p in exc.absolute_path) or "<raíz>"
            raise ConfigError(f"Escenario inválido en '{location}': {exc.message}") from exc
        config = cls(data, base_dir or Path.cwd())
        config.check_semantics()
        return config

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"No se puede leer el escenario {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"El escenario {path} no es JSON válido: {exc}") from exc
        return cls.from_dict(data, path.resolve().parent)

    def section(self, name: str) -> Dict:
        return dict(self.data.get(name, {}))

    @property
    def solver(self) -> str:
        return self.data["scenario"]["solver"]

    @property
    def preset(self) -> str:
        default = "constant" if self.solver == "linear" else None
        return self.data["scenario"].get("preset", default)

    @property
    def seed(self) -> int:
        return int(self.data["scenario"].get("seed", 0))

    @property
    def name(self) -> str:
        return self.data["scenario"]["name"]

    @property
    def output_dir(self) -> str:
        return self.data["scenario"].get("output_dir", self.name)

    @property
    def emit(self) -> List[str]:
        return list(self.data["scenario"].get("emit", ["csv", "snapshots"]))

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def _preset_factory(self):
        if self.solver == "quasilinear":
            return quasilinear_solver.PRESETS.get(self.preset)
        if self.solver == "fully-nonlinear":
            return nonlinear_solver.PRESETS.get(self.preset)
        return None

    def check_semantics(self):
        """Comprobaciones que el esquema no expresa"""
        dim = self.data["grid"]["dim"]
        if self.solver == "linear":
            if self.preset not in LINEAR_PRESETS:
                raise ConfigError(f"Preset lineal desconocido '{self.preset}', opciones: {LINEAR_PRESETS}")
            if self.section("parameters"):
                raise ConfigError("El resolvedor lineal no admite la sección 'parameters'")
        else:
            if self.preset is None:
                raise ConfigError(f"El resolvedor '{self.solver}' necesita 'scenario.preset'")
            factory = self._preset_factory()
            if factory is None:
                known = sorted((quasilinear_solver.PRESETS if self.solver == "quasilinear"
                                else nonlinear_solver.PRESETS))
                raise ConfigError(f"Preset '{self.preset}' desconocido para '{self.solver}', opciones: {known}")
            accepted = set(pyinspect.signature(factory).parameters) - {"grid"}
            unknown = set(self.section("parameters")) - accepted
            if unknown:
                raise ConfigError(f"Parámetros {sorted(unknown)} no aplicables a '{self.preset}'; "
                                  f"admitidos: {sorted(accepted)}")
            if self.section("coefficients"):
                raise ConfigError("La sección 'coefficients' sólo se aplica al resolvedor lineal")
        if self.preset == "sqg" and dim != 2:
            raise ConfigError("El escenario 'sqg' necesita dim = 2")
        if self.preset == "frozen-burgers-1d" and dim != 1:
            raise ConfigError("El escenario 'frozen-burgers-1d' necesita dim = 1")
        coefficients = self.section("coefficients")
        paths = {"a_path", "b_paths", "f_path"} & set(coefficients)
        if self.preset == "snapshot":
            if "a_path" not in coefficients:
                raise ConfigError("El preset lineal 'snapshot' necesita 'coefficients.a_path'")
            if "a" in coefficients:
                raise ConfigError("'a' y 'a_path' son incompatibles")
        elif paths:
            raise ConfigError(f"{sorted(paths)} sólo se aplican al preset lineal 'snapshot'")
        for key in ("b", "b_paths"):
            drift = coefficients.get(key)
            if drift is not None and len(drift) != dim:
                raise ConfigError(f"La deriva '{key}' tiene {len(drift)} componentes y la malla dim = {dim}")
        if "b" in coefficients and "b_paths" in coefficients:
            raise ConfigError("'b' y 'b_paths' son incompatibles")
        if "f" in coefficients and "f_path" in coefficients:
            raise ConfigError("'f' y 'f_path' son incompatibles")
        if ("a0" in coefficients and self.preset != "snapshot"
                and coefficients["a0"] > coefficients.get("a", 1.0)):
            raise ConfigError(f"a0={coefficients['a0']} supera el coeficiente a={coefficients.get('a', 1.0)}")
        initial = self.section("initial")
        if initial.get("kind") == "snapshot" and "path" not in initial:
            raise ConfigError("El dato inicial 'snapshot' necesita 'path'")
        params = self.section("parameters")
        if self.preset == "remark-class" and params.get("c_q", 1.0) <= abs(params.get("c_s", 0.5)):
            raise ConfigError("El preset 'remark-class' necesita c_q > |c_s|")

    def grid(self) -> Grid:
        spec = self.section("grid")
        return Grid(spec["dim"], spec["n_per_axis"], float(spec.get("period", 2.0 * np.pi)))

    def stepper(self) -> StepperConfig:
        return StepperConfig(**self.section("stepper"))

    def iteration(self, name: str) -> PicardConfig:
        return PicardConfig(seed=self.seed, **self.section(name))

    def initial(self, grid: Grid) -> ScalarField:
        spec = self.section("initial") or {"kind": "cos"}
        amplitude = float(spec.get("amplitude", 1.0))
        scale = 2.0 * np.pi / grid.period
        kind = spec["kind"]
        if kind == "cos":
            return ScalarField(grid, amplitude * np.cos(scale * grid.coordinates[0]))
        if kind == "cos-product":
            return ScalarField(grid, amplitude * np.prod(np.cos(scale * grid.coordinates), axis=0))
        if kind == "random":
            k_max = int(spec.get("k_max", 4))
            if 2 * k_max >= grid.n_per_axis:
                raise ConfigError(f"k_max={k_max} es demasiado grande para N={grid.n_per_axis}")
            return band_limited_field(grid, np.random.default_rng(self.seed), k_max, amplitude)
        field_ = self.load_snapshot(spec["path"], grid)
        return field_ * amplitude if "amplitude" in spec else field_

    def load_snapshot(self, relative: str, grid: Grid) -> ScalarField:
        """Lee una instantánea (ruta relativa al escenario) y exige la malla dada"""
        path = Path(relative)
        if not path.is_absolute():
            path = self.base_dir / path
        try:
            field_ = read_snapshot(path)
        except (OSError, FieldError, GridError) as exc:
            raise ConfigError(f"No se puede usar la instantánea {path}: {exc}") from exc
        if field_.grid != grid:
            raise ConfigError(f"La instantánea {path} usa otra malla ({field_.grid})")
        return field_

    def snapshot_coefficients(self, grid: Grid) -> LinearCoefficients:
        """
        Coeficientes a, b, f leídos de instantáneas FPDE.

        a0 por defecto es min a; se rechaza a con min a < a0 o por encima de a1.
        """
        spec = self.section("coefficients")
        a = self.load_snapshot(spec["a_path"], grid).values
        a_min = float(a.min())
        a0 = float(spec.get("a0", a_min))
        a1 = float(spec.get("a1", np.inf))
        if not a_min > 0 or a_min < a0:
            raise ConfigError(f"La difusión de {spec['a_path']} no es elíptica: min a = {a_min:.6g}, a0 = {a0}")
        if float(a.max()) > a1:
            raise ConfigError(f"La difusión de {spec['a_path']} supera a1 = {a1}")
        if "b_paths" in spec:
            b = np.stack([self.load_snapshot(p, grid).values for p in spec["b_paths"]])
        else:
            b = LinearCoefficients.constant(grid, b=spec.get("b")).b
        f = self.load_snapshot(spec["f_path"], grid).values if "f_path" in spec else float(spec.get("f", 0.0))
        return LinearCoefficients(grid, a=a, b=b, f=f, a0=a0, a1=a1)

    def linear_coefficients(self, grid: Grid) -> LinearCoefficients:
        if self.preset == "smooth-regression":
            return verification.regression_coefficients(grid)
        if self.preset == "snapshot":
            return self.snapshot_coefficients(grid)
        spec = self.section("coefficients")
        a = float(spec.get("a", 1.0))
        return replace(LinearCoefficients.constant(grid, a, spec.get("b"), float(spec.get("f", 0.0)),
                                                   spec.get("a0")),
                       a1=float(spec.get("a1", np.inf)))

    def problem(self, grid: Grid):
        return self._preset_factory()(grid, **self.section("parameters"))


@dataclass
class ScenarioOutcome:
    """Trayectoria de u y diagnósticos asociados"""

    trajectory: Trajectory
    exit_code: int = EXIT_OK
    convergence: Optional[pd.DataFrame] = None
    consistency: Optional[pd.DataFrame] = None
    messages: List[str] = field(default_factory=list)


def solve_scenario(config: ScenarioConfig, phi: ScalarField) -> ScenarioOutcome:
    """
    Ejecuta el resolvedor del escenario sobre el dato inicial.

    Las excepciones del resolvedor se propagan; los fallos señalizados por
    indicadores (no convergencia, cotas) se traducen a códigos de salida.
    """
    grid = phi.grid
    stepper = config.stepper()
    if config.solver == "linear":
        coefficients = config.linear_coefficients(grid)
        trajectory = solve_linear(phi, coefficients, stepper)
        outcome = ScenarioOutcome(trajectory)
        if trajectory.sup_bound_excess() > 0:
            outcome.exit_code = EXIT_INVARIANT
            outcome.messages.append("Se viola la cota ‖u(t)‖∞ <= ‖u₀‖∞ + ∫‖f‖∞")
        return outcome
    if config.solver == "quasilinear":
        result = solve_quasilinear(phi, config.problem(grid), config.iteration("picard"), stepper)
        trajectory = result.trajectory
        if stepper.snapshot_stride > 1:
            trajectory = trajectory.subsample(stepper.snapshot_stride)
        outcome = ScenarioOutcome(trajectory, convergence=result.convergence_frame())
        if not result.converged:
            outcome.exit_code = EXIT_DIVERGENCE
            outcome.messages.append("La iteración de Picard no convergió")
        elif result.bound_satisfied is False:
            outcome.exit_code = EXIT_INVARIANT
            outcome.messages.append("Se viola la cota sup del sistema cuasi-lineal")
        return outcome
    result = nonlinear_solver.solve_fully_nonlinear(phi, config.problem(grid), stepper,
                                                    config.iteration("picard"), config.iteration("outer"))
    outcome = ScenarioOutcome(result.u, convergence=result.convergence_frame(),
                              consistency=result.consistency.to_frame())
    if not result.converged:
        outcome.exit_code = EXIT_DIVERGENCE
        outcome.messages.append("La iteración externa no convergió")
    elif result.bound_satisfied is False:
        outcome.exit_code = EXIT_INVARIANT
        outcome.messages.append("Se viola la cota sup de la ecuación totalmente no lineal")
    elif not result.consistent:
        outcome.exit_code = EXIT_INVARIANT
        outcome.messages.append("Fallo de consistencia del gradiente (‖∇u - w‖ o rotacional)")
    return outcome


def diagnostics_frame(outcome: ScenarioOutcome) -> pd.DataFrame:
    """time, sup_norm, l2_norm, holder_half y, si procede, h_residual"""
    trajectory = outcome.trajectory
    frame = trajectory.diagnostics[["time", "sup_norm", "l2_norm"]].copy()
    frame["holder_half"] = trajectory.holder_series(0.5).to_numpy()
    if outcome.consistency is not None:
        consistency = outcome.consistency.dropna(subset=["h_residual"])
        frame["h_residual"] = np.interp(frame["time"], consistency["time"], consistency["h_residual"])
    return frame


def library_versions() -> Dict[str, str]:
    return {
        "fracpde": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "sqlalchemy": sqlalchemy.__version__,
    }


def output_root(override=None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


def write_artifacts(directory: Path, config: ScenarioConfig, outcome: ScenarioOutcome) -> Dict:
    """Escribe los artefactos de la ejecución y devuelve {tipo: rutas} y los rangos de los mapas"""
    artifacts: Dict[str, List[str]] = {}
    ranges: Dict[str, List[float]] = {}
    diagnostics = directory / "diagnostics.csv"
    diagnostics_frame(outcome).to_csv(diagnostics, index=False, float_format="%.17g")
    artifacts["diagnostics"] = [str(diagnostics)]
    if outcome.convergence is not None:
        path = directory / "convergence.csv"
        outcome.convergence.to_csv(path, index=False, float_format="%.17g")
        artifacts["convergence"] = [str(path)]
    if outcome.consistency is not None:
        path = directory / "consistency.csv"
        outcome.consistency.to_csv(path, index=False, float_format="%.17g")
        artifacts["consistency"] = [str(path)]
    fields = outcome.trajectory.fields
    for kind, folder, suffix in (("snapshots", "snapshots", "fpde"), ("csv", "fields", "csv"),
                                 ("heatmaps", "heatmaps", "ppm")):
        if kind not in config.emit:
            continue
        (directory / folder).mkdir(exist_ok=True)
        paths = []
        for index, field_ in enumerate(fields):
            path = directory / folder / f"u_{index:04d}.{suffix}"
            if kind == "snapshots":
                write_snapshot(path, field_)
            elif kind == "csv":
                write_csv(path, field_)
            else:
                ranges[path.name] = list(write_heatmap(path, field_))
            paths.append(str(path))
        artifacts[kind] = paths
    return {"artifacts": artifacts, "heatmap_ranges": ranges}


def run_scenario(config_path, root=None) -> int:
    """
    Ejecuta un escenario completo: validación, resolución, artefactos y registro.

    Args:
        config_path: fichero JSON del escenario
        root: directorio raíz de salida (por defecto FRACPDE_OUTPUT_ROOT o el actual)

    Returns:
        int: código de salida
    """
    try:
        config = ScenarioConfig.from_file(config_path)
        grid = config.grid()
        phi = config.initial(grid)
        config.stepper()
        if config.solver == "linear":
            config.linear_coefficients(grid)
        else:
            config.iteration("picard")
            config.iteration("outer")
            config.problem(grid)
    except (ConfigError, GridError, ValueError) as exc:
        logger.error(f"Configuración rechazada: {exc}")
        return EXIT_CONFIG

    base = output_root(root)
    directory = base / config.output_dir
    directory.mkdir(parents=True, exist_ok=True)
    logger.info(f"Escenario '{config.name}' ({config.solver}/{config.preset}) -> {directory}")
    started = time.perf_counter()
    files: Dict = {"artifacts": {}, "heatmap_ranges": {}}
    messages: List[str] = []
    try:
        outcome = solve_scenario(config, phi)
        files = write_artifacts(directory, config, outcome)
        exit_code = outcome.exit_code
        messages = outcome.messages
    except DivergenceError as exc:
        exit_code, messages = EXIT_DIVERGENCE, [str(exc)]
    except (EllipticityError, HypothesisError, InvariantViolation) as exc:
        exit_code, messages = EXIT_INVARIANT, [str(exc)]
    except (ConfigError, ValueError) as exc:
        # sin manifiesto ni registro: un error de configuración no es una ejecución
        logger.error(f"Configuración rechazada: {exc}")
        with contextlib.suppress(OSError):
            directory.rmdir()
        return EXIT_CONFIG
    elapsed = time.perf_counter() - started
    for message in messages:
        logger.error(message)

    versions = library_versions()
    manifest = {
        "scenario": config.name,
        "solver": config.solver,
        "preset": config.preset,
        "config_hash": config.config_hash,
        "seed": config.seed,
        "versions": versions,
        "exit_code": exit_code,
        "messages": messages,
        **files,
    }
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False), encoding="utf-8")
    files["artifacts"]["manifest"] = [str(manifest_path)]

    Session = run_registry.open_registry(base)
    session = Session()
    try:
        run_registry.record_run(session, config_hash=config.config_hash, scenario=config.name,
                                solver=config.solver, preset=config.preset, seed=config.seed,
                                output_dir=str(directory), exit_code=exit_code,
                                elapsed_seconds=elapsed, versions=json.dumps(versions),
                                artifacts=files["artifacts"])
    finally:
        session.close()
    logger.info(f"Escenario terminado con código {exit_code} en {elapsed:.2f} s")
    return exit_code


def verify(selector: str = "all", output=None) -> int:
    try:
        results = verification.run_checks(selector)
    except ValueError as exc:
        logger.error(str(exc))
        return EXIT_CONFIG
    frame = verification.results_frame(results)
    if output is not None:
        frame.to_csv(output, index=False, float_format="%.17g")
    print(frame.to_string(index=False))
    failed = int((~frame["passed"]).sum())
    if failed:
        logger.error(f"{failed} de {len(frame)} comprobaciones fallaron")
        return EXIT_INVARIANT
    logger.info(f"Las {len(frame)} comprobaciones pasaron")
    return EXIT_OK


def _bench_kernel(kernel: str, n: int, dim: int):
    """Devuelve una función sin argumentos que ejecuta una vez el núcleo"""
    if kernel == "picard":
        grid = Grid(2, n)
        x, y = grid.coordinates
        phi = ScalarField(grid, np.cos(x) * np.cos(y))
        problem = quasilinear_solver.sqg_problem(grid)
        stepper = StepperConfig(t_end=0.05, dt=0.01)
        seed = solve_linear(phi, LinearCoefficients.constant(grid), stepper)
        return lambda: picard_step(seed, problem, stepper, phi)
    grid = Grid(dim, n)
    f = band_limited_field(grid, np.random.default_rng(0), min(8, n // 4 - 1))
    if kernel == "multiplier":
        op = fractional_laplacian(grid, 1.0)
        return lambda: apply_multiplier(op, f)
    coefficients = verification.regression_coefficients(grid)
    stepper = StepperConfig(t_end=1.0, dt=1e-3)
    return lambda: step_linear(f, 0.0, 1e-3, coefficients, stepper)


def bench(kernels: Sequence[str], sizes: Sequence[int], dim: int = 2, repeats: int = 5) -> pd.DataFrame:
    """
    Mediana de `repeats` ejecuciones por núcleo y tamaño.

    Args:
        kernels: subconjunto de BENCH_KERNELS
        sizes: puntos por eje (potencias de dos)
        dim: dimensión de las mallas ('picard' usa siempre 2D)
        repeats: repeticiones por medida (>= 5)

    Returns:
        pd.DataFrame: kernel, n, dim, repeats, median_seconds
    """
    if repeats < 5:
        raise ValueError(f"Se necesitan al menos 5 repeticiones, se pidieron {repeats}")
    rows = []
    for kernel in kernels:
        for n in sizes:
            run = _bench_kernel(kernel, n, dim)
            run()
            timings = []
            for _ in range(repeats):
                start = time.perf_counter()
                run()
                timings.append(time.perf_counter() - start)
            median = float(np.median(timings))
            logger.info(f"{kernel} N={n}: mediana {median:.4g} s")
            rows.append({"kernel": kernel, "n": n, "dim": 2 if kernel == "picard" else dim,
                         "repeats": repeats, "median_seconds": median})
    return pd.DataFrame(rows, columns=["kernel", "n", "dim", "repeats", "median_seconds"])


def inspect_snapshot(path) -> int:
    try:
        field_ = read_snapshot(path)
    except (OSError, FieldError, GridError) as exc:
        logger.error(f"No se puede leer {path}: {exc}")
        return EXIT_CONFIG
    grid = field_.grid
    print(f"dim={grid.dim} n_per_axis={grid.n_per_axis} period={grid.period:.17g}")
    report = norm_report(field_, ps=(1.0, 2.0), sobolev=((1.0, 2.0),), holders=(0.5,), u_kp=((1, 2.0),))
    for name, value in report.to_rows():
        print(f"{name}\t{value:.17g}")
    return EXIT_OK


def history(root=None, limit: Optional[int] = None) -> int:
    Session = run_registry.open_registry(output_root(root))
    session = Session()
    try:
        runs = [run.to_dict() for run in run_registry.list_runs(session, limit)]
    finally:
        session.close()
    if not runs:
        print("No hay ejecuciones registradas")
    else:
        print(pd.DataFrame(runs).to_string(index=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracpde",
                                     description="Resolvedor pseudo-espectral de ecuaciones parabólicas no locales")
    parser.add_argument("--verbose", action="store_true", help="mensajes de depuración")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="resuelve un escenario")
    solve.add_argument("config", help="fichero JSON del escenario")
    solve.add_argument("--output-root", default=None, help="directorio raíz de salida")

    check = commands.add_parser("verify", help="ejecuta la batería de invariantes")
    check.add_argument("suite", nargs="?", default="all", help="suite, suite.comprobación o 'all'")
    check.add_argument("--output", default=None, help="CSV con los resultados")

    timing = commands.add_parser("bench", help="mide tiempos de los núcleos")
    timing.add_argument("--kernel", choices=BENCH_KERNELS + ("all",), default="all")
    timing.add_argument("--sizes", type=int, nargs="*", default=list(DEFAULT_BENCH_SIZES))
    timing.add_argument("--dim", type=int, choices=(1, 2, 3), default=2)
    timing.add_argument("--repeats", type=int, default=5)
    timing.add_argument("--output", default=None, help="CSV de tiempos (por defecto, salida estándar)")

    show = commands.add_parser("inspect", help="cabecera y normas de una instantánea")
    show.add_argument("snapshot")

    runs = commands.add_parser("history", help="ejecuciones registradas")
    runs.add_argument("--output-root", default=None)
    runs.add_argument("--limit", type=int, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    if args.command == "solve":
        return run_scenario(args.config, args.output_root)
    if args.command == "verify":
        return verify(args.suite, args.output)
    if args.command == "bench":
        kernels = BENCH_KERNELS if args.kernel == "all" else (args.kernel,)
        try:
            frame = bench(kernels, args.sizes, args.dim, args.repeats)
        except (ValueError, GridError) as exc:
            logger.error(str(exc))
            return EXIT_CONFIG
        if args.output is None:
            frame.to_csv(sys.stdout, index=False)
        else:
            frame.to_csv(args.output, index=False)
        return EXIT_OK
    if args.command == "inspect":
        return inspect_snapshot(args.snapshot)
    return history(args.output_root, args.limit)


if __name__ == "__main__":
    sys.exit(main())
