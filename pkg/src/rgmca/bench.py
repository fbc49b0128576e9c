"""Monte-Carlo sweeps over outlier amplitude, corruption fraction and channel count."""
import csv
import sys
import dataclasses
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datagen import OutlierSpec, SourceSpec, gen_scene
from .gmca import gmca
from .metrics import delta_A, success
from .model import SolverParams
from .pcp import PcpParams, pcp_gmca
from .robust import nrgmca, rgmca

ALGORITHMS = {
    "gmca": lambda X, n, sp, pp: gmca(X, n, sp),
    "nrgmca": lambda X, n, sp, pp: nrgmca(X, n, sp),
    "rgmca": lambda X, n, sp, pp: rgmca(X, n, sp),
    "pcp_gmca": lambda X, n, sp, pp: pcp_gmca(X, n, sp, pp),
}
SWEEP_PARAMS = ("outlier_std", "corruption_fraction", "n_observations")
RECORD_HEADER = [
    "algorithm", "sweep_param", "sweep_value", "trial", "seed",
    "delta_A", "success", "wall_time_s", "converged",
]
SUMMARY_HEADER = ["algorithm", "sweep_value", "median_delta_A", "success_rate", "n_trials"]
# multiples of 1 / sqrt(max(m, t)) tried when PCP's lambda is tuned
DEFAULT_LAMBDA_GRID = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0)

_SCENE_STREAM = 0
_SOLVER_STREAM = 1
_PILOT_STREAM = 2


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class OutlierConfig:
    n_scattered: int = 0
    n_corrupted_columns: int = 0
    amplitude_std: float = 0.0
    # when set, overrides n_scattered with round(fraction * m * t)
    scattered_fraction: float | None = None


@dataclass(frozen=True)
class PcpConfig:
    # "tune", "default" (1/sqrt(max(m, t))) or a positive number
    lambda_pcp: object = "tune"
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    pilot_trials: int = 5
    tol: float = 1e-7
    max_iters: int = 500
    mu0: float | None = None
    rho: float = 1.5


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    m: int = 16
    n: int = 8
    t: int = 1024
    sigma: float = 0.1
    kernel_fwhm: float | None = None
    sources: SourceSpec = SourceSpec()
    outliers: OutlierConfig = OutlierConfig()
    sweep_param: str = "outlier_std"
    sweep_values: tuple = (100.0,)
    n_trials: int = 80
    base_seed: int = 0
    algorithms: tuple = ("gmca", "nrgmca", "rgmca", "pcp_gmca")
    solver: SolverParams = SolverParams()
    pcp: PcpConfig = PcpConfig()

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if not self.sweep_values:
            raise ConfigError("sweep values must be non-empty")
        if self.sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {self.sweep_param!r}")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown or not self.algorithms:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {sorted(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms must not repeat")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be unsigned")

    def scene_setup(self, value):
        """``(m, OutlierSpec)`` for one sweep value."""
        m = self.m
        o = self.outliers
        spec = dict(n_scattered=o.n_scattered, n_corrupted_columns=o.n_corrupted_columns, amplitude_std=o.amplitude_std)
        if self.sweep_param == "outlier_std":
            spec["amplitude_std"] = float(value)
        elif self.sweep_param == "corruption_fraction":
            # half the corrupted entries in full columns, half scattered
            cols = int(round(float(value) * self.t / 2.0))
            spec["n_corrupted_columns"] = cols
            spec["n_scattered"] = m * cols
        else:
            m = int(value)
            if m != value or m < self.n:
                raise ConfigError(f"number of observations must be an integer >= n, got {value}")
        if o.scattered_fraction is not None and self.sweep_param != "corruption_fraction":
            spec["n_scattered"] = int(round(o.scattered_fraction * m * self.t))
        try:
            outlier_spec = OutlierSpec(**spec)
            outlier_spec.check(m, self.t)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return m, outlier_spec

    def make_scene(self, value, seed):
        m, outlier_spec = self.scene_setup(value)
        rng = np.random.default_rng(np.random.SeedSequence([seed, _SCENE_STREAM]))
        return gen_scene(m, self.n, self.t, self.sources, outlier_spec, self.sigma, rng, self.kernel_fwhm)


@dataclass
class TrialRecord:
    algorithm: str
    sweep_param: str
    sweep_value: float
    trial: int
    seed: int
    delta_A: float
    success: bool
    wall_time: float
    converged: bool
    error: str = ""


def trial_seed(base_seed, sweep_index, trial_index, stream=_SCENE_STREAM):
    """64-bit seed for one trial, mixed from the base seed and the indices."""
    ss = np.random.SeedSequence([base_seed, stream, sweep_index, trial_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def solver_seed(seed):
    return int(np.random.SeedSequence([seed, _SOLVER_STREAM]).generate_state(1, dtype=np.uint64)[0])


def preset_experiment(name, n_trials=80, base_seed=0):
    """Configurations of the amplitude, count and observations sweeps."""
    if name == "amplitude":
        return ExperimentConfig(
            name="amplitude",
            outliers=OutlierConfig(n_scattered=160, n_corrupted_columns=10, amplitude_std=100.0),
            sweep_param="outlier_std",
            sweep_values=(5.0, 25.0, 100.0, 400.0, 1000.0),
            n_trials=n_trials,
            base_seed=base_seed,
        )
    if name == "count":
        return ExperimentConfig(
            name="count",
            outliers=OutlierConfig(amplitude_std=100.0),
            sweep_param="corruption_fraction",
            sweep_values=(0.0, 0.01, 0.02, 0.05, 0.1),
            n_trials=n_trials,
            base_seed=base_seed,
        )
    if name == "observations":
        return ExperimentConfig(
            name="observations",
            n=4,
            sigma=0.1,
            kernel_fwhm=2.0,
            sources=SourceSpec(activation=0.01, peak=100.0),
            outliers=OutlierConfig(n_corrupted_columns=20, amplitude_std=1e3, scattered_fraction=0.01),
            sweep_param="n_observations",
            sweep_values=(4, 5, 6, 8, 10, 16),
            n_trials=n_trials,
            base_seed=base_seed,
        )
    raise ConfigError(f"unknown preset {name!r}; choose amplitude, count or observations")


def _pcp_params(config, lam):
    p = config.pcp
    return PcpParams(lambda_pcp=lam, tol=p.tol, max_iters=p.max_iters, mu0=p.mu0, rho=p.rho)


def _run_one(algorithm, scene, config, seed, pcp_params):
    solver = dataclasses.replace(config.solver, rng_seed=solver_seed(seed))
    start = time.perf_counter()
    try:
        result = ALGORITHMS[algorithm](scene.X, config.n, solver, pcp_params)
        delta = delta_A(result.A_est, scene.A)
        converged, error = bool(result.converged), ""
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        delta, converged, error = math.inf, False, f"{type(exc).__name__}: {exc}"
    return delta, time.perf_counter() - start, converged, error


def tune_pcp_lambda(config, sweep_index, value):
    """Pick PCP's lambda by median delta_A over pilot scenes disjoint from the trials."""
    m, _ = config.scene_setup(value)
    unit = 1.0 / math.sqrt(max(m, config.t))
    best = None
    for mult in config.pcp.lambda_grid:
        lam = mult * unit
        deltas = []
        for p in range(config.pcp.pilot_trials):
            seed = trial_seed(config.base_seed, sweep_index, p, _PILOT_STREAM)
            scene = config.make_scene(value, seed)
            deltas.append(_run_one("pcp_gmca", scene, config, seed, _pcp_params(config, lam))[0])
        score = float(np.median(deltas))
        if best is None or score < best[0]:
            best = (score, lam)
    return best[1]


def _resolve_pcp(config, sweep_index, value):
    if "pcp_gmca" not in config.algorithms:
        return None
    lam = config.pcp.lambda_pcp
    if lam == "tune":
        lam = tune_pcp_lambda(config, sweep_index, value)
    elif lam == "default":
        lam = None
    return _pcp_params(config, lam)


def _run_trial(args):
    config, sweep_index, value, trial, pcp_params = args
    seed = trial_seed(config.base_seed, sweep_index, trial)
    scene = config.make_scene(value, seed)
    records = []
    for algorithm in config.algorithms:
        delta, wall, converged, error = _run_one(algorithm, scene, config, seed, pcp_params)
        records.append(
            TrialRecord(algorithm, config.sweep_param, value, trial, seed, delta, success(delta), wall, converged, error)
        )
    return sweep_index, trial, records


def run_sweep(config, workers=1, progress=None):
    """All (sweep value, trial, algorithm) records, in that deterministic order.

    Every algorithm of a trial sees the same scene.  ``workers > 1`` spreads
    trials over processes; the output does not depend on it.
    """
    pcp_by_value = [_resolve_pcp(config, i, v) for i, v in enumerate(config.sweep_values)]
    tasks = [
        (config, i, value, trial, pcp_by_value[i])
        for i, value in enumerate(config.sweep_values)
        for trial in range(config.n_trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_trial, tasks))
    else:
        outputs = []
        for task in tasks:
            outputs.append(_run_trial(task))
            if progress is not None:
                progress(len(outputs), len(tasks))
    outputs.sort(key=lambda item: (item[0], item[1]))
    return [rec for _, _, recs in outputs for rec in recs]


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    sweep_value: float
    median_delta_A: float
    success_rate: float
    n_trials: int


def summarize(records):
    """Median delta_A and success rate per (algorithm, sweep value)."""
    if not records:
        raise ValueError("no records to summarize")
    groups = {}
    for rec in records:
        groups.setdefault((rec.algorithm, rec.sweep_value), []).append(rec)
    algorithms = list(dict.fromkeys(r.algorithm for r in records))
    values = list(dict.fromkeys(r.sweep_value for r in records))
    rows = []
    for alg in algorithms:
        for value in values:
            group = groups.get((alg, value))
            if not group:
                continue
            deltas = np.array([r.delta_A for r in group], dtype=np.float64)
            rows.append(SummaryRow(
                alg, value, float(np.median(deltas)), sum(r.success for r in group) / len(group), len(group)
            ))
    return rows


def _fmt(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(x)


def records_to_csv(records, timings=False):
    """Records CSV text; wall times are written as ``nan`` unless ``timings``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in records:
        writer.writerow([
            r.algorithm, r.sweep_param, _fmt(r.sweep_value), r.trial, r.seed, _fmt(r.delta_A),
            int(r.success), _fmt(r.wall_time) if timings else "nan", int(r.converged),
        ])
    return buf.getvalue()


def read_records(text):
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != RECORD_HEADER:
        raise ValueError(f"unexpected records header {reader.fieldnames}")
    return [
        TrialRecord(
            row["algorithm"], row["sweep_param"], float(row["sweep_value"]), int(row["trial"]),
            int(row["seed"]), float(row["delta_A"]), row["success"] == "1",
            float(row["wall_time_s"]), row["converged"] == "1",
        )
        for row in reader
    ]


def summary_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for r in rows:
        writer.writerow([r.algorithm, _fmt(r.sweep_value), _fmt(r.median_delta_A), _fmt(r.success_rate), r.n_trials])
    return buf.getvalue()


_SECTIONS = {
    "scene": {"m", "n", "t", "sigma", "kernel_fwhm"},
    "sources": {"activation", "peak"},
    "outliers": {"n_scattered", "n_corrupted_columns", "amplitude_std", "scattered_fraction"},
    "sweep": {"parameter", "values"},
    "solver": {"outer_iters", "inner_iters", "final_threshold_multiplier", "pinv_tol", "schedule", "max_coherence"},
    "pcp": {"lambda", "lambda_grid", "pilot_trials", "tol", "max_iters", "mu0", "rho"},
}
_TOP = {"preset", "name", "n_trials", "base_seed", "algorithms"}


def config_from_dict(data, n_trials=None):
    """Build an :class:`ExperimentConfig` from parsed config-file content.

    Fields left out keep the values of ``preset`` (or the dataclass
    defaults); unknown sections or keys raise :class:`ConfigError`.
    """
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a section")
            extra = set(value) - _SECTIONS[key]
            if extra:
                raise ConfigError(f"unknown keys in [{key}]: {sorted(extra)}")
        elif key not in _TOP:
            raise ConfigError(f"unknown key {key!r}")
    base = preset_experiment(data["preset"]) if "preset" in data else ExperimentConfig()
    scene = data.get("scene", {})
    sweep = data.get("sweep", {})
    pcp = dict(data.get("pcp", {}))
    if "lambda" in pcp:
        pcp["lambda_pcp"] = pcp.pop("lambda")
        lam = pcp["lambda_pcp"]
        if not (lam in ("tune", "default") or (isinstance(lam, (int, float)) and lam > 0)):
            raise ConfigError(f"pcp.lambda must be 'tune', 'default' or a positive number, got {lam!r}")
    if "lambda_grid" in pcp:
        pcp["lambda_grid"] = tuple(float(v) for v in pcp["lambda_grid"])
    try:
        return dataclasses.replace(
            base,
            name=data.get("name", base.name),
            m=scene.get("m", base.m),
            n=scene.get("n", base.n),
            t=scene.get("t", base.t),
            sigma=float(scene.get("sigma", base.sigma)),
            kernel_fwhm=scene.get("kernel_fwhm", base.kernel_fwhm),
            sources=dataclasses.replace(base.sources, **data.get("sources", {})),
            outliers=dataclasses.replace(base.outliers, **data.get("outliers", {})),
            sweep_param=sweep.get("parameter", base.sweep_param),
            sweep_values=tuple(sweep.get("values", base.sweep_values)),
            n_trials=n_trials if n_trials is not None else data.get("n_trials", base.n_trials),
            base_seed=data.get("base_seed", base.base_seed),
            algorithms=tuple(data.get("algorithms", base.algorithms)),
            solver=dataclasses.replace(base.solver, **data.get("solver", {})),
            pcp=dataclasses.replace(base.pcp, **pcp),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, n_trials=None):
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, n_trials)
