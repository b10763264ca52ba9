from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from src.fopid.objective import (
    DEFAULT_WEIGHTS,
    FRACTIONAL,
    INTEGER,
    MODES,
    ResidualBreakdown,
    ResidualObjective,
    make_objective,
    residual,
)
from src.fopid.pole_placement import (
    DampingSpec,
    DesignSpec,
    DominantPoles,
    SpecError,
    dominant_poles,
    parse_overshoot,
)
from src.fopid.simulator import (
    MetricError,
    ResponseMetrics,
    SimulationConfig,
    SimulationError,
    StepResponse,
    measure_metrics,
    simulate_step,
)
from src.fopid.transfer_function import (
    ControllerParams,
    FractionalTransferFunction,
    TransferFunctionError,
    closed_loop,
    controller_tf,
)
from src.optimizers import (
    RUNNERS,
    DEConfig,
    OptimizerConfig,
    OptimizerConfigError,
    PSOConfig,
    RunResult,
    multi_restart,
)

ALGORITHMS = tuple(RUNNERS)
DEFAULT_RESTARTS = 10

# rank of a candidate in the selection key, lower is better
SPEC_MET_RANK = 0
SPEC_MISSED_RANK = 1
DISQUALIFIED_RANK = 2


@dataclass(frozen=True)
class DesignProblem:
    """A complete controller design problem, usually read from a JSON file."""

    plant: FractionalTransferFunction
    spec: DesignSpec
    mode: str = FRACTIONAL
    algorithm: str = "de"
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    weights: Tuple[float, float, float] = DEFAULT_WEIGHTS
    optimizer: Dict[str, Any] = field(default_factory=dict)
    simulation: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ProblemFileError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.algorithm not in ALGORITHMS:
            raise ProblemFileError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        if self.restarts < 1:
            raise ProblemFileError(f"restarts must be >= 1, got {self.restarts}")
        if len(self.weights) != 3 or any(weight < 0 for weight in self.weights):
            raise ProblemFileError(
                f"weights must be three nonnegative numbers, got {self.weights}"
            )

    def with_overrides(self, **overrides) -> DesignProblem:
        """Copy with the given fields replaced, skipping ``None`` values."""
        return replace(
            self,
            **{key: value for key, value in overrides.items() if value is not None},
        )

    def optimizer_config(self) -> OptimizerConfig:
        config_class = PSOConfig if self.algorithm == "pso" else DEConfig
        try:
            return config_class(**{**self.optimizer, "seed": self.seed})
        except TypeError as error:
            raise ProblemFileError(
                f"Bad optimizer settings {self.optimizer} for {self.algorithm}: {error}"
            ) from error

    def simulation_config(self, damping: DampingSpec) -> SimulationConfig:
        try:
            return SimulationConfig.for_damping(damping, **self.simulation)
        except (TypeError, ValueError) as error:
            raise ProblemFileError(
                f"Bad simulation settings {self.simulation}: {error}"
            ) from error

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> DesignProblem:
        """Build a problem from the JSON problem-file schema."""
        if not isinstance(data, dict):
            raise ProblemFileError(
                f"A problem file holds a JSON object, got {type(data).__name__}"
            )
        if not isinstance(data.get("spec"), dict):
            raise ProblemFileError(
                "'spec' must be an object with 'mp' and 't_rise', "
                f"got {data.get('spec')!r}"
            )
        try:
            plant = FractionalTransferFunction.from_dict(data["plant"])
            spec_data = data["spec"]
            spec = DesignSpec(
                mp=parse_overshoot(spec_data["mp"]), t_rise=float(spec_data["t_rise"])
            )
            return cls(
                plant=plant,
                spec=spec,
                mode=data.get("mode", FRACTIONAL),
                algorithm=data.get("algorithm", "de"),
                restarts=int(data.get("restarts", DEFAULT_RESTARTS)),
                seed=int(data.get("seed", 0)),
                weights=tuple(float(w) for w in data.get("weights", DEFAULT_WEIGHTS)),
                optimizer=dict(data.get("optimizer", {})),
                simulation=dict(data.get("simulation", {})),
            )
        except ProblemFileError:
            raise
        except KeyError as error:
            raise ProblemFileError(f"Problem file is missing {error}") from error
        except (TransferFunctionError, SpecError) as error:
            raise ProblemFileError(str(error)) from error
        except (TypeError, ValueError, AttributeError) as error:
            raise ProblemFileError(f"Malformed problem file: {error}") from error

    @classmethod
    def from_json(cls, problem_file: Path) -> DesignProblem:
        try:
            with open(problem_file, "r", encoding="utf-8") as in_f:
                data = json.load(in_f)
        except (OSError, json.JSONDecodeError) as error:
            raise ProblemFileError(f"Cannot read {problem_file}: {error}") from error
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "plant": self.plant.to_dict(),
            "spec": {"mp": self.spec.mp, "t_rise": self.spec.t_rise},
            "mode": self.mode,
            "algorithm": self.algorithm,
            "restarts": self.restarts,
            "seed": self.seed,
            "weights": list(self.weights),
            "optimizer": dict(self.optimizer),
            "simulation": dict(self.simulation),
        }


@dataclass(frozen=True)
class Candidate:
    """One optimizer run judged by its simulated closed-loop response."""

    run_index: int
    params: Optional[ControllerParams]
    residual: Optional[ResidualBreakdown]
    metrics: Optional[ResponseMetrics]
    spec_met: bool
    diagnostic: str = ""

    @property
    def qualified(self) -> bool:
        return self.metrics is not None

    def selection_key(self) -> Tuple[int, float, float]:
        """Meets spec first, then lowest overshoot, then lowest rise time."""
        if self.metrics is None:
            return (DISQUALIFIED_RANK, math.inf, math.inf)

        rank = SPEC_MET_RANK if self.spec_met else SPEC_MISSED_RANK
        rise_time = self.metrics.rise_time
        return (
            rank,
            self.metrics.overshoot_fraction,
            math.inf if rise_time is None else rise_time,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_index": self.run_index,
            "params": None if self.params is None else self.params.to_dict(),
            "residual": None if self.residual is None else self.residual.to_dict(),
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "spec_met": self.spec_met,
            "diagnostic": self.diagnostic,
        }


def meets_spec(metrics: ResponseMetrics, spec: DesignSpec) -> bool:
    """Overshoot and 0-100 % rise time within the design spec; a response
    that never reaches its steady state fails."""
    if metrics.rise_time is None:
        return False
    return metrics.overshoot_fraction <= spec.mp and metrics.rise_time <= spec.t_rise


class ResponseSelector:
    """Selection key for ``multi_restart`` that simulates each converged run's
    closed loop. Candidates are kept in ``candidates`` in the order the runs
    were judged."""

    def __init__(
        self,
        plant: FractionalTransferFunction,
        objective: ResidualObjective,
        spec: DesignSpec,
        simulation_config: SimulationConfig,
    ):
        self.plant = plant
        self.objective = objective
        self.spec = spec
        self.simulation_config = simulation_config
        self.candidates: List[Candidate] = []

    def __call__(self, run: RunResult) -> Tuple[int, float, float]:
        candidate = self.judge(len(self.candidates), run)
        self.candidates.append(candidate)
        return candidate.selection_key()

    def judge(self, run_index: int, run: RunResult) -> Candidate:
        params = self.objective.params_from_position(run.best_position)
        breakdown = self.objective.breakdown(run.best_position)

        if not run.converged:
            return Candidate(
                run_index,
                params,
                breakdown,
                None,
                False,
                f"did not converge (best fitness {run.best_fitness:.3g})",
            )

        try:
            tf = closed_loop(self.plant, controller_tf(params))
            response = simulate_step(tf, self.simulation_config)
            metrics = measure_metrics(response)
        except (SimulationError, MetricError, TransferFunctionError) as error:
            logging.warning("Run %d disqualified: %s", run_index, error)
            return Candidate(run_index, params, breakdown, None, False, str(error))

        spec_met = meets_spec(metrics, self.spec)
        logging.info(
            "Run %d: overshoot %.1f %%, rise time %s, spec met: %s",
            run_index,
            100 * metrics.overshoot_fraction,
            "-" if metrics.rise_time is None else f"{metrics.rise_time:.3f} s",
            spec_met,
        )
        return Candidate(run_index, params, breakdown, metrics, spec_met)


@dataclass(frozen=True)
class DesignReport:
    """Everything a design run produced, with the selected controller."""

    problem: DesignProblem
    damping: DampingSpec
    poles: DominantPoles
    all_runs: Tuple[RunResult, ...]
    candidates: Tuple[Candidate, ...]
    selected_index: Optional[int]
    diagnostic: str = ""

    @property
    def selected_candidate(self) -> Optional[Candidate]:
        if self.selected_index is None:
            return None
        return self.candidates[self.selected_index]

    @property
    def selected(self) -> Optional[ControllerParams]:
        candidate = self.selected_candidate
        return None if candidate is None else candidate.params

    @property
    def residual(self) -> Optional[ResidualBreakdown]:
        candidate = self.selected_candidate
        return None if candidate is None else candidate.residual

    @property
    def metrics(self) -> Optional[ResponseMetrics]:
        candidate = self.selected_candidate
        return None if candidate is None else candidate.metrics

    @property
    def spec_met(self) -> bool:
        candidate = self.selected_candidate
        return candidate is not None and candidate.spec_met

    @property
    def any_converged(self) -> bool:
        return any(run.converged for run in self.all_runs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem.to_dict(),
            "algorithm": self.problem.algorithm,
            "mode": self.problem.mode,
            "damping": {"zeta": self.damping.zeta, "omega_n": self.damping.omega_n},
            "poles": {
                "p1": [self.poles.p1.real, self.poles.p1.imag],
                "p2": [self.poles.p2.real, self.poles.p2.imag],
            },
            "all_runs": [run.to_dict() for run in self.all_runs],
            "candidates": [candidate.to_dict() for candidate in self.candidates],
            "selected_index": self.selected_index,
            "selected": None if self.selected is None else self.selected.to_dict(),
            "residual": None if self.residual is None else self.residual.to_dict(),
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "spec_met": self.spec_met,
            "diagnostic": self.diagnostic,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def design(problem: DesignProblem, show_progress: bool = False) -> DesignReport:
    """Design a controller placing the dominant poles given by the design spec.

    The design spec is mapped to a damping ratio, natural frequency and pole
    pair, the residual objective at ``p1`` is minimised from several seeds, every
    converged run is simulated in closed loop and the run with the best
    response is selected.

    Parameters
    ----------
    problem : DesignProblem
        Plant, spec and optimizer settings.
    show_progress : bool
        Show a progress bar over the restarts.

    Returns
    -------
    DesignReport
        All runs, their simulated candidates and the selected controller.
    """
    damping = problem.spec.damping()
    poles = dominant_poles(damping)
    logging.info(
        "zeta=%.4f, omega_n=%.4f rad/s, p1=%.4f%+.4fj",
        damping.zeta,
        damping.omega_n,
        poles.p1.real,
        poles.p1.imag,
    )

    objective = make_objective(
        problem.plant, poles.p1, mode=problem.mode, weights=problem.weights
    )
    selector = ResponseSelector(
        problem.plant, objective, problem.spec, problem.simulation_config(damping)
    )

    try:
        outcome = multi_restart(
            problem.algorithm,
            objective,
            objective.bounds,
            problem.optimizer_config(),
            restarts=problem.restarts,
            selector=selector,
            show_progress=show_progress,
        )
    except OptimizerConfigError as error:
        raise ProblemFileError(str(error)) from error

    candidates = tuple(selector.candidates)
    chosen = candidates[outcome.selected_index]

    selected_index: Optional[int] = outcome.selected_index
    diagnostic = ""
    if not any(run.converged for run in outcome.runs):
        selected_index = None
        diagnostic = (
            f"none of {problem.restarts} runs reached the tolerance "
            f"(best fitness {min(run.best_fitness for run in outcome.runs):.3g})"
        )
    elif not chosen.qualified:
        selected_index = None
        diagnostic = "no converged run produced a usable step response"

    if selected_index is None:
        logging.warning("No controller selected: %s", diagnostic)
    else:
        logging.info(
            "Selected run %d (seed %d): %s",
            selected_index,
            outcome.selected.seed,
            chosen.params,
        )

    return DesignReport(
        problem=problem,
        damping=damping,
        poles=poles,
        all_runs=outcome.runs,
        candidates=candidates,
        selected_index=selected_index,
        diagnostic=diagnostic,
    )


def compare(problem: DesignProblem, show_progress: bool = False) -> List[DesignReport]:
    """Design with every algorithm in both modes, integer designs first."""
    return [
        design(problem.with_overrides(mode=mode, algorithm=algorithm), show_progress)
        for mode in (INTEGER, FRACTIONAL)
        for algorithm in ALGORITHMS
    ]


def evaluate(
    plant: FractionalTransferFunction, params: ControllerParams, pole: complex
) -> ResidualBreakdown:
    """Residual terms of a given controller at a pole."""
    return residual(plant, pole, params)


def simulate(
    plant: FractionalTransferFunction,
    params: Optional[ControllerParams] = None,
    config: Optional[SimulationConfig] = None,
    output_file: Optional[Path] = None,
) -> Tuple[StepResponse, Optional[ResponseMetrics]]:
    """Step response of the plant under unity feedback with the given
    controller, or of the uncontrolled plant when ``params`` is ``None``.

    The response is written as CSV when ``output_file`` is given. Metrics are
    ``None`` when the steady state is not positive.
    """
    if params is None:
        tf = plant
    else:
        tf = closed_loop(plant, controller_tf(params))

    response = simulate_step(tf, config)
    if output_file is not None:
        response.write_csv(output_file)

    try:
        metrics: Optional[ResponseMetrics] = measure_metrics(response)
    except MetricError as error:
        logging.warning("No metrics for %s: %s", tf, error)
        metrics = None

    return response, metrics


def load_report_dicts(report_files: Sequence[Union[str, Path]]) -> List[Dict[str, Any]]:
    """Read design reports written by ``DesignReport.to_json``. A file may
    hold a single report or a list of them."""
    reports: List[Dict[str, Any]] = []
    for report_file in report_files:
        try:
            with open(report_file, "r", encoding="utf-8") as in_f:
                data = json.load(in_f)
        except (OSError, json.JSONDecodeError) as error:
            raise ProblemFileError(f"Cannot read {report_file}: {error}") from error
        reports.extend(data if isinstance(data, list) else [data])
    return reports


class ProblemFileError(ValueError):
    """Raised for malformed design problems or report files."""
