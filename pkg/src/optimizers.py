from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

ObjectiveFunction = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class Bounds:
    """Box constraints ``lower[j] <= x[j] <= upper[j]`` of a search space."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))

        if lower.shape != upper.shape or lower.ndim != 1:
            raise OptimizerConfigError(
                f"Bounds need two vectors of equal length, got {lower.shape} "
                f"and {upper.shape}"
            )
        if not np.all(lower < upper):
            raise OptimizerConfigError(
                "Every lower bound must be strictly below its upper bound"
            )

        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, lower: float, upper: float, dimension: int) -> Bounds:
        return cls(np.full(dimension, lower), np.full(dimension, upper))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, positions: np.ndarray) -> np.ndarray:
        return np.clip(positions, self.lower, self.upper)

    def contains(self, positions: np.ndarray) -> bool:
        return bool(np.all((positions >= self.lower) & (positions <= self.upper)))


class Objective(ABC):
    """A function to minimise over a bounded box."""

    bounds: Bounds

    @property
    def dimension(self) -> int:
        return self.bounds.dimension

    @abstractmethod
    def __call__(self, position: np.ndarray) -> float:
        """Return the objective value at a position."""


@dataclass
class PSOConfig:
    """Particle swarm settings. ``vmax`` defaults to the width of the bounds."""

    population: int = 30
    omega: float = 0.729
    c1: float = 1.494
    c2: float = 1.494
    vmax: Optional[Sequence[float]] = None
    max_iters: int = 5000
    tolerance: float = 1e-4
    seed: int = 0
    show_progress: bool = False

    def validate(self, bounds: Bounds) -> None:
        if self.population < 2:
            raise OptimizerConfigError(
                f"PSO needs at least 2 particles, got {self.population}"
            )
        if self.max_iters < 0:
            raise OptimizerConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.tolerance < 0:
            raise OptimizerConfigError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.vmax is not None and len(self.vmax) != bounds.dimension:
            raise OptimizerConfigError(
                f"vmax has {len(self.vmax)} entries for a "
                f"{bounds.dimension}-dimensional search space"
            )

    def velocity_limits(self, bounds: Bounds) -> np.ndarray:
        if self.vmax is None:
            return bounds.width
        return np.asarray(self.vmax, dtype=float)


@dataclass
class DEConfig:
    """Differential evolution settings."""

    population: int = 30
    f_scale: float = 0.8
    cr: float = 0.96
    max_iters: int = 5000
    tolerance: float = 1e-4
    seed: int = 0
    show_progress: bool = False

    def validate(self, bounds: Bounds) -> None:
        if self.population < 4:
            raise OptimizerConfigError(
                f"DE needs at least 4 chromosomes, got {self.population}"
            )
        if not 0.0 < self.f_scale < 1.0:
            raise OptimizerConfigError(f"F must lie in (0, 1), got {self.f_scale}")
        if not 0.0 < self.cr < 1.0:
            raise OptimizerConfigError(f"CR must lie in (0, 1), got {self.cr}")
        if self.max_iters < 0:
            raise OptimizerConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.tolerance < 0:
            raise OptimizerConfigError(f"tolerance must be >= 0, got {self.tolerance}")


OptimizerConfig = Union[PSOConfig, DEConfig]


@dataclass(frozen=True)
class RunResult:
    """Outcome of one optimizer run. ``best_fitness_trace[k]`` is the best
    fitness after ``k`` full iterations, index 0 being the initial population.
    """

    best_position: np.ndarray
    best_fitness: float
    iterations_used: int
    best_fitness_trace: Tuple[float, ...]
    converged: bool
    algorithm: str = ""
    seed: int = 0

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "iteration": np.arange(len(self.best_fitness_trace)),
                "best_fitness": np.asarray(self.best_fitness_trace, dtype=float),
            }
        )

    def write_trace_csv(self, output_file: Path) -> None:
        """Dump the best-so-far trace as CSV with columns iteration,best_fitness."""
        self.trace_frame().to_csv(output_file, index=False)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "best_position": [float(value) for value in self.best_position],
            "best_fitness": float(self.best_fitness),
            "iterations_used": self.iterations_used,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class MultiRestartResult:
    runs: Tuple[RunResult, ...]
    selected_index: int

    @property
    def selected(self) -> RunResult:
        return self.runs[self.selected_index]


class StoppingCriteria(ABC):
    """Abstract base class for stopping criteria functions."""

    @abstractmethod
    def __call__(self, best_fitness: float) -> bool:
        """Return true if can stop the optimizer."""


class ToleranceStoppingCriteria(StoppingCriteria):
    """Stop once the global best fitness drops below a tolerance."""

    def __init__(self, tolerance: float):
        self.tolerance = tolerance

    def __call__(self, best_fitness: float) -> bool:
        return best_fitness < self.tolerance


class PopulationGenerator:
    """Draw each component of every member uniformly from its search range."""

    def __init__(self, bounds: Bounds, size: int):
        self.bounds = bounds
        self.size = size

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        return self.bounds.lower + rng.random((self.size, self.bounds.dimension)) * (
            self.bounds.width
        )


class Runner(ABC):
    """Generation loop shared by the population-based optimizers.

    Subclasses set up their population in ``initialise`` and advance it by one
    full iteration in ``main_loop``. The loop ends when the stopping criteria
    raise ``StoppingCriteriaMet`` or ``max_iters`` iterations have run.
    """

    algorithm = ""

    positions: np.ndarray
    fitnesses: np.ndarray
    best_position: np.ndarray
    best_fitness: float

    def __init__(
        self,
        objective: ObjectiveFunction,
        bounds: Bounds,
        config: OptimizerConfig,
    ) -> None:
        config.validate(bounds)
        check_dimension(objective, bounds)

        self.objective = objective
        self.bounds = bounds
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.population_generator = PopulationGenerator(bounds, config.population)
        self.stopping_criteria = ToleranceStoppingCriteria(config.tolerance)
        self.iteration_num = 0
        self.trace: List[float] = []

    @abstractmethod
    def initialise(self) -> None:
        """Create and evaluate the initial population."""

    @abstractmethod
    def main_loop(self) -> None:
        """Advance the population by one full iteration."""

    def display(self) -> None:
        """Report on the state after an iteration in a runner specific way"""
        logging.debug(
            "%s iteration %d: best fitness %.6g",
            self.algorithm,
            self.iteration_num,
            self.best_fitness,
        )

    def run(self) -> RunResult:
        """Run the optimizer.

        Returns
        -------
        RunResult
            Best position found, its fitness and the best-so-far trace.
        """
        logging.info(
            "Starting %s run (seed=%s, population=%d)",
            self.algorithm,
            self.config.seed,
            self.config.population,
        )

        self.initialise()
        self.trace.append(self.best_fitness)

        converged = False
        try:
            self.check_stopping_criteria()

            for _ in tqdm(
                range(self.config.max_iters),
                desc=self.algorithm,
                disable=not self.config.show_progress,
                leave=False,
            ):
                self.iteration_num += 1
                self.main_loop()
                self.trace.append(self.best_fitness)
                self.display()
                self.check_stopping_criteria()

        except StoppingCriteriaMet:
            converged = True

        if not converged:
            logging.info(
                "%s stopped after %d iterations without reaching tolerance "
                "(best fitness %.6g)",
                self.algorithm,
                self.iteration_num,
                self.best_fitness,
            )

        return RunResult(
            best_position=self.best_position.copy(),
            best_fitness=float(self.best_fitness),
            iterations_used=self.iteration_num,
            best_fitness_trace=tuple(self.trace),
            converged=converged,
            algorithm=self.algorithm,
            seed=self.config.seed,
        )

    def evaluate(self, positions: np.ndarray) -> np.ndarray:
        """Evaluate the objective at each row of ``positions``."""
        return np.array([self.objective(position) for position in positions])

    def check_stopping_criteria(self) -> None:
        """Check if the stopping criteria has been met by the global best."""
        if self.stopping_criteria(self.best_fitness):
            raise StoppingCriteriaMet(self.best_fitness, self.iteration_num)


class ParticleSwarmRunner(Runner):
    """Standard inertia-weight particle swarm.

    Velocities follow ``V <- omega V + c1 phi1 (p - X) + c2 phi2 (g - X)`` with
    fresh ``phi`` in (0, 1] per particle and component and are clamped to
    ``[-vmax, vmax]``. A component that leaves the box is reflected back in
    off the bound it crossed and its velocity reverses.
    """

    algorithm = "pso"
    config: PSOConfig

    def initialise(self) -> None:
        self.vmax = self.config.velocity_limits(self.bounds)

        self.positions = self.population_generator(self.rng)
        self.velocities = self.rng.uniform(
            -self.vmax, self.vmax, size=self.positions.shape
        )
        self.fitnesses = self.evaluate(self.positions)

        self.personal_best_positions = self.positions.copy()
        self.personal_best_fitnesses = self.fitnesses.copy()

        best = int(np.argmin(self.fitnesses))
        self.best_position = self.positions[best].copy()
        self.best_fitness = float(self.fitnesses[best])

    def main_loop(self) -> None:
        shape = self.positions.shape
        phi_1 = 1.0 - self.rng.random(shape)
        phi_2 = 1.0 - self.rng.random(shape)

        self.velocities = (
            self.config.omega * self.velocities
            + self.config.c1 * phi_1 * (self.personal_best_positions - self.positions)
            + self.config.c2 * phi_2 * (self.best_position - self.positions)
        )
        self.velocities = np.clip(self.velocities, -self.vmax, self.vmax)

        self.positions = self.move(self.positions + self.velocities)

        self.fitnesses = self.evaluate(self.positions)

        improved = self.fitnesses < self.personal_best_fitnesses
        self.personal_best_positions[improved] = self.positions[improved]
        self.personal_best_fitnesses[improved] = self.fitnesses[improved]

        best = int(np.argmin(self.personal_best_fitnesses))
        if self.personal_best_fitnesses[best] < self.best_fitness:
            self.best_position = self.personal_best_positions[best].copy()
            self.best_fitness = float(self.personal_best_fitnesses[best])

    def move(self, positions: np.ndarray) -> np.ndarray:
        """Reflect components outside the box back in and reverse their
        velocities."""
        lower, upper = self.bounds.lower, self.bounds.upper
        below = positions < lower
        above = positions > upper

        positions = np.where(below, 2.0 * lower - positions, positions)
        positions = np.where(above, 2.0 * upper - positions, positions)
        self.velocities[below | above] *= -1.0

        # one reflection lands inside while vmax <= width
        return self.bounds.clip(positions)


class DifferentialEvolutionRunner(Runner):
    """DE/rand/1 with binomial recombination and greedy selection.

    Every trial of a generation is built from the current generation before
    any replacement happens. There is no forced crossover index: a component
    is taken from the donor only when ``rand_j < CR``.
    """

    algorithm = "de"
    config: DEConfig

    def initialise(self) -> None:
        self.positions = self.population_generator(self.rng)
        self.fitnesses = self.evaluate(self.positions)
        self.update_best()

    def main_loop(self) -> None:
        trials = self.create_trials()
        trial_fitnesses = self.evaluate(trials)

        replace_parent = trial_fitnesses < self.fitnesses
        self.positions[replace_parent] = trials[replace_parent]
        self.fitnesses[replace_parent] = trial_fitnesses[replace_parent]

        self.update_best()

    def create_trials(self) -> np.ndarray:
        """Mutate and recombine every member of the current generation."""
        size, dimension = self.positions.shape
        trials = np.empty_like(self.positions)

        for i in range(size):
            others = np.delete(np.arange(size), i)
            p, q, r = self.rng.choice(others, size=3, replace=False)

            donor = self.positions[p] + self.config.f_scale * (
                self.positions[q] - self.positions[r]
            )
            from_donor = self.rng.random(dimension) < self.config.cr
            trials[i] = np.where(from_donor, donor, self.positions[i])

        return self.bounds.clip(trials)

    def update_best(self) -> None:
        best = int(np.argmin(self.fitnesses))
        self.best_position = self.positions[best].copy()
        self.best_fitness = float(self.fitnesses[best])


RUNNERS = {
    ParticleSwarmRunner.algorithm: ParticleSwarmRunner,
    DifferentialEvolutionRunner.algorithm: DifferentialEvolutionRunner,
}


def check_dimension(objective: Any, bounds: Bounds) -> None:
    """Objectives that know their dimension must agree with the bounds."""
    dimension = getattr(objective, "dimension", None)
    if dimension is not None and dimension != bounds.dimension:
        raise OptimizerConfigError(
            f"Objective is {dimension}-dimensional but the bounds are "
            f"{bounds.dimension}-dimensional"
        )


def pso_minimize(
    objective: ObjectiveFunction, bounds: Bounds, config: Optional[PSOConfig] = None
) -> RunResult:
    """Minimise ``objective`` over ``bounds`` with particle swarm optimization."""
    return ParticleSwarmRunner(objective, bounds, config or PSOConfig()).run()


def de_minimize(
    objective: ObjectiveFunction, bounds: Bounds, config: Optional[DEConfig] = None
) -> RunResult:
    """Minimise ``objective`` over ``bounds`` with differential evolution."""
    return DifferentialEvolutionRunner(objective, bounds, config or DEConfig()).run()


def restart_seeds(base_seed: int, restarts: int) -> List[int]:
    """Derive independent, reproducible seeds for each restart."""
    children = np.random.SeedSequence(base_seed).spawn(restarts)
    return [int(child.generate_state(1)[0]) for child in children]


def lowest_fitness(run: RunResult) -> float:
    return run.best_fitness


def multi_restart(
    optimizer: str,
    objective: ObjectiveFunction,
    bounds: Bounds,
    config: Optional[OptimizerConfig] = None,
    restarts: int = 1,
    selector: Callable[[RunResult], Any] = lowest_fitness,
    show_progress: bool = False,
) -> MultiRestartResult:
    """Run independent optimizations and pick one of them.

    Parameters
    ----------
    optimizer : str
        ``"pso"`` or ``"de"``.
    objective : Callable
        The function to minimise.
    bounds : Bounds
        The search box.
    config : PSOConfig or DEConfig, optional
        Settings of each run; its seed is the base seed of the restarts.
    restarts : int
        Number of runs, at least one.
    selector : Callable
        Sort key over run results; the run with the smallest key is selected.
    show_progress : bool
        Show a progress bar over the restarts.

    Returns
    -------
    MultiRestartResult
        All runs and the index of the selected run.
    """
    if optimizer not in RUNNERS:
        raise OptimizerConfigError(
            f"Unknown optimizer {optimizer!r}, expected one of {sorted(RUNNERS)}"
        )
    if restarts < 1:
        raise OptimizerConfigError(f"Need at least one restart, got {restarts}")

    runner_class = RUNNERS[optimizer]
    if config is None:
        config = PSOConfig() if optimizer == "pso" else DEConfig()

    runs = []
    for restart_num, seed in enumerate(
        tqdm(
            restart_seeds(config.seed, restarts),
            desc=f"{optimizer} restarts",
            disable=not show_progress,
        )
    ):
        logging.debug("Restart %d of %d with seed %d", restart_num + 1, restarts, seed)
        runs.append(runner_class(objective, bounds, replace(config, seed=seed)).run())

    converged = sum(run.converged for run in runs)
    logging.info("%d of %d %s runs converged", converged, restarts, optimizer)

    keys = [selector(run) for run in runs]
    selected_index = min(range(len(runs)), key=lambda index: keys[index])

    return MultiRestartResult(runs=tuple(runs), selected_index=selected_index)


class StoppingCriteriaMet(Exception):
    """Exception raised when stopping criteria is met."""

    def __init__(self, best_fitness: float, iteration_num: int):
        super().__init__(best_fitness, iteration_num)
        self.best_fitness = best_fitness
        self.iteration_num = iteration_num
        logging.info(
            "Stopping criteria met with fitness %.6g on iteration %d",
            best_fitness,
            iteration_num,
        )


class OptimizerConfigError(ValueError):
    """Raised for inconsistent optimizer settings."""
