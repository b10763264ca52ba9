from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.fopid.complex_fractional import gl_weights
from src.fopid.pole_placement import DampingSpec
from src.fopid.transfer_function import FractionalPolynomial, FractionalTransferFunction

DEFAULT_STEP = 1e-3
DEFAULT_HORIZON = 2.0
MAX_SAMPLES = 10**7
SETTLING_BAND = 0.02
STEADY_STATE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SimulationConfig:
    """Time grid of a step simulation.

    ``richardson`` repeats the simulation at ``step_h / 2`` and combines both
    runs on the coarse grid, cancelling the first-order GL error.
    ``memory_length`` limits the GL sums to the most recent samples (short
    memory principle); ``None`` keeps the full history.
    """

    step_h: float = DEFAULT_STEP
    horizon: float = DEFAULT_HORIZON
    richardson: bool = True
    memory_length: Optional[int] = None

    def __post_init__(self):
        if not self.step_h > 0:
            raise ValueError(f"step_h must be positive, got {self.step_h}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.horizon / self.step_h > MAX_SAMPLES:
            raise ValueError(
                f"horizon / step_h = {self.horizon / self.step_h:.3g} exceeds "
                f"{MAX_SAMPLES:.0e} samples"
            )
        if self.memory_length is not None and self.memory_length < 1:
            raise ValueError(f"memory_length must be >= 1, got {self.memory_length}")

    @classmethod
    def for_damping(cls, damping: DampingSpec, **overrides) -> SimulationConfig:
        """Default grid with a horizon long enough for the dominant transient,
        ``max(2, 8 / (zeta omega_n))`` seconds."""
        overrides.setdefault(
            "horizon", max(DEFAULT_HORIZON, 8.0 / (damping.zeta * damping.omega_n))
        )
        return cls(**overrides)

    @property
    def num_samples(self) -> int:
        return int(round(self.horizon / self.step_h)) + 1


@dataclass(frozen=True)
class StepResponse:
    """Sampled unit-step response. ``steady_state`` is ``None`` when the final
    value is unbounded."""

    times: np.ndarray
    values: np.ndarray
    steady_state: Optional[float]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"time": self.times, "output": self.values})

    def write_csv(self, output_file: Path) -> None:
        """Export as CSV with header time,output."""
        self.to_frame().to_csv(output_file, index=False)


@dataclass(frozen=True)
class ResponseMetrics:
    """Overshoot and rise time of a step response.

    ``rise_time`` is the first crossing of the steady state. When there is no
    crossing inside the horizon it is ``None`` and ``rise_time_10_90`` holds the
    10-90 % rise time instead, with ``used_10_90`` set.
    """

    overshoot_fraction: float
    rise_time: Optional[float]
    settled: bool
    peak: float
    peak_time: float
    settling_time: Optional[float] = None
    rise_time_10_90: Optional[float] = None
    used_10_90: bool = False

    def to_dict(self) -> dict:
        return {
            "overshoot_fraction": self.overshoot_fraction,
            "rise_time": self.rise_time,
            "settled": self.settled,
            "peak": self.peak,
            "peak_time": self.peak_time,
            "settling_time": self.settling_time,
            "rise_time_10_90": self.rise_time_10_90,
            "used_10_90": self.used_10_90,
        }


def steady_state(tf: FractionalTransferFunction) -> float:
    """Final value of the unit step response, the limit of ``T(s)`` as
    ``s -> 0``.

    Raises
    ------
    UnboundedSteadyStateError
        If the numerator's lowest power of s is below the denominator's.
    """
    if tf.numerator.is_zero():
        return 0.0

    numerator_order = tf.numerator.min_exponent
    denominator_order = tf.denominator.min_exponent

    if abs(numerator_order - denominator_order) < STEADY_STATE_TOLERANCE:
        return tf.numerator.terms[0][0] / tf.denominator.terms[0][0]
    if numerator_order > denominator_order:
        return 0.0

    raise UnboundedSteadyStateError(
        f"Step response of {tf} grows without bound: the numerator has "
        f"s^{numerator_order:g} against s^{denominator_order:g} in the denominator"
    )


def combined_weights(
    polynomial: FractionalPolynomial, step_h: float, count: int
) -> np.ndarray:
    """``sum_i c_i h^-a_i w^(a_i)``: the GL operator of a whole polynomial."""
    total = np.zeros(count)
    for coefficient, exponent in polynomial.terms:
        weights = gl_weights(exponent, count).weights
        total += coefficient * step_h ** (-exponent) * weights
    return total


def gl_step_response(
    tf: FractionalTransferFunction,
    step_h: float,
    num_samples: int,
    memory_length: Optional[int] = None,
) -> np.ndarray:
    """Solve ``A(D) y = B(D) u`` for a unit step ``u`` on a uniform grid.

    Each differintegral is replaced by its GL sum ``h^-a sum_m w_m x_{k-m}``
    and ``y_k`` is solved from the resulting linear relation at every step.

    Raises
    ------
    SimulationError
        If the GL normalizer vanishes or the output stops being finite.
    """
    if min(tf.numerator.exponents, default=0.0) < 0 or tf.denominator.min_exponent < 0:
        raise SimulationError(
            f"Simulation needs nonnegative exponents, got {tf}", step_index=0
        )

    lhs = combined_weights(tf.denominator, step_h, num_samples)
    normalizer = lhs[0]
    if normalizer == 0 or not np.isfinite(normalizer):
        raise SimulationError(
            f"GL normalizer of {tf.denominator} is {normalizer}", step_index=0
        )

    # the GL sum of a unit step is the running sum of the weights
    rhs = np.cumsum(combined_weights(tf.numerator, step_h, num_samples))

    # reversed so the history sum is a dot product over contiguous slices
    history_weights = lhs[::-1].copy()
    last = num_samples - 1
    values = np.zeros(num_samples)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(num_samples):
            start = 0 if memory_length is None else max(0, k - memory_length)
            history = np.dot(history_weights[last - k + start : last], values[start:k])
            values[k] = (rhs[k] - history) / normalizer

    non_finite = np.flatnonzero(~np.isfinite(values))
    if non_finite.size:
        raise SimulationError(
            f"Step response of {tf} is not finite", step_index=int(non_finite[0])
        )

    return values


def simulate_step(
    tf: FractionalTransferFunction, config: Optional[SimulationConfig] = None
) -> StepResponse:
    """Unit-step response of a fractional transfer function.

    Parameters
    ----------
    tf : FractionalTransferFunction
        Transfer function with nonnegative exponents, e.g. from ``closed_loop``.
    config : SimulationConfig, optional
        Time grid; defaults to ``SimulationConfig()``.

    Returns
    -------
    StepResponse
        Samples at ``0, h, 2h, ...`` up to the horizon, and the final value.
    """
    config = config or SimulationConfig()
    num_samples = config.num_samples
    times = np.arange(num_samples) * config.step_h

    logging.debug(
        "Simulating %s over %d samples (h=%g)", tf, num_samples, config.step_h
    )

    values = gl_step_response(tf, config.step_h, num_samples, config.memory_length)

    if config.richardson:
        fine_memory = None if config.memory_length is None else 2 * config.memory_length
        fine = gl_step_response(
            tf, config.step_h / 2.0, 2 * num_samples - 1, fine_memory
        )
        values = 2.0 * fine[::2] - values

    try:
        final_value: Optional[float] = steady_state(tf)
    except UnboundedSteadyStateError as error:
        logging.warning("%s", error)
        final_value = None

    return StepResponse(times=times, values=values, steady_state=final_value)


def crossing_time(
    times: np.ndarray, values: np.ndarray, level: float
) -> Optional[float]:
    """First time the samples reach ``level``, linearly interpolated between
    the bracketing samples; ``None`` if they never do."""
    reached = np.flatnonzero(values >= level)
    if reached.size == 0:
        return None

    k = int(reached[0])
    if k == 0:
        return float(times[0])

    y_0, y_1 = values[k - 1], values[k]
    return float(times[k - 1] + (level - y_0) / (y_1 - y_0) * (times[k] - times[k - 1]))


def measure_metrics(resp: StepResponse) -> ResponseMetrics:
    """Peak overshoot, 0-100 % rise time and settling of a step response.

    Raises
    ------
    MetricError
        If the steady state is unbounded or not positive.
    """
    y_ss = resp.steady_state
    if y_ss is None or not y_ss > 0:
        raise MetricError(f"Metrics need a positive steady state, got {y_ss}")

    times, values = resp.times, resp.values

    peak_index = int(np.argmax(values))
    peak = float(values[peak_index])
    overshoot = (peak - y_ss) / y_ss if peak > y_ss else 0.0

    outside_band = np.flatnonzero(np.abs(values - y_ss) > SETTLING_BAND * y_ss)
    if outside_band.size == 0:
        settling_time: Optional[float] = float(times[0])
    elif outside_band[-1] + 1 < len(times):
        settling_time = float(times[outside_band[-1] + 1])
    else:
        settling_time = None

    rise_time = crossing_time(times, values, y_ss)
    rise_time_10_90 = None
    if rise_time is None:
        t_10 = crossing_time(times, values, 0.1 * y_ss)
        t_90 = crossing_time(times, values, 0.9 * y_ss)
        if t_10 is not None and t_90 is not None:
            rise_time_10_90 = t_90 - t_10

    return ResponseMetrics(
        overshoot_fraction=float(overshoot),
        rise_time=rise_time,
        settled=bool(abs(values[-1] - y_ss) <= SETTLING_BAND * y_ss),
        peak=peak,
        peak_time=float(times[peak_index]),
        settling_time=settling_time,
        rise_time_10_90=rise_time_10_90,
        used_10_90=rise_time is None,
    )


class SimulationError(RuntimeError):
    """Raised when a step simulation breaks down."""

    def __init__(self, message: str, step_index: int):
        super().__init__(f"{message} (step {step_index})")
        self.step_index = step_index


class UnboundedSteadyStateError(ArithmeticError):
    """Raised when a step response has no finite final value."""


class MetricError(ValueError):
    """Raised when response metrics cannot be measured."""
