from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.fopid.complex_fractional import cpow
from src.fopid.transfer_function import (
    GAIN_UPPER_BOUND,
    ORDER_UPPER_BOUND,
    ControllerParams,
    FractionalTransferFunction,
    char_eval,
    poly_eval,
)
from src.optimizers import Bounds, Objective

FRACTIONAL = "fractional"
INTEGER = "integer"
MODES = (FRACTIONAL, INTEGER)

DEFAULT_WEIGHTS = (1.0, 1.0, 1.0)

# |char_eval| <= |r| + |i| <= f, so f < eps bounds the characteristic residual
# magnitude by RESIDUAL_BOUND_CONSTANT * eps
RESIDUAL_BOUND_CONSTANT = 1.0


@dataclass(frozen=True)
class ResidualBreakdown:
    """Terms of the residual objective ``f = |r| + |i| + |p|``.

    ``f`` is always unweighted; ``weighted_f`` is the value the optimizer
    minimised with ``weights``.
    """

    r: float
    i: float
    p: float
    f: float
    weights: Tuple[float, float, float] = DEFAULT_WEIGHTS

    @property
    def weighted_f(self) -> float:
        w_r, w_i, w_p = self.weights
        return w_r * abs(self.r) + w_i * abs(self.i) + w_p * abs(self.p)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "i": self.i,
            "p": self.p,
            "f": self.f,
            "weights": list(self.weights),
            "weighted_f": self.weighted_f,
        }


def angle_term(r: float, i: float) -> float:
    """``atan(i / r)`` with ``sign(i) * pi / 2`` at ``r = 0`` and 0 at the origin.

    The single-argument arctangent is kept, so the term stays in [-pi/2, pi/2].
    """
    if r == 0.0:
        if i == 0.0:
            return 0.0
        return math.copysign(math.pi / 2.0, i)
    return math.atan(i / r)


def residual(
    plant: FractionalTransferFunction,
    pole: complex,
    params: ControllerParams,
    weights: Tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> ResidualBreakdown:
    """Evaluate how far ``pole`` is from being a closed-loop pole under
    ``params``.

    Parameters
    ----------
    plant : FractionalTransferFunction
        The process ``P(s) / Q(s)``.
    pole : complex
        The desired dominant pole, nonzero.
    params : ControllerParams
        Controller parameters.
    weights : tuple of float
        Weights of the three terms, carried into ``weighted_f``.

    Returns
    -------
    ResidualBreakdown
        Real part, imaginary part and angle term of ``Q + Gc P`` at the pole,
        and their absolute sum.
    """
    z = char_eval(plant, params, pole)
    r, i = z.real, z.imag
    p = angle_term(r, i)
    return ResidualBreakdown(
        r=r, i=i, p=p, f=abs(r) + abs(i) + abs(p), weights=tuple(weights)
    )


class ResidualObjective(Objective):
    """Weighted residual ``w_r |R| + w_i |I| + w_p |P|`` as a function of the
    optimizer's position vector.

    In fractional mode a position is ``(Kp, Ti, Td, lam, delta)``; in integer
    mode it is ``(Kp, Ti, Td)`` and ``lam = delta = 1`` are injected. The plant
    is evaluated at the pole once, at construction.
    """

    def __init__(
        self,
        plant: FractionalTransferFunction,
        pole: complex,
        mode: str = FRACTIONAL,
        weights: Tuple[float, float, float] = DEFAULT_WEIGHTS,
    ) -> None:
        if mode not in MODES:
            raise ValueError(f"Unknown design mode {mode!r}, expected one of {MODES}")
        if pole == 0:
            raise ValueError("The design pole must be nonzero")
        if len(weights) != 3 or any(weight < 0 for weight in weights):
            raise ValueError(f"Need three nonnegative weights, got {weights}")

        self.plant = plant
        self.pole = complex(pole)
        self.mode = mode
        self.weights = tuple(float(weight) for weight in weights)

        self.plant_numerator_at_pole = poly_eval(plant.numerator, self.pole)
        self.plant_denominator_at_pole = poly_eval(plant.denominator, self.pole)

        gains = 3
        orders = 2 if mode == FRACTIONAL else 0
        self.bounds = Bounds(
            np.zeros(gains + orders),
            np.array([GAIN_UPPER_BOUND] * gains + [ORDER_UPPER_BOUND] * orders),
        )

    def __repr__(self) -> str:
        return (
            f"ResidualObjective(pole={self.pole}, mode={self.mode}, "
            f"weights={self.weights})"
        )

    def params_from_position(self, position: np.ndarray) -> ControllerParams:
        """Map a position vector back to controller parameters."""
        values = [float(value) for value in position]
        if self.mode == INTEGER:
            values += [1.0, 1.0]
        return ControllerParams(*values)

    def breakdown(self, position: np.ndarray) -> ResidualBreakdown:
        """Residual terms at a position, with this objective's weights."""
        return residual(
            self.plant, self.pole, self.params_from_position(position), self.weights
        )

    def __call__(self, position: np.ndarray) -> float:
        values = np.asarray(position, dtype=float).tolist()
        if self.mode == FRACTIONAL:
            kp, ti, td, lam, delta = values
        else:
            (kp, ti, td), lam, delta = values, 1.0, 1.0

        controller_value = kp + ti * cpow(self.pole, -lam) + td * cpow(self.pole, delta)
        z = (
            self.plant_denominator_at_pole
            + controller_value * self.plant_numerator_at_pole
        )

        r, i = z.real, z.imag
        w_r, w_i, w_p = self.weights
        return w_r * abs(r) + w_i * abs(i) + w_p * abs(angle_term(r, i))


def make_objective(
    plant: FractionalTransferFunction,
    pole: complex,
    mode: str = FRACTIONAL,
    weights: Tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> ResidualObjective:
    """Build the residual objective and its search bounds (``.bounds``):
    ``[0, 1000]^3 x [0, 2]^2`` in fractional mode, ``[0, 1000]^3`` in integer
    mode."""
    return ResidualObjective(plant, pole, mode=mode, weights=weights)
