from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

# exponents with an integral value up to this size are raised by repeated
# multiplication, which keeps integer-order evaluations exact where possible
MAX_EXACT_INTEGER_POWER = 100


def principal_arg(value: complex) -> float:
    """Return the principal argument of a complex number in (-pi, pi].

    ``cmath.phase`` returns -pi for a negative real number with a negative
    zero imaginary part, which is folded onto +pi here.
    """
    angle = cmath.phase(value)
    if angle == -math.pi:
        return math.pi
    return angle


def cpow(base: complex, exponent: float) -> complex:
    """Raise a complex number to a real power on the principal branch.

    Parameters
    ----------
    base : complex
        The number to raise, for example a candidate closed-loop pole.
    exponent : float
        Any real exponent, typically a differintegration order.

    Returns
    -------
    complex
        ``|base|**exponent * exp(j * exponent * Arg(base))``.

    Raises
    ------
    FractionalDomainError
        If ``base`` is zero and ``exponent`` is negative.
    """
    base = complex(base)
    exponent = float(exponent)

    if base == 0:
        if exponent < 0:
            raise FractionalDomainError(
                f"Cannot raise zero to the negative power {exponent}"
            )
        # 0**0 is taken to be 1
        return complex(1.0) if exponent == 0 else complex(0.0)

    if exponent.is_integer() and abs(exponent) <= MAX_EXACT_INTEGER_POWER:
        return base ** int(exponent)

    modulus, _ = cmath.polar(base)
    return cmath.rect(modulus**exponent, exponent * principal_arg(base))


@dataclass(frozen=True)
class GLWeights:
    """Grünwald-Letnikov weights ``w_0 ... w_{N-1}`` of a differintegral."""

    order: float
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def cumulative(self) -> np.ndarray:
        """Partial sums of the weights, i.e. the GL response to a unit step."""
        return np.cumsum(self.weights)


def gl_weights(order: float, count: int) -> GLWeights:
    """Generate Grünwald-Letnikov weights by the multiplicative recursion
    ``w_0 = 1, w_j = w_{j-1} * (1 - (order + 1) / j)``.

    Parameters
    ----------
    order : float
        Differintegration order, positive for derivatives and negative for
        integrals.
    count : int
        Number of weights to generate, at least one.

    Returns
    -------
    GLWeights
        The weights for the given order.
    """
    if count < 1:
        raise ValueError(f"Need at least one GL weight, got count={count}")

    factors = np.ones(count, dtype=float)
    j = np.arange(1, count, dtype=float)
    factors[1:] = 1.0 - (order + 1.0) / j

    return GLWeights(order=float(order), weights=np.cumprod(factors))


class FractionalDomainError(ValueError):
    """Raised when a fractional power is undefined."""
