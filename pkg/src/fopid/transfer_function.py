from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from src.fopid.complex_fractional import cpow

Term = Tuple[float, float]  # (coefficient, exponent)

EXPONENT_LIMIT = 10.0
EXPONENT_MERGE_TOLERANCE = 1e-12
RELATIVE_PRUNE_TOLERANCE = 1e-15

# search-space limits of the controller parameters
GAIN_UPPER_BOUND = 1000.0
ORDER_UPPER_BOUND = 2.0


def normalize_terms(terms: Iterable[Sequence[float]]) -> Tuple[Term, ...]:
    """Bring a list of ``(coefficient, exponent)`` terms into canonical form.

    Terms are sorted by ascending exponent, exponents closer than
    ``EXPONENT_MERGE_TOLERANCE`` to the first exponent of their run are merged
    by adding coefficients, and terms smaller than
    ``RELATIVE_PRUNE_TOLERANCE * max|c|`` are dropped.

    Raises
    ------
    TransferFunctionError
        If an exponent lies outside [-10, 10] or a value is not finite.
    """
    raw = sorted(
        ((float(coefficient), float(exponent)) for coefficient, exponent in terms),
        key=lambda term: term[1],
    )

    merged: List[List[float]] = []
    for coefficient, exponent in raw:
        if not abs(exponent) <= EXPONENT_LIMIT:
            raise TransferFunctionError(
                f"Exponent {exponent} is outside [-{EXPONENT_LIMIT}, {EXPONENT_LIMIT}]"
            )
        if coefficient != coefficient or abs(coefficient) == float("inf"):
            raise TransferFunctionError(f"Coefficient {coefficient} is not finite")

        if merged and exponent - merged[-1][1] < EXPONENT_MERGE_TOLERANCE:
            merged[-1][0] += coefficient
        else:
            merged.append([coefficient, exponent])

    largest = max((abs(coefficient) for coefficient, _ in merged), default=0.0)
    threshold = RELATIVE_PRUNE_TOLERANCE * largest

    return tuple(
        (coefficient, exponent)
        for coefficient, exponent in merged
        if coefficient != 0.0 and abs(coefficient) >= threshold
    )


@dataclass(frozen=True)
class FractionalPolynomial:
    """A sum of ``c * s**a`` terms with real, not necessarily integer, exponents.

    The terms are always held in canonical form (see ``normalize_terms``), so
    two polynomials compare equal when their canonical terms do.
    """

    terms: Tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", normalize_terms(self.terms))

    @classmethod
    def constant(cls, value: float) -> FractionalPolynomial:
        return cls(((value, 0.0),))

    @classmethod
    def monomial(cls, coefficient: float, exponent: float) -> FractionalPolynomial:
        return cls(((coefficient, exponent),))

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        return " + ".join(
            f"{coefficient:g}" if exponent == 0 else f"{coefficient:g} s^{exponent:g}"
            for coefficient, exponent in self.terms
        )

    def __len__(self) -> int:
        return len(self.terms)

    def __call__(self, s: complex) -> complex:
        return poly_eval(self, s)

    def __add__(self, other: FractionalPolynomial) -> FractionalPolynomial:
        return FractionalPolynomial(self.terms + other.terms)

    def __mul__(self, other: FractionalPolynomial) -> FractionalPolynomial:
        """Multiply by convolving the terms, adding exponents pairwise."""
        return FractionalPolynomial(
            tuple(
                (c_1 * c_2, a_1 + a_2)
                for c_1, a_1 in self.terms
                for c_2, a_2 in other.terms
            )
        )

    def scale(self, factor: float) -> FractionalPolynomial:
        return FractionalPolynomial(
            tuple(
                (factor * coefficient, exponent)
                for coefficient, exponent in self.terms
            )
        )

    def shift(self, exponent: float) -> FractionalPolynomial:
        """Multiply by ``s**exponent``."""
        return FractionalPolynomial(
            tuple((coefficient, a + exponent) for coefficient, a in self.terms)
        )

    def is_zero(self) -> bool:
        return len(self.terms) == 0

    @property
    def coefficients(self) -> Tuple[float, ...]:
        return tuple(coefficient for coefficient, _ in self.terms)

    @property
    def exponents(self) -> Tuple[float, ...]:
        return tuple(exponent for _, exponent in self.terms)

    @property
    def min_exponent(self) -> float:
        if self.is_zero():
            raise TransferFunctionError("The zero polynomial has no exponents")
        return self.terms[0][1]

    @property
    def max_exponent(self) -> float:
        if self.is_zero():
            raise TransferFunctionError("The zero polynomial has no exponents")
        return self.terms[-1][1]

    def to_list(self) -> List[List[float]]:
        return [[coefficient, exponent] for coefficient, exponent in self.terms]

    @classmethod
    def from_list(cls, terms: Sequence[Sequence[float]]) -> FractionalPolynomial:
        """Build from ``[[c, a], ...]``, the JSON form of a polynomial."""
        if isinstance(terms, (str, bytes)) or not isinstance(terms, Sequence):
            raise TransferFunctionError(f"Expected a list of terms, got {terms!r}")
        for term in terms:
            if isinstance(term, (str, bytes)) or not isinstance(term, Sequence):
                raise TransferFunctionError(
                    f"Each term must be a [coefficient, exponent] pair, got {term!r}"
                )
            if len(term) != 2:
                raise TransferFunctionError(
                    f"Each term must be a [coefficient, exponent] pair, got {term}"
                )
        try:
            return cls(tuple((term[0], term[1]) for term in terms))
        except TransferFunctionError:
            raise
        except (TypeError, ValueError) as error:
            raise TransferFunctionError(
                f"Bad polynomial terms {terms}: {error}"
            ) from error


@dataclass(frozen=True)
class FractionalTransferFunction:
    """Ratio of two fractional polynomials."""

    numerator: FractionalPolynomial
    denominator: FractionalPolynomial

    def __post_init__(self):
        if self.denominator.is_zero():
            raise TransferFunctionError(
                "The denominator needs at least one nonzero term"
            )

    def __str__(self) -> str:
        return f"({self.numerator}) / ({self.denominator})"

    def __call__(self, s: complex) -> complex:
        return self.evaluate(s)

    def evaluate(self, s: complex) -> complex:
        return poly_eval(self.numerator, s) / poly_eval(self.denominator, s)

    def scale(self, factor: float) -> FractionalTransferFunction:
        return FractionalTransferFunction(
            self.numerator.scale(factor), self.denominator
        )

    def cancel_common_power(self) -> FractionalTransferFunction:
        """Divide numerator and denominator by the largest common power of s,
        leaving all exponents nonnegative and at least one minimal exponent
        equal to zero. A zero numerator gives ``0 / 1``.
        """
        if self.numerator.is_zero():
            return FractionalTransferFunction(
                FractionalPolynomial(), FractionalPolynomial.constant(1.0)
            )

        common = min(self.numerator.min_exponent, self.denominator.min_exponent)
        if common == 0.0:
            return self

        return FractionalTransferFunction(
            self.numerator.shift(-common), self.denominator.shift(-common)
        )

    def to_dict(self) -> Dict[str, List[List[float]]]:
        return {"num": self.numerator.to_list(), "den": self.denominator.to_list()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> FractionalTransferFunction:
        """Build from ``{"num": [[c, a], ...], "den": [[c, a], ...]}``."""
        try:
            numerator = data["num"]
            denominator = data["den"]
        except (KeyError, TypeError) as error:
            raise TransferFunctionError(
                "A transfer function needs 'num' and 'den' term lists"
            ) from error

        return cls(
            FractionalPolynomial.from_list(numerator),
            FractionalPolynomial.from_list(denominator),
        )


@dataclass(frozen=True)
class ControllerParams:
    """Design vector of the ``Kp + Ti s^-lam + Td s^delta`` controller.

    ``lam = delta = 1`` is the classical integer-order PID controller.
    """

    kp: float
    ti: float
    td: float
    lam: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        for name in ("kp", "ti", "td"):
            value = getattr(self, name)
            if not 0.0 <= value <= GAIN_UPPER_BOUND:
                raise TransferFunctionError(
                    f"{name}={value} is outside [0, {GAIN_UPPER_BOUND}]"
                )
        for name in ("lam", "delta"):
            value = getattr(self, name)
            if not 0.0 <= value <= ORDER_UPPER_BOUND:
                raise TransferFunctionError(
                    f"{name}={value} is outside [0, {ORDER_UPPER_BOUND}]"
                )

    def __str__(self) -> str:
        return (
            f"{self.kp:.2f} + {self.ti:.2f} s^-{self.lam:.2f}"
            f" + {self.td:.2f} s^{self.delta:.2f}"
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "kp": self.kp,
            "ti": self.ti,
            "td": self.td,
            "lam": self.lam,
            "delta": self.delta,
        }


def poly_eval(p: FractionalPolynomial, s: complex) -> complex:
    """Evaluate ``sum_k c_k * s**a_k`` on the principal branch."""
    total = 0j
    for coefficient, exponent in p.terms:
        total += coefficient * cpow(s, exponent)
    return total


def controller_tf(params: ControllerParams) -> FractionalTransferFunction:
    """Transfer function of the controller with the negative exponent cleared:
    ``(Kp s^lam + Ti + Td s^(lam+delta)) / s^lam``.
    """
    numerator = FractionalPolynomial(
        (
            (params.kp, params.lam),
            (params.ti, 0.0),
            (params.td, params.lam + params.delta),
        )
    )
    denominator = FractionalPolynomial.monomial(1.0, params.lam)

    return FractionalTransferFunction(numerator, denominator).cancel_common_power()


def closed_loop(
    plant: FractionalTransferFunction, controller: FractionalTransferFunction
) -> FractionalTransferFunction:
    """Unity-feedback closed loop ``Nc Np / (Dc Dp + Nc Np)``.

    Raises
    ------
    CompositionError
        If the closed-loop denominator cancels to zero.
    """
    forward = controller.numerator * plant.numerator
    denominator = controller.denominator * plant.denominator + forward

    if denominator.is_zero():
        raise CompositionError(
            f"Closed loop of plant {plant} and controller {controller} "
            "has a zero denominator"
        )

    return FractionalTransferFunction(forward, denominator).cancel_common_power()


def char_eval(
    plant: FractionalTransferFunction, params: ControllerParams, s: complex
) -> complex:
    """Evaluate the characteristic expression ``Q(s) + Gc(s) P(s)`` where
    ``P / Q`` is the plant. A zero result means ``s`` is a closed-loop pole.
    """
    controller_value = (
        params.kp + params.ti * cpow(s, -params.lam) + params.td * cpow(s, params.delta)
    )
    return poly_eval(plant.denominator, s) + controller_value * poly_eval(
        plant.numerator, s
    )


class TransferFunctionError(ValueError):
    """Raised for malformed polynomials, transfer functions or parameters."""


class CompositionError(TransferFunctionError):
    """Raised when combining transfer functions gives a degenerate result."""
