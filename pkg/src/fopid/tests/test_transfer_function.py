import pytest

from src.fopid.pole_placement import DesignSpec, dominant_poles
from src.fopid.transfer_function import (
    CompositionError,
    ControllerParams,
    FractionalPolynomial,
    FractionalTransferFunction,
    TransferFunctionError,
    char_eval,
    closed_loop,
    controller_tf,
    poly_eval,
)


def get_fractional_plant() -> FractionalTransferFunction:
    """1 / (0.8 s^2.2 + 0.5 s^0.9 + 1)"""
    return FractionalTransferFunction.from_dict(
        {"num": [[1.0, 0.0]], "den": [[0.8, 2.2], [0.5, 0.9], [1.0, 0.0]]}
    )


def get_first_order_plant() -> FractionalTransferFunction:
    """1 / (s + 1)"""
    return FractionalTransferFunction.from_dict(
        {"num": [[1.0, 0.0]], "den": [[1.0, 0.0], [1.0, 1.0]]}
    )


def test_FractionalPolynomial_canonical_form():
    """GIVEN unsorted terms with a repeated exponent
    WHEN a polynomial is created
    THEN the terms are sorted by exponent and merged
    """

    polynomial = FractionalPolynomial(((1.0, 2.0), (3.0, 0.0), (2.0, 2.0)))

    assert polynomial.terms == ((3.0, 0.0), (3.0, 2.0))
    assert polynomial.min_exponent == 0.0
    assert polynomial.max_exponent == 2.0
    assert str(polynomial) == "3 + 3 s^2"


def test_FractionalPolynomial_merges_and_prunes():
    """GIVEN exponents closer than the merge tolerance and a negligible term
    WHEN a polynomial is created
    THEN close exponents merge and the negligible term is dropped
    """

    merged = FractionalPolynomial(((1.0, 0.5), (1.0, 0.5 + 1e-14)))
    assert len(merged) == 1
    assert merged.coefficients == (2.0,)

    pruned = FractionalPolynomial(((1.0, 0.0), (1e-20, 1.0)))
    assert pruned.terms == ((1.0, 0.0),)

    cancelled = FractionalPolynomial(((1.0, 1.0), (-1.0, 1.0)))
    assert cancelled.is_zero()
    assert str(cancelled) == "0"


def test_FractionalPolynomial_rejects_bad_exponents():
    """GIVEN an exponent outside [-10, 10] or a malformed term
    WHEN a polynomial is created
    THEN a TransferFunctionError is raised
    """

    with pytest.raises(TransferFunctionError):
        FractionalPolynomial(((1.0, 11.0),))

    with pytest.raises(TransferFunctionError):
        FractionalPolynomial.from_list([[1.0, 0.0, 2.0]])

    with pytest.raises(TransferFunctionError):
        FractionalPolynomial().min_exponent


@pytest.mark.parametrize(
    "terms",
    [5, "1 0", [1.0], [[1.0, 0.0], 2.0], [["a", 0.0]], [[None, 1.0]]],
)
def test_FractionalPolynomial_from_list_rejects_malformed_terms(terms):
    """GIVEN JSON terms that are not a list of [coefficient, exponent] numbers
    WHEN a polynomial is read from them
    THEN a TransferFunctionError is raised
    """

    with pytest.raises(TransferFunctionError):
        FractionalPolynomial.from_list(terms)



def test_FractionalPolynomial_arithmetic():
    """GIVEN two polynomials
    WHEN they are added, multiplied, scaled and shifted
    THEN the terms follow the usual algebra with real exponents
    """

    one_plus_s = FractionalPolynomial(((1.0, 0.0), (1.0, 1.0)))
    one_minus_s = FractionalPolynomial(((1.0, 0.0), (-1.0, 1.0)))

    assert (one_plus_s * one_minus_s).terms == ((1.0, 0.0), (-1.0, 2.0))
    assert (one_plus_s + one_minus_s).terms == ((2.0, 0.0),)
    assert one_plus_s.scale(3.0).terms == ((3.0, 0.0), (3.0, 1.0))
    assert one_plus_s.shift(0.5).terms == ((1.0, 0.5), (1.0, 1.5))


def test_poly_eval_of_the_fractional_plant():
    """GIVEN the plant denominator 0.8 s^2.2 + 0.5 s^0.9 + 1
    WHEN it is evaluated at the dominant pole for Mp = 10 %, t_rise = 0.3 s
    THEN it is 13.4235 - 98.9237j for both the rounded and the exact pole
    """

    plant = get_fractional_plant()
    exact_pole = dominant_poles(DesignSpec(0.10, 0.3).damping()).p1
    rounded_pole = complex(-5.384, 7.345)

    exact = poly_eval(plant.denominator, exact_pole)
    rounded = poly_eval(plant.denominator, rounded_pole)

    assert exact.real == pytest.approx(13.4235, abs=0.15)
    assert exact.imag == pytest.approx(-98.9237, abs=0.15)
    assert rounded.real == pytest.approx(13.4235, abs=0.15)
    assert rounded.imag == pytest.approx(-98.9237, abs=0.15)
    assert abs(exact - rounded) < 0.2


def test_controller_tf_clears_the_negative_exponent():
    """GIVEN fractional controller parameters
    WHEN the controller transfer function is built
    THEN it is (Kp s^lam + Ti + Td s^(lam+delta)) / s^lam and evaluates to
    Kp + Ti s^-lam + Td s^delta
    """

    params = ControllerParams(2.0, 3.0, 4.0, 0.5, 1.2)
    tf = controller_tf(params)

    assert tf.numerator.terms == ((3.0, 0.0), (2.0, 0.5), (4.0, 1.7))
    assert tf.denominator.terms == ((1.0, 0.5),)

    s = complex(1.0, 1.0)
    expected = 2.0 + 3.0 * s**-0.5 + 4.0 * s**1.2
    assert tf(s) == pytest.approx(expected, rel=1e-12)


def test_controller_tf_without_integral_action():
    """GIVEN Ti = 0
    WHEN the controller transfer function is built
    THEN the common power of s is cancelled
    """

    tf = controller_tf(ControllerParams(2.0, 0.0, 4.0, 0.5, 1.2))

    assert tf.numerator.terms == ((2.0, 0.0), (4.0, 1.2))
    assert tf.denominator.terms == ((1.0, 0.0),)


def test_closed_loop_of_a_proportional_controller():
    """GIVEN the plant 1 / (s + 1) and Kp = 1
    WHEN the unity feedback loop is closed
    THEN T = 1 / (s + 2)
    """

    controller = controller_tf(ControllerParams(1.0, 0.0, 0.0))

    tf = closed_loop(get_first_order_plant(), controller)

    assert tf.numerator.terms == ((1.0, 0.0),)
    assert tf.denominator.terms == ((2.0, 0.0), (1.0, 1.0))


def test_closed_loop_matches_the_feedback_formula():
    """GIVEN the fractional plant and a fractional controller
    WHEN the loop is closed
    THEN T(s) = G C / (1 + G C) at a test point and no exponent is negative
    """

    plant = get_fractional_plant()
    controller = controller_tf(ControllerParams(419.57, 638.72, 49.83, 0.25, 1.26))
    tf = closed_loop(plant, controller)

    s = complex(0.7, 2.5)
    loop_gain = plant(s) * controller(s)

    assert tf(s) == pytest.approx(loop_gain / (1 + loop_gain), rel=1e-10)
    assert min(tf.numerator.exponents) >= 0.0
    assert tf.denominator.min_exponent == 0.0


def test_closed_loop_with_a_vanishing_denominator():
    """GIVEN a loop whose characteristic polynomial cancels
    WHEN the loop is closed
    THEN a CompositionError is raised
    """

    plant = FractionalTransferFunction.from_dict(
        {"num": [[1.0, 0.0]], "den": [[-1.0, 0.0]]}
    )

    with pytest.raises(CompositionError):
        closed_loop(plant, controller_tf(ControllerParams(1.0, 0.0, 0.0)))


def test_char_eval_at_an_exact_pole():
    """GIVEN the plant 1 / (s + 1) with Kp = 1
    WHEN the characteristic expression is evaluated at s = -2
    THEN it is zero
    """

    value = char_eval(get_first_order_plant(), ControllerParams(1.0, 0.0, 0.0), -2.0)

    assert value == pytest.approx(0.0, abs=1e-15)


def test_transfer_function_validation_and_serialization():
    """GIVEN an empty denominator or bad controller parameters
    WHEN they are constructed
    THEN a TransferFunctionError is raised, and a valid transfer function
    survives to_dict / from_dict
    """

    with pytest.raises(TransferFunctionError):
        FractionalTransferFunction(
            FractionalPolynomial.constant(1.0), FractionalPolynomial()
        )

    with pytest.raises(TransferFunctionError):
        FractionalTransferFunction.from_dict({"num": [[1.0, 0.0]]})

    with pytest.raises(TransferFunctionError):
        ControllerParams(1.0, 2.0, 3.0, 2.5, 1.0)

    with pytest.raises(TransferFunctionError):
        ControllerParams(-1.0, 2.0, 3.0)

    plant = get_fractional_plant()
    assert FractionalTransferFunction.from_dict(plant.to_dict()) == plant


def test_cancel_common_power():
    """GIVEN s^0.5 (s + 2) / s^0.5 and a zero numerator
    WHEN the common power of s is cancelled
    THEN the result is (s + 2) / 1, and 0 / 1 for the zero numerator
    """

    tf = FractionalTransferFunction(
        FractionalPolynomial(((2.0, 0.5), (1.0, 1.5))),
        FractionalPolynomial.monomial(1.0, 0.5),
    ).cancel_common_power()

    assert tf.numerator.terms == ((2.0, 0.0), (1.0, 1.0))
    assert tf.denominator.terms == ((1.0, 0.0),)

    zero = FractionalTransferFunction(
        FractionalPolynomial(), FractionalPolynomial.monomial(3.0, 1.0)
    ).cancel_common_power()
    assert zero.numerator.is_zero()
    assert zero.denominator.terms == ((1.0, 0.0),)
