from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class DesignSpec:
    """Time-domain specification: peak overshoot as a fraction and the 0-100 %
    rise time in seconds. Inequality specs are designed at their limit."""

    mp: float
    t_rise: float

    def __post_init__(self):
        if not 0.0 < self.mp < 1.0:
            raise SpecError(f"Peak overshoot must lie in (0, 1), got {self.mp}")
        if not self.t_rise > 0.0:
            raise SpecError(f"Rise time must be positive, got {self.t_rise}")

    def damping(self) -> DampingSpec:
        zeta = zeta_from_overshoot(self.mp)
        return DampingSpec(zeta, omega_from_rise(zeta, self.t_rise))


@dataclass(frozen=True)
class DampingSpec:
    """Damping ratio and undamped natural frequency (rad/s) of the dominant
    pole pair."""

    zeta: float
    omega_n: float

    def __post_init__(self):
        if not 0.0 < self.zeta < 1.0:
            raise SpecError(f"Damping ratio must lie in (0, 1), got {self.zeta}")
        if not self.omega_n > 0.0:
            raise SpecError(f"Natural frequency must be positive, got {self.omega_n}")


@dataclass(frozen=True)
class DominantPoles:
    """The desired pole pair ``p1,2 = -a +/- jb``."""

    p1: complex
    p2: complex
    a: float
    b: float


def parse_overshoot(value: Union[str, float]) -> float:
    """Read an overshoot given either as a fraction (``0.1``) or as a percent
    string with an explicit unit suffix (``"10%"``)."""
    if isinstance(value, str):
        text = value.strip()
        try:
            if text.endswith("%"):
                return float(text[:-1]) / 100.0
            return float(text)
        except ValueError as error:
            raise SpecError(f"Cannot read peak overshoot from {value!r}") from error
    return float(value)


def zeta_from_overshoot(mp: float) -> float:
    """Damping ratio giving a peak overshoot ``mp`` in a second order system,
    ``zeta = -ln(mp) / sqrt(ln(mp)**2 + pi**2)``.

    Raises
    ------
    SpecError
        If ``mp`` is not in (0, 1).
    """
    if not 0.0 < mp < 1.0:
        raise SpecError(f"Peak overshoot must lie in (0, 1), got {mp}")

    log_mp = math.log(mp)
    return -log_mp / math.sqrt(log_mp**2 + math.pi**2)


def omega_from_rise(zeta: float, t_rise: float) -> float:
    """Undamped natural frequency giving the 0-100 % rise time ``t_rise``.

    Parameters
    ----------
    zeta : float
        Damping ratio in (0, 1).
    t_rise : float
        Rise time in seconds.

    Returns
    -------
    float
        ``(pi - atan(sqrt(1 - zeta**2) / zeta)) / (t_rise * sqrt(1 - zeta**2))``
    """
    if not 0.0 < zeta < 1.0:
        raise SpecError(f"Damping ratio must lie in (0, 1), got {zeta}")
    if not t_rise > 0.0:
        raise SpecError(f"Rise time must be positive, got {t_rise}")

    root = math.sqrt(1.0 - zeta**2)
    return (math.pi - math.atan(root / zeta)) / (t_rise * root)


def dominant_poles(d: DampingSpec) -> DominantPoles:
    """Place the dominant pole pair for a damping ratio and natural frequency."""
    a = d.zeta * d.omega_n
    b = d.omega_n * math.sqrt(1.0 - d.zeta**2)
    p1 = complex(-a, b)
    return DominantPoles(p1=p1, p2=p1.conjugate(), a=a, b=b)


class SpecError(ValueError):
    """Raised when a time-domain or damping specification is out of range."""
