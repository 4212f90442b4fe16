"""Downlink budget: Bessel beam pattern, path loss, receive gain, CNR.

Everything returned in logarithmic units is dB (dBi, dBW where noted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable, Sequence

SPEED_OF_LIGHT = 299_792_458.0
NULL_GAIN_DB = -400.0
# Linear pattern values below this are treated as an exact null.
_NULL_FLOOR = 1e-30

_J1_SERIES_LIMIT = 12.0
_J1_MAX_ARG = 200.0
_J1_SERIES_TERMS = 40


def _j1_series_coefficients(n: int) -> tuple[float, ...]:
    coeffs = []
    for m in range(n):
        coeffs.append((-1) ** m / (math.factorial(m) * math.factorial(m + 1)))
    return tuple(coeffs)


_J1_COEFFS = _j1_series_coefficients(_J1_SERIES_TERMS)


def _j1_polynomial(x: float) -> float:
    half = 0.5 * x
    t = half * half
    acc = 0.0
    for c in reversed(_J1_COEFFS):
        acc = acc * t + c
    return half * acc


def _j1_asymptotic(x: float) -> float:
    # Hankel expansion truncated at its smallest term.
    mu = 4.0
    p = 0.0
    q = 0.0
    term = 1.0
    prev = math.inf
    k = 0
    while True:
        mag = abs(term)
        if mag >= prev or mag < 1e-18:
            break
        prev = mag
        # a_k / x^k with alternating sign pattern split between P and Q
        if k % 2 == 0:
            p += term if (k // 2) % 2 == 0 else -term
        else:
            q += term if (k // 2) % 2 == 0 else -term
        k += 1
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
    chi = x - 0.75 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def bessel_j1(x: float) -> float:
    """Bessel function of the first kind, order one, on [0, 200].

    A fixed-degree polynomial (Horner form of the Maclaurin expansion) is
    used up to x = 12 and the Hankel asymptotic expansion beyond; both are
    accurate to about 1e-11 absolute on their ranges.
    """
    if not 0.0 <= x <= _J1_MAX_ARG:
        raise ValueError(f"bessel_j1 argument {x} outside [0, {_J1_MAX_ARG}]")
    if x <= _J1_SERIES_LIMIT:
        return _j1_polynomial(x)
    return _j1_asymptotic(x)


@dataclass(frozen=True)
class LinkBudgetParams:
    """Physical constants of the downlink.

    Defaults reproduce the MEO scenario: 18.05 GHz, aperture radius 5
    wavelengths, 0.6 m antenna, 50 dBi peak gain, -118 dBW noise, 23.5 dBW
    total power, HPBW of 3.2 degrees. Efficiency (0.6) and atmospheric loss
    (0.5 dB) are assumed values.
    """

    carrier_freq: float = 18.05e9
    aperture_radius_over_lambda: float = 5.0
    antenna_diameter: float = 0.6
    antenna_efficiency: float = 0.6
    max_beam_gain_db: float = 50.0
    atmospheric_loss_db: float = 0.5
    noise_power_dbw: float = -118.0
    total_power_dbw: float = 23.5
    half_beamwidth_deg: float = 1.6

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ValueError(f"{f.name} must be a finite number, got {value!r}")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.aperture_radius_over_lambda <= 0:
            raise ValueError("aperture_radius_over_lambda must be positive")
        if self.antenna_diameter <= 0:
            raise ValueError("antenna_diameter must be positive")
        if not 0 < self.antenna_efficiency <= 1:
            raise ValueError("antenna_efficiency must lie in (0, 1]")
        if not 0 < self.half_beamwidth_deg < 90:
            raise ValueError("half_beamwidth_deg must lie in (0, 90)")

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in metres."""
        return SPEED_OF_LIGHT / self.carrier_freq


@dataclass(frozen=True)
class LinkMetrics:
    gain_pattern: float
    scg_db: float
    scgnr_db: float
    cnr_db: float


def _pattern_argument(theta: float, params: LinkBudgetParams) -> float:
    return 2.0 * math.pi * params.aperture_radius_over_lambda * math.sin(math.radians(theta))


def normalized_gain(theta: float, params: LinkBudgetParams) -> float:
    """Normalized circular-aperture pattern ``4 |J1(x) / x|^2``, 1 on boresight.

    ``x = (2 pi / lambda) beta sin(theta)`` with ``theta`` in degrees.
    """
    if not 0.0 <= theta <= 90.0:
        raise ValueError(f"off-axis angle {theta} outside [0, 90] degrees")
    if theta == 0.0:
        return 1.0
    x = _pattern_argument(theta, params)
    if x == 0.0:
        return 1.0
    r = bessel_j1(x) / x
    return min(1.0, 4.0 * r * r)


def beam_gain(theta: float, params: LinkBudgetParams) -> float:
    """Beam gain toward a user in dBi; ``NULL_GAIN_DB`` at pattern nulls."""
    g = normalized_gain(theta, params)
    if g <= _NULL_FLOOR:
        return NULL_GAIN_DB
    return params.max_beam_gain_db + 10.0 * math.log10(g)


def free_space_path_loss(slant_range: float, params: LinkBudgetParams) -> float:
    """``10 log10(16 pi^2 S^2 / lambda^2)`` with the range given in km."""
    if not slant_range > 0:
        raise ValueError(f"slant range must be positive, got {slant_range}")
    s = slant_range * 1e3
    return 20.0 * math.log10(4.0 * math.pi * s / params.wavelength)


def receive_gain(params: LinkBudgetParams) -> float:
    lam = params.wavelength
    return 10.0 * math.log10(params.antenna_efficiency * math.pi**2 * params.antenna_diameter**2 / lam**2)


def statistical_channel_gain(theta: float, slant_range: float, params: LinkBudgetParams) -> float:
    return (
        receive_gain(params)
        + beam_gain(theta, params)
        - free_space_path_loss(slant_range, params)
        - params.atmospheric_loss_db
    )


def scgnr(theta: float, slant_range: float, params: LinkBudgetParams) -> float:
    """Channel gain to noise ratio in dB."""
    return statistical_channel_gain(theta, slant_range, params) - params.noise_power_dbw


def cnr(theta: float, slant_range: float, power_dbw: float, params: LinkBudgetParams) -> float:
    return power_dbw + statistical_channel_gain(theta, slant_range, params) - params.noise_power_dbw


def link_metrics(theta: float, slant_range: float, power_dbw: float, params: LinkBudgetParams) -> LinkMetrics:
    scg = statistical_channel_gain(theta, slant_range, params)
    return LinkMetrics(
        gain_pattern=normalized_gain(theta, params),
        scg_db=scg,
        scgnr_db=scg - params.noise_power_dbw,
        cnr_db=power_dbw + scg - params.noise_power_dbw,
    )


# Transmit power policies map (total dBW, beam sizes, beam index) to the
# per-user power of a member of that beam.
PowerPolicy = Callable[[float, Sequence[int], int], float]


def equal_split_power(total_power_dbw: float, beam_sizes: Sequence[int], beam: int) -> float:
    """Split total power equally over beams, then equally over each beam's users."""
    n_beams = len(beam_sizes)
    if n_beams == 0 or beam_sizes[beam] <= 0:
        raise ValueError("power split needs a non-empty beam")
    return total_power_dbw - 10.0 * math.log10(n_beams) - 10.0 * math.log10(beam_sizes[beam])


def _bisect(f: Callable[[float], float], lo: float, hi: float) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def first_null_angle(params: LinkBudgetParams) -> float:
    """Off-axis angle (degrees) of the first zero of the pattern.

    Raises ``ValueError`` if the aperture is too small for a null below 90.
    """
    x_max = 2.0 * math.pi * params.aperture_radius_over_lambda
    # First positive zero of J1 lies in (3.8, 3.9).
    root = _bisect(bessel_j1, 3.8, 3.9)
    if root > x_max:
        raise ValueError("pattern has no null within 90 degrees")
    return math.degrees(math.asin(root / x_max))


def half_power_angle(params: LinkBudgetParams) -> float:
    """Off-axis angle (degrees) where the normalized pattern falls to 0.5."""
    upper = first_null_angle(params)
    return _bisect(lambda t: normalized_gain(t, params) - 0.5, 0.0, upper)
