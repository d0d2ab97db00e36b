import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

import numpy as np

from seq2seq_univ.exceptions import ConversionError
from sublayers.layers import (
    RELU,
    AttnSublayer,
    FFSublayer,
    Network,
    Normalizer,
    PiecewiseLinear3,
)
from tensorcore.scalars import Mode, Number, to_exact

logger = logging.getLogger(__name__)

LEFT = -1
RIGHT = 1


def _exact_parameter(value: Union[Number, str]) -> Fraction:
    # 1e-4 is meant as the decimal, not as the nearest binary64.
    if isinstance(value, float):
        return Fraction(repr(value))
    return to_exact(value)


@dataclass(frozen=True)
class ConversionParams:
    """Softmax temperature lam and ReLU transition band width epsilon."""

    lam: float
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "epsilon", _exact_parameter(self.epsilon))
        if not self.lam > 0:
            raise ConversionError(
                f"Softmax temperature must be positive, got {self.lam}."
            )
        if not self.epsilon > 0:
            raise ConversionError(f"Band width must be positive, got {self.epsilon}.")


@dataclass(frozen=True)
class ReluSynthesis:
    """constant + sum_m coefficients[m] * ReLU(signs[m] * (t - breakpoints[m]))."""

    signs: Tuple[int, int, int, int]
    breakpoints: Tuple[Fraction, Fraction, Fraction, Fraction]
    coefficients: Tuple[Fraction, Fraction, Fraction, Fraction]
    constant: Fraction

    def __call__(self, t):
        return self.constant + sum(
            coefficient * max(sign * (t - breakpoint), 0)
            for sign, breakpoint, coefficient in zip(
                self.signs, self.breakpoints, self.coefficients
            )
        )

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        convert = to_exact if values.dtype == object else float
        out = np.zeros_like(values) + convert(self.constant)
        for sign, breakpoint, coefficient in zip(
            self.signs, self.breakpoints, self.coefficients
        ):
            shifted = sign * (values - convert(breakpoint))
            unit = np.where(shifted > 0, shifted, shifted * 0)
            out = out + convert(coefficient) * unit
        return out

    def fragment(self, layer: FFSublayer) -> FFSublayer:
        """Replace the single Phi unit of layer by four ReLU units."""
        W1 = layer.W1[0]
        b1 = layer.b1[0]
        W2 = layer.W2[:, 0]
        signs = np.array([Fraction(sign) for sign in self.signs], dtype=object)
        coefficients = np.array(self.coefficients, dtype=object)
        breakpoints = np.array(self.breakpoints, dtype=object)
        return FFSublayer(
            np.outer(signs, W1),
            signs * (b1 - breakpoints),
            np.outer(W2, coefficients),
            layer.b2 + W2 * self.constant,
            RELU,
            Mode.EXACT,
        )


def _is_constant(phi: PiecewiseLinear3) -> bool:
    return len(set(phi.pieces)) == 1 and phi.left.slope == 0


def relu4_of_phi(phi: PiecewiseLinear3, epsilon: Number) -> ReluSynthesis:
    """Four ReLU units that equal phi outside (c1 - eps, c1) and (c2 - eps, c2).

    Inside the two bands the result interpolates linearly between the
    neighbouring pieces.

    Raises:
        ConversionError: if eps is not below half the gap between breakpoints
    """
    phi = phi.to_mode(Mode.EXACT)
    eps = _exact_parameter(epsilon)
    c1, c2 = phi.c1, phi.c2
    breakpoints = (c1 - eps, c1, c2 - eps, c2)
    if _is_constant(phi):
        zero = Fraction(0)
        return ReluSynthesis(
            (RIGHT,) * 4, breakpoints, (zero,) * 4, phi.left.intercept
        )
    if not 0 < eps < (c2 - c1) / 2:
        raise ConversionError(
            f"Band width {eps} must be positive and below half of {c2 - c1}."
        )

    left_band = (phi.middle.at(c1) - phi.left.at(c1 - eps)) / eps
    right_band = (phi.right.at(c2) - phi.middle.at(c2 - eps)) / eps
    slopes = (phi.left.slope, left_band, phi.middle.slope, right_band, phi.right.slope)
    coefficients = tuple(slopes[m + 1] - slopes[m] for m in range(4))

    if phi.left.slope == 0:
        signs, constant = (RIGHT,) * 4, phi.left.intercept
    elif phi.right.slope == 0:
        signs, constant = (LEFT,) * 4, phi.right.intercept
    else:
        signs, constant = (LEFT, LEFT, RIGHT, RIGHT), phi.middle.intercept
    return ReluSynthesis(signs, breakpoints, coefficients, constant)


def _is_modified(sublayer) -> bool:
    if isinstance(sublayer, AttnSublayer):
        return sublayer.normalizer is Normalizer.HARDMAX
    if isinstance(sublayer, FFSublayer):
        return isinstance(sublayer.activation, PiecewiseLinear3) and sublayer.r == 1
    return False


def anneal_sublayer(sublayer, params: ConversionParams):
    if isinstance(sublayer, AttnSublayer):
        heads = tuple(head.to_mode(Mode.FLOAT) for head in sublayer.heads)
        return AttnSublayer(heads, Normalizer.SOFTMAX, params.lam)
    exact = sublayer.to_mode(Mode.EXACT)
    synthesis = relu4_of_phi(exact.activation, params.epsilon)
    return synthesis.fragment(exact).to_mode(Mode.FLOAT)


def anneal_network(modified: Network, params: ConversionParams) -> Network:
    """Softmax(lam) for every hardmax sublayer and four ReLUs for every Phi unit.

    The result is evaluated in Float mode and has at most two heads of size one
    and feed-forward width four when built from a constructed network.
    """
    for index, sublayer in enumerate(modified.sublayers):
        if not _is_modified(sublayer):
            raise ConversionError(
                f"Sublayer {index} ({type(sublayer).__name__}) is not a hardmax "
                "attention or single unit Phi feed-forward sublayer."
            )
    sublayers = tuple(
        anneal_sublayer(sublayer, params) for sublayer in modified.sublayers
    )
    encoding = modified.positional_encoding
    annealed = Network(
        sublayers,
        encoding.astype(np.float64) if encoding is not None else None,
        modified.d,
    )
    logger.info(
        "Annealed %s sublayers with lambda=%s, epsilon=%s",
        len(sublayers),
        params.lam,
        params.epsilon,
    )
    return annealed
