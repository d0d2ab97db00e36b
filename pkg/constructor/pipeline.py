import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from constructor.contextual import (
    build_contextual_mapper,
    build_positional_contextual_mapper,
)
from constructor.grid import GridParams, positional_encoding
from constructor.quantizer import build_positional_quantizer, build_quantizer
from constructor.targets import PiecewiseConstantFn
from constructor.value_mapping import (
    build_positional_value_mapper,
    build_value_mapper,
    check_budget,
)
from sublayers.forward import network_signature
from sublayers.layers import Network, group_into_blocks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerCounts:
    quantizer: int
    contextual: int
    value: int

    @property
    def total(self) -> int:
        return self.quantizer + self.contextual + self.value

    def as_dict(self) -> dict:
        return {
            "quantizer": self.quantizer,
            "contextual": self.contextual,
            "value": self.value,
        }


@dataclass(frozen=True, eq=False)
class ConstructionResult:
    """The modified network g_v o g_c o g_q and what was measured building it."""

    network: Network
    layer_counts: LayerCounts
    u: np.ndarray
    t_l: Fraction
    t_r: Fraction
    grid: GridParams
    positional: bool = False

    @property
    def quantizer(self) -> Network:
        return Network(
            self.network.sublayers[: self.layer_counts.quantizer],
            self.network.positional_encoding,
        )

    @property
    def contextual(self) -> Network:
        start = self.layer_counts.quantizer
        return Network(
            self.network.sublayers[start : start + self.layer_counts.contextual]
        )

    @property
    def value(self) -> Network:
        start = self.layer_counts.quantizer + self.layer_counts.contextual
        return Network(self.network.sublayers[start:])


def assemble_modified_network(
    grid: GridParams,
    fbar: PiecewiseConstantFn,
    budget: Optional[int] = None,
    enumeration_limit: Optional[int] = None,
) -> ConstructionResult:
    """Quantizer, contextual mapper and value mapper for an equivariant target."""
    quantizer = build_quantizer(grid)
    mapper = build_contextual_mapper(grid)
    value = build_value_mapper(grid, fbar, mapper, budget, enumeration_limit)
    counts = LayerCounts(len(quantizer), len(mapper.sublayers), len(value))
    network = Network(tuple(quantizer) + tuple(mapper.sublayers) + tuple(value))
    logger.info(
        "Built modified network on %s grid: quantizer=%s contextual=%s value=%s",
        grid,
        counts.quantizer,
        counts.contextual,
        counts.value,
    )
    return ConstructionResult(network, counts, mapper.u, mapper.t_l, mapper.t_r, grid)


def build_positional_pipeline(
    grid: GridParams, fbar: PiecewiseConstantFn, budget: Optional[int] = None
) -> ConstructionResult:
    """Modified network with positional encoding E for a target of any symmetry."""
    encoding = positional_encoding(grid.d, grid.n)
    check_budget(
        closed_form_counts(grid, positional=True).total, budget, "Positional pipeline"
    )
    quantizer = build_positional_quantizer(grid)
    mapper = build_positional_contextual_mapper(grid)
    value = build_positional_value_mapper(grid, fbar, mapper, encoding, budget)
    counts = LayerCounts(len(quantizer), len(mapper.sublayers), len(value))
    network = Network(
        tuple(quantizer) + tuple(mapper.sublayers) + tuple(value), encoding
    )
    logger.info(
        "Built positional network on %s grid: quantizer=%s contextual=%s value=%s",
        grid,
        counts.quantizer,
        counts.contextual,
        counts.value,
    )
    return ConstructionResult(
        network, counts, mapper.u, mapper.t_l, mapper.t_r, grid, positional=True
    )


def closed_form_counts(grid: GridParams, positional: bool = False) -> LayerCounts:
    """Sublayer counts the constructions promise before anything is built."""
    if positional:
        return LayerCounts(
            quantizer=grid.d * grid.n * grid.q,
            contextual=grid.n * grid.q**grid.d + 1,
            value=grid.n * grid.grid_size,
        )
    return LayerCounts(
        quantizer=grid.d * grid.q + grid.d,
        contextual=grid.q**grid.d + 1,
        value=1 + grid.d + grid.n * grid.orbit_count,
    )


def value_bound(grid: GridParams, positional: bool = False) -> float:
    """n (1/delta)^(dn) / n!, or without the n! when there is no equivariance."""
    scale = grid.n * grid.grid_size
    return float(scale if positional else Fraction(scale, math.factorial(grid.n)))


def layer_count_report(result: ConstructionResult) -> dict:
    """Measured against promised sublayer counts, block count and parameter totals."""
    grid = result.grid
    promised = closed_form_counts(grid, result.positional)
    signature = network_signature(result.network)
    bound = value_bound(grid, result.positional)
    return {
        "grid": grid.as_dict(),
        "positional": result.positional,
        "measured": result.layer_counts.as_dict(),
        "closed_form": promised.as_dict(),
        "matches_closed_form": result.layer_counts == promised,
        "value_bound": bound,
        "value_ratio": result.layer_counts.value / bound,
        "blocks": len(group_into_blocks(result.network)),
        "parameters": signature.parameters,
        "parameter_bound": grid.d * bound,
        "residual_network_cubes": grid.grid_size,
        "signature": list(signature.as_tuple()),
    }
