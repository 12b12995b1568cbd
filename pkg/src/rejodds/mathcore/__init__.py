"""Numerical kernel: normal functions, quadrature, maximization, RNG streams."""

from .normal import (
    norm_cdf,
    norm_cdf_array,
    norm_logcdf_array,
    norm_logpdf,
    norm_logpdf_array,
    norm_pdf,
    norm_quantile,
    norm_sf,
    norm_sf_array,
)
from .optimize import maximize_1d
from .quadrature import DEFAULT_QUADRATURE, Quadrature, integrate
from .rng import BLOCK_SIZE, RngContract, blocks, map_blocks

# long-form aliases
std_normal_cdf = norm_cdf
std_normal_quantile = norm_quantile

__all__ = [
    "BLOCK_SIZE",
    "DEFAULT_QUADRATURE",
    "Quadrature",
    "RngContract",
    "blocks",
    "integrate",
    "map_blocks",
    "maximize_1d",
    "norm_cdf",
    "norm_cdf_array",
    "norm_logcdf_array",
    "norm_logpdf",
    "norm_logpdf_array",
    "norm_pdf",
    "norm_quantile",
    "norm_sf",
    "norm_sf_array",
    "std_normal_cdf",
    "std_normal_quantile",
]
