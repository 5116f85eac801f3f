"""Bivariate phase-type model of a couple's remaining lifetimes."""

__version__ = "0.1.0"

from .model import TABLE1, BlockGenerator, ModelParams, ParameterError, build_model  # noqa: E402

__all__ = ["TABLE1", "BlockGenerator", "ModelParams", "ParameterError", "build_model", "__version__"]
