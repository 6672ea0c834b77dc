"""Low-light image enhancement by bilateral-space Retinex decomposition.

An image is split into illumination E and noise N by per-pixel transforms
whose coefficients are sliced from a predicted bilateral grid; the
enhanced output is the reflectance R = (I - N) / E.
"""

from .pipeline import Decomposition, PipelineConfig, decompose, enhance
from .predictor import PredictorConfig, identity_params, init_params
from .trainer import train

__all__ = [
    "Decomposition", "PipelineConfig", "PredictorConfig",
    "decompose", "enhance", "identity_params", "init_params", "train",
]
__version__ = "0.1.0"
