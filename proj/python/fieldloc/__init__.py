"""Probabilistic displacement-field localization: Python surface.

Thin re-export of the compiled core. The heavy lifting (autodiff, the
attention encoder, IRS inference, training) lives in C++; this package
exists for scripting experiments and smoke-checking builds.
"""

from ._core import (
    DisplacementDistribution,
    FieldlocError,
    IrsConfig,
    IrsResult,
    Mode,
    OracleField,
    OracleFieldSpec,
    PoseHypothesis,
    SceneGenConfig,
    StepStats,
    SyntheticScene,
    TrainConfig,
    Trainer,
    angmf_loss,
    bessel_i0,
    gaussian_nll,
    generate_scene,
    run_irs_oracle,
    vmf_density,
)

__all__ = [
    "DisplacementDistribution",
    "FieldlocError",
    "IrsConfig",
    "IrsResult",
    "Mode",
    "OracleField",
    "OracleFieldSpec",
    "PoseHypothesis",
    "SceneGenConfig",
    "StepStats",
    "SyntheticScene",
    "TrainConfig",
    "Trainer",
    "angmf_loss",
    "bessel_i0",
    "gaussian_nll",
    "generate_scene",
    "run_irs_oracle",
    "vmf_density",
]
