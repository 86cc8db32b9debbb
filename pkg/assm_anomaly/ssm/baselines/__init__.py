from .kalman import (
    KfModel,
    KfState,
    KfConfig,
    constant_velocity_model,
    kf_init,
    kf_step,
    kf_run,
)

__all__ = [
    "KfModel",
    "KfState",
    "KfConfig",
    "constant_velocity_model",
    "kf_init",
    "kf_step",
    "kf_run",
]
