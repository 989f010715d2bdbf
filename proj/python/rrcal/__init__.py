"""Extrinsic calibration of two Doppler radars from ego-velocity pairs."""

from ._core import (
    PAIR_COLUMNS,
    Error,
    Report,
    UnidentifiableError,
    calibrate,
    ego_velocity,
    excitation,
    load_pairs,
    ransac_ego_velocity,
    recover_scale,
    simulate,
    write_pairs,
)

__all__ = [
    "PAIR_COLUMNS",
    "Error",
    "Report",
    "UnidentifiableError",
    "calibrate",
    "ego_velocity",
    "excitation",
    "load_pairs",
    "ransac_ego_velocity",
    "recover_scale",
    "simulate",
    "write_pairs",
]
