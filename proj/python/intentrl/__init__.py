"""Python access to the intentrl core."""

from ._core import (
    REFERENCE_BASE_RATES,
    Classifier,
    ConfigError,
    DataError,
    DimensionError,
    DomainError,
    Error,
    IoError,
    NumericError,
    delayed_reward,
    dissonance,
    encode_pad,
    run_cli,
    softmax,
    synth_corpus,
    tokenize,
    vacuity_maximize,
)

__all__ = [
    "REFERENCE_BASE_RATES",
    "Classifier",
    "ConfigError",
    "DataError",
    "DimensionError",
    "DomainError",
    "Error",
    "IoError",
    "NumericError",
    "delayed_reward",
    "dissonance",
    "encode_pad",
    "run_cli",
    "softmax",
    "synth_corpus",
    "tokenize",
    "vacuity_maximize",
]
