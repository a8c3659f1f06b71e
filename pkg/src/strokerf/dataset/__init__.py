"""Cohort data model: feature codebook, patient records, CSV interface, synthetic generator."""

from strokerf.dataset.codebook import (
    GROUPS,
    GROUP_ALL,
    GROUP_ICH,
    GROUP_IS,
    FeatureCodebook,
    FeatureDef,
    default_codebook,
)

__all__ = [
    "GROUPS",
    "GROUP_ALL",
    "GROUP_ICH",
    "GROUP_IS",
    "FeatureCodebook",
    "FeatureDef",
    "default_codebook",
]
