"""Feature extraction for the scam/benign domain classifier."""

from .encode import DatasetEncoder, DesignMatrix, encode_dataset
from .extract import extract_features, visible_text
from .schema import (
    BOOLEAN,
    CATEGORICAL,
    FEATURE_GROUPS,
    FEATURE_KINDS,
    FEATURE_NAMES,
    FEATURES,
    NUM_FEATURES,
    NUMERIC,
    SCHEMA_VERSION,
    FeatureVector,
    feature_index,
    schema_as_dict,
    vector_from_dict,
)
from .segment import (
    costs_from_counts,
    count_subwords,
    load_word_costs,
    normalize_label,
    segment_label,
)

__all__ = [
    "BOOLEAN",
    "CATEGORICAL",
    "DatasetEncoder",
    "DesignMatrix",
    "FEATURES",
    "FEATURE_GROUPS",
    "FEATURE_KINDS",
    "FEATURE_NAMES",
    "FeatureVector",
    "NUMERIC",
    "NUM_FEATURES",
    "SCHEMA_VERSION",
    "costs_from_counts",
    "count_subwords",
    "encode_dataset",
    "extract_features",
    "feature_index",
    "load_word_costs",
    "normalize_label",
    "schema_as_dict",
    "segment_label",
    "vector_from_dict",
    "visible_text",
]
