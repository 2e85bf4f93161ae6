from src.features.extractor import FeatureExtractor, FeatureVector, extract, select_predecessors
from src.features.schema import (
    DEFAULT_PRED_SLOTS,
    FEATURE_GROUPS,
    SENTINEL,
    FeatureSchema,
    feature_schema,
)
