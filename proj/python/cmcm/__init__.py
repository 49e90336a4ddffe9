"""Convex cone (MCM, CMCM) and subspace (MSM, CMSM) image-set classifiers."""

from ._core import (
    AngleSpectrum,
    ConvexCone,
    DataError,
    Dataset,
    DimensionMismatch,
    Error,
    InvalidArgument,
    LabeledSet,
    Method,
    ModelConfig,
    NmfResult,
    NnlsSolution,
    NumericError,
    Prediction,
    Roc,
    Split,
    Subspace,
    SynthSpec,
    TrainedModel,
    canonical_angles,
    cone_angles,
    cone_from_features,
    cone_similarity,
    generate_synthetic,
    load_dataset,
    max_threads,
    nmf,
    nnls,
    otsu_threshold,
    parse_method,
    project_to_cone,
    roc,
    set_max_threads,
    subspace_from_features,
    train,
    train_dataset,
)

load_model = TrainedModel.load

__all__ = [name for name in dir() if not name.startswith("_")]
