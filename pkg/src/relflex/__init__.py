"""Relative-position attention masks applied through nonuniform Fourier transforms."""

from .attention import (
    AttentionOutput,
    apply_feature_map,
    dense_masked_attention,
    dense_softmax_attention,
    masked_lowrank_attention,
    performer_attention,
)
from .core import (
    AttentionBatch,
    FeatureMap,
    ModulationFunction,
    PointCloud,
    QuadratureSet,
    RelFlexError,
    normalize_coords,
    read_point_cloud,
    validate_batch,
)
from .encodings import (
    RopeConfig,
    apply_point_rope,
    rope_quadrature,
    sample_cauchy_quadrature,
    string_quadrature,
)
from .fastmult import (
    BlendSchedule,
    MaskSpec,
    blended_fastmult,
    dense_quadrature_mask,
    fastmult,
    ideal_mask_value,
)
from .nudft import (
    NufftAccuracy,
    nudft_adjoint_direct,
    nudft_adjoint_fast,
    nudft_forward_direct,
    nudft_forward_fast,
)

__version__ = "0.1.0"
