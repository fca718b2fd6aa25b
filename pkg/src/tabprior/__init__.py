"""Synthetic tabular data prior with quantile-distribution, attention, and
encoding machinery."""

from .attention import (
    AttentionParams,
    attention,
    induced_self_attention,
    rescale_queries,
    selective_kv_cross_attention,
)
from .dataset import (
    GeneratedDataset,
    GenerationConfig,
    GenerationExhausted,
    generate_batch,
    generate_dataset,
)
from .encoding import (
    add_target_embedding,
    decode_views,
    encode_views,
    gather_groups,
    grouping_plan,
    mixed_radix_bases,
)
from .filtering import filter_dataset
from .functions import sample_function, sample_multi_function
from .quantiles import (
    QuantileDistribution,
    default_levels,
    enforce_monotone,
    evaluate_suite,
    fit_tails,
    make_validation_suite,
)
from .rng import CorrelatedSampler, RngStream, new_sampler_context, random_weights

__version__ = "0.1.0"

__all__ = [
    "AttentionParams",
    "attention",
    "induced_self_attention",
    "rescale_queries",
    "selective_kv_cross_attention",
    "GeneratedDataset",
    "GenerationConfig",
    "GenerationExhausted",
    "generate_batch",
    "generate_dataset",
    "add_target_embedding",
    "decode_views",
    "encode_views",
    "gather_groups",
    "grouping_plan",
    "mixed_radix_bases",
    "filter_dataset",
    "sample_function",
    "sample_multi_function",
    "QuantileDistribution",
    "default_levels",
    "enforce_monotone",
    "evaluate_suite",
    "fit_tails",
    "make_validation_suite",
    "CorrelatedSampler",
    "RngStream",
    "new_sampler_context",
    "random_weights",
    "__version__",
]
