"""Storage layouts and retrieval plans."""

from .grouped import (
    GroupedScheme,
    decode_grouped,
    encode_grouped,
    permutations_from_seed,
    plan_grouped,
    unrank_permutation,
    virtual_queries,
)
from .layout import (
    QueryPlan,
    StorageLayout,
    StorageProfile,
    dumps,
    group_property_holds,
    storage_profile,
)
from .reduced import (
    ReducedScheme,
    decode_reduced_n4k2,
    encode_reduced_n4k2,
    plan_reduced_n4k2,
)

__all__ = [
    "GroupedScheme",
    "QueryPlan",
    "ReducedScheme",
    "StorageLayout",
    "StorageProfile",
    "decode_grouped",
    "decode_reduced_n4k2",
    "dumps",
    "encode_grouped",
    "encode_reduced_n4k2",
    "group_property_holds",
    "permutations_from_seed",
    "plan_grouped",
    "plan_reduced_n4k2",
    "storage_profile",
    "unrank_permutation",
    "virtual_queries",
]
