"""d-imbalance write-once-memory codes for two-cell multi-level memories."""

from .constructions import build, build_construction1, build_diagonal_code, construction1_t, diagonal_t
from .core import (
    CodeParams,
    Family,
    Label,
    PhysicalState,
    WomCode,
    decode,
    is_d_balanced,
    load_code,
    reachable_region,
    save_code,
    update,
    write_sum,
)
from .verifier import check_imbalance_exhaustive, compute_frontiers, guaranteed_writes, relaxed_game_t

__all__ = [
    "CodeParams",
    "Family",
    "Label",
    "PhysicalState",
    "WomCode",
    "build",
    "build_construction1",
    "build_diagonal_code",
    "check_imbalance_exhaustive",
    "compute_frontiers",
    "construction1_t",
    "decode",
    "diagonal_t",
    "guaranteed_writes",
    "is_d_balanced",
    "load_code",
    "reachable_region",
    "relaxed_game_t",
    "save_code",
    "update",
    "write_sum",
]
