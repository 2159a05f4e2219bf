from .profiles import (
    MAX_JOINT_BITS,
    JwkrProfile,
    WkrProfile,
    bit_mask,
    expand_bits,
    jwkr_profile,
    load_profile,
    project_bits,
    save_profile,
    wkr_profile,
    write_profile_csv,
)
from .search import (
    SIGMA_FLOOR,
    CiphertextStructure,
    KeyCandidateList,
    bayesian_key_search,
    joint_bayesian_key_search,
    loglik,
    rank_space,
    score_key_pair,
)

__all__ = [
    "MAX_JOINT_BITS",
    "SIGMA_FLOOR",
    "CiphertextStructure",
    "JwkrProfile",
    "KeyCandidateList",
    "WkrProfile",
    "bayesian_key_search",
    "bit_mask",
    "expand_bits",
    "joint_bayesian_key_search",
    "jwkr_profile",
    "load_profile",
    "loglik",
    "project_bits",
    "rank_space",
    "save_profile",
    "score_key_pair",
    "wkr_profile",
    "write_profile_csv",
]
