from .dataset import (
    Dataset,
    KeyRelation,
    NegativeMode,
    PairStructure,
    balanced_labels,
    generate_dataset,
    generate_pair_set,
    generate_real_structure,
    load_dataset,
    save_dataset,
)
from .formats import (
    BaseFormat,
    DataFormatSpec,
    HalfRxDifference,
    RxKeyPair,
    bits_to_words,
    build_sample,
    build_samples,
    compute_components,
    decode_ciphertexts,
    enumerate_half_rxd,
    make_rx_plaintext_pair,
    rx_difference,
    words_to_bits,
)
from .rng import CounterRng, derive_seed, map_chunks

__all__ = [
    "BaseFormat",
    "CounterRng",
    "DataFormatSpec",
    "Dataset",
    "HalfRxDifference",
    "KeyRelation",
    "NegativeMode",
    "PairStructure",
    "RxKeyPair",
    "balanced_labels",
    "bits_to_words",
    "build_sample",
    "build_samples",
    "compute_components",
    "decode_ciphertexts",
    "derive_seed",
    "enumerate_half_rxd",
    "generate_dataset",
    "generate_pair_set",
    "generate_real_structure",
    "load_dataset",
    "make_rx_plaintext_pair",
    "map_chunks",
    "rx_difference",
    "save_dataset",
    "words_to_bits",
]
