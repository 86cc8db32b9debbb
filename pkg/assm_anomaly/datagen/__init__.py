from .synthetic import SPLITS, Split, GenConfig, Dataset, sequence_rng, generate_sequence, generate_dataset

__all__ = [
    "SPLITS",
    "Split",
    "GenConfig",
    "Dataset",
    "sequence_rng",
    "generate_sequence",
    "generate_dataset",
]
