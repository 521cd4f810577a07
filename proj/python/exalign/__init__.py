"""Exclusive sequence alignment for paraphrase scoring.

A Hungarian-assignment layer inside a trainable BiLSTM encoder-matcher,
with gradients propagated through gather links constructed at forward
time. The heavy lifting lives in the C++ extension module.
"""

from exalign._core import (
    Model,
    assignment_total,
    brute_force_assignment,
    solve_max_assignment,
    synthetic_pairs,
    train_files,
    train_synthetic,
)

__all__ = [
    "Model",
    "assignment_total",
    "brute_force_assignment",
    "solve_max_assignment",
    "synthetic_pairs",
    "train_files",
    "train_synthetic",
]
