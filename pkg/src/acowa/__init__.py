"""Distributed sparse logistic regression with centroid augmentation and
feature-reweighted optimal weighted averaging."""

from .aggregate import METHODS, MethodSpec, PipelineResult, run_pipeline
from .data import (PartitionPlan, SparseDataset, load_libsvm, parse_libsvm,
                   partition, subsample, synth_sparse)
from .objective import ModelVector, Penalty, logistic_loss, objective
from .solver import SolveResult, SolverConfig, solve_glmnet

__all__ = [
    "METHODS", "MethodSpec", "ModelVector", "PartitionPlan", "Penalty", "PipelineResult",
    "SolveResult", "SolverConfig",
    "SparseDataset", "load_libsvm", "logistic_loss", "objective", "parse_libsvm",
    "partition", "run_pipeline", "solve_glmnet", "subsample", "synth_sparse",
]
