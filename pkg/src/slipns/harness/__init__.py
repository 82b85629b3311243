"""Verification harness: configuration, experiments and structured output."""

from .config import RunConfig
from .experiments import (RUNNERS, run_bound_check, run_inviscid_rate, run_kernel_verification, run_ns,
                          run_oracle_crosscheck, run_pointwise_bound, run_stokes)
from .report import ExperimentReport, emit_outputs
