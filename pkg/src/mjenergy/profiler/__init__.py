from .cases import (InputTemplate, case_duration, generate_cases, read_cases, read_counts,
                    run_suite, write_cases, write_counts)
from .interp import (CountVector, ExecutionCase, RunResult, aggregate_counts, run_case,
                     static_recount)

__all__ = ["CountVector", "ExecutionCase", "InputTemplate", "RunResult", "aggregate_counts",
           "case_duration", "generate_cases", "read_cases", "read_counts", "run_case", "run_suite",
           "static_recount", "write_cases", "write_counts"]
