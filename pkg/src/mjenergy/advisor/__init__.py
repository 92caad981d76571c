"""Refactoring advisor: detection, transforms, deltas and equivalence."""

from .detect import (Thresholds, detect_all, detect_if_combination, detect_inline_candidates,
                     detect_library_substitution, detect_loop_invariant, detect_unroll)
from .evaluate import (EquivalenceReport, estimate, estimate_delta, measured_delta,
                       verify_equivalence)
from .pipeline import PLANS, advise, rank, run_pipeline
from .suggestion import KINDS, Profile, Suggestion, dump_suggestions, load_suggestions
from .transform import apply_transform, unified_diff

__all__ = ["EquivalenceReport", "KINDS", "PLANS", "Profile", "Suggestion", "Thresholds", "advise",
           "apply_transform", "detect_all", "detect_if_combination", "detect_inline_candidates",
           "detect_library_substitution", "detect_loop_invariant", "detect_unroll",
           "dump_suggestions", "estimate", "estimate_delta", "load_suggestions",
           "measured_delta", "rank", "run_pipeline", "unified_diff", "verify_equivalence"]
