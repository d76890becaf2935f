"""Certified partition-rank decompositions of tensors over finite fields."""

__version__ = "0.1.0"

from .engine import Certificate, Config, decompose  # noqa: E402
from .field import FieldCtx, ff_make, parse_field  # noqa: E402
from .oracles import check_inequalities, pr_bruteforce, pr_leq_one  # noqa: E402
from .tensor import PRDecomposition, PRTerm, Tensor, verify_decomposition, w_tensor  # noqa: E402
from .variety import analytic_rank, estimate_dim, find_regular_point  # noqa: E402

__all__ = [
    "Certificate",
    "Config",
    "FieldCtx",
    "PRDecomposition",
    "PRTerm",
    "Tensor",
    "analytic_rank",
    "check_inequalities",
    "decompose",
    "estimate_dim",
    "ff_make",
    "find_regular_point",
    "parse_field",
    "pr_bruteforce",
    "pr_leq_one",
    "verify_decomposition",
    "w_tensor",
]
