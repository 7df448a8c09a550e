"""Entity alignment toolkit for pairs of knowledge graphs.

The pipeline: a weight-shared two-layer graph-convolutional encoder with
highway-gated relation/attribute channels produces structural embeddings,
an MLP head projects externally produced text embeddings into the same
space, both are fused with a tunable weight, and candidate equivalent
entities are ranked by cosine similarity with Hits@K reporting.
"""

import os
import sys


def _cap_kernel_threads() -> None:
    # Must run before numpy is first imported or the cap has no effect.
    cap = os.environ.get("KGALIGN_THREADS")
    if not cap or "numpy" in sys.modules:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


_cap_kernel_threads()

from kgalign.errors import (  # noqa: E402
    KgAlignError,
    ConfigError,
    ParseError,
    CheckpointError,
    ContractViolation,
)

__version__ = "0.1.0"

__all__ = [
    "KgAlignError",
    "ConfigError",
    "ParseError",
    "CheckpointError",
    "ContractViolation",
    "__version__",
]
