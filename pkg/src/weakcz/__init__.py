"""Discrete verification of weak-type endpoint bounds for multilinear singular integrals."""
__version__ = "0.1.0"

from .decomposition import build_ball_system, split
from .dyadic import DyadicCube, whitney
from .grid import CellSet, GridFunction, GridSpec
from .kernel import KernelSpec, kernel_by_name
from .maximal import maximal_function
from .operator import AtomicMeasure, TruncationPolicy, apply_atoms, apply_functions, apply_mixed
from .verify.ledger import InequalityLedger
from .verify.lemma1 import lemma1_sum
from .verify.quasinorm import weak_quasinorm
from .verify.theorem1 import theorem1_ledger
from .verify.theorem2 import theorem2_ledger

__all__ = [
    "AtomicMeasure", "CellSet", "DyadicCube", "GridFunction", "GridSpec", "InequalityLedger",
    "KernelSpec", "TruncationPolicy", "apply_atoms", "apply_functions", "apply_mixed",
    "build_ball_system", "kernel_by_name", "lemma1_sum", "maximal_function", "split",
    "theorem1_ledger", "theorem2_ledger", "weak_quasinorm", "whitney",
]
