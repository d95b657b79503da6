"""MAP, M-best and diverse M-best solutions of tree-structured discrete models."""
from .baseline import divmbest_next
from .diverse import (
    DiversitySpec,
    diverse_m_accumulate,
    diverse_next_accumulate,
    diverse_next_klayer,
    parse_diversity,
    write_diversity,
)
from .dpcore import MessageTable, backtrack, map_solve, message_pass
from .generate import RandomTreeConfig, generate_tree
from .layered import Mode, m_best_sequential, second_best
from .model import (
    InvalidModelError,
    Labeling,
    ParseError,
    TreeModel,
    energy_of,
    load_model,
    parse_model,
    validate,
    write_model,
)
from .report import SolverReport, Status

__version__ = "0.1.0"

__all__ = [
    "DiversitySpec",
    "InvalidModelError",
    "Labeling",
    "MessageTable",
    "Mode",
    "ParseError",
    "RandomTreeConfig",
    "SolverReport",
    "Status",
    "TreeModel",
    "backtrack",
    "diverse_m_accumulate",
    "diverse_next_accumulate",
    "diverse_next_klayer",
    "divmbest_next",
    "energy_of",
    "generate_tree",
    "load_model",
    "m_best_sequential",
    "map_solve",
    "message_pass",
    "parse_diversity",
    "parse_model",
    "second_best",
    "validate",
    "write_diversity",
    "write_model",
]
