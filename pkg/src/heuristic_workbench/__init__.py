"""Workbench for developing domain-specific usability heuristics in eight stages."""

from .advisor import RefinementAdvice, Verdict, advise
from .indicators import IndicatorReport, Rate, build_report
from .model import (
    Classification,
    DimensionItem,
    DimensionKind,
    DomainProfile,
    EvaluationDataset,
    Heuristic,
    HeuristicCatalog,
    HeuristicId,
    ProblemRecord,
    partition_problems,
)
from .persistence import load_project, save_project
from .project import ProjectState, advance_stage, loop_back, new_project
from .specificity import GsiTable, SpecificityMatrix, build_matrix, compute_fsi, compute_gsi, select_heuristics
from .templates import HeuristicTemplate, parse_template, render_template

__version__ = "0.1.0"
