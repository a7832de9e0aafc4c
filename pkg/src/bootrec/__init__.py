"""Bootstrap percolation with recovery: simulation, tile model, transforms and threshold numerics."""

__version__ = "0.1.0"

from .analytics import (AnalyticContext, CrossingSequence, beta, crossing_sequence, g,
                        lambda_, lambda_interval, lambda_value, lambda_with_error, poly_F,
                        q_of_p, threshold_p)
from .dynamics import (Direction, Kind, Outcome, Rule, find_spanned_subrect, internally_spanned,
                       percolates, run_dynamics, spans_from, step, step_bootstrap, step_recovery,
                       traversable)
from .grid import AsciiParseError, Grid, Rect, format_ascii, parse_ascii
from .montecarlo import (Cell, CriticalSearch, Estimate, Model, SweepRow, estimate_crossing,
                         estimate_percolation, run_sweep, search_critical_p)
from .search import find_bvsr
from .tiles import (ColumnClass, Tile, TileConfig, TileKind, classify_columns, find_triples,
                    has_double_gap, project_sites, sample_tile_config)
from .transforms import (find_triplets, isolated_sites, minus_transform, plus_transform,
                         triplet_catalog)

__all__ = [
    "__version__",
    "AnalyticContext",
    "CrossingSequence",
    "beta",
    "crossing_sequence",
    "g",
    "lambda_",
    "lambda_interval",
    "lambda_value",
    "lambda_with_error",
    "poly_F",
    "q_of_p",
    "threshold_p",
    "Direction",
    "Kind",
    "Outcome",
    "Rule",
    "find_spanned_subrect",
    "internally_spanned",
    "percolates",
    "run_dynamics",
    "spans_from",
    "step",
    "step_bootstrap",
    "step_recovery",
    "traversable",
    "Cell",
    "CriticalSearch",
    "Estimate",
    "Model",
    "SweepRow",
    "estimate_crossing",
    "estimate_percolation",
    "run_sweep",
    "search_critical_p",
    "ColumnClass",
    "Tile",
    "TileConfig",
    "TileKind",
    "classify_columns",
    "find_triples",
    "has_double_gap",
    "project_sites",
    "sample_tile_config",
    "find_triplets",
    "isolated_sites",
    "minus_transform",
    "plus_transform",
    "triplet_catalog",
    "AsciiParseError",
    "Grid",
    "Rect",
    "format_ascii",
    "parse_ascii",
    "find_bvsr",
]
