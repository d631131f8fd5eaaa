from importlib.metadata import version

from crlscore.graph import d_separated, junction_census
from crlscore.model import (
    CausalGraph,
    CrlScoreError,
    DataTable,
    load_graph,
    load_table,
)
from crlscore.scoring import (
    build_scorecard,
    origami_area,
    origami_score,
    radar_area,
)

__all__ = [
    "CausalGraph",
    "CrlScoreError",
    "DataTable",
    "load_graph",
    "load_table",
    "d_separated",
    "junction_census",
    "radar_area",
    "origami_area",
    "origami_score",
    "build_scorecard",
    "__version__",
]
__version__ = version("crlscore")
