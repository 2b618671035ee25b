"""promptgrid: accessible descriptions and comparisons for text-to-image results."""

from .model import (
    AnswerCell,
    AnswerMatrix,
    DescriptionBundle,
    GenerationSession,
    ImageCandidate,
    MatrixRow,
    Question,
    RowSummary,
    cell_at,
    validate_session_input,
)
from .gateway import FixtureStore, GatewayMode, ModelGateway
from .pipeline import Pipeline, PipelineResult
from .tables import TableSet, build_tables, linearize, render_html, render_json

__version__ = "0.1.0"

__all__ = [
    "AnswerCell",
    "AnswerMatrix",
    "DescriptionBundle",
    "FixtureStore",
    "GatewayMode",
    "GenerationSession",
    "ImageCandidate",
    "MatrixRow",
    "ModelGateway",
    "Pipeline",
    "PipelineResult",
    "Question",
    "RowSummary",
    "TableSet",
    "build_tables",
    "cell_at",
    "linearize",
    "render_html",
    "render_json",
    "validate_session_input",
    "__version__",
]
