"""Session engine for exploratory text-to-image prompting.

Exploration history as a tree of prompt and subspace nodes, Cartesian
prompt subspaces with dimensional-stacking grids, a deterministic mock
generation backend, versioned persistence, and activity analytics - plus
an HTTP facade and CLI in :mod:`promptmap.service` / :mod:`promptmap.cli`.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .diff import DiffSpan, apply_spans, diff_prompts, tokenize
from .gateway import BackendConfig, GenerationGateway, Job, MockBackend, RemoteBackend
from .graph import (
    GenParams,
    ImageRecord,
    MinimapEntry,
    Node,
    PromptRecord,
    Session,
    Viewport,
    add_root_input,
    attach_images,
    commit_input,
    create_session,
    extract_image,
    fork_node,
    mark_image,
    minimap_model,
    move_node,
    node_score,
    node_text,
    revert_to_draft,
    set_node_flag,
)
from .grid import CellRef, GridLevel, NestedGrid, grid_depth, grid_layout, leaf_positions
from .mockgen import content_hash, mock_generate
from .analytics import Metrics, activity_histogram, compute_metrics, replay_events
from .store import load_session, save_session, session_to_document, sessions_equal
from .subspace import (
    Cell,
    Dimension,
    FixedAssignment,
    Placeholder,
    Subspace,
    Template,
    commit_cell,
    create_group_subspace,
    define_dimension,
    edit_dimension,
    expand_chain,
    extract_cell,
    gray_order,
    infer_group,
    instantiate,
    mark_cell_image,
)

__version__ = "0.1.0"
